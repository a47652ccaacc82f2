#pragma once

// Canonical serialization and typed parsing. Canonical form: UTF-8 JSON,
// no insignificant whitespace, known keys in schema declaration order,
// provider_extensions keys sorted lexicographically (recursively). Parsing a
// canonical document and re-serializing it is byte-identical.

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "routereceipt/receipt.hpp"
#include "routereceipt/validation.hpp"

namespace routereceipt {

namespace detail {

inline jdoc sort_keys_recursively(const jdoc& v) {
    if (v.is_object()) {
        std::vector<std::string> keys;
        keys.reserve(v.size());
        for (const auto& [k, unused] : v.items()) keys.push_back(k);
        std::sort(keys.begin(), keys.end());
        jdoc out;
        for (const auto& k : keys) out[k] = sort_keys_recursively(v.at(k));
        return out;
    }
    if (v.is_array()) {
        jdoc out = jdoc::array();
        for (const auto& item : v) out.push_back(sort_keys_recursively(item));
        return out;
    }
    return v;
}

}  // namespace detail

inline jdoc to_json(const ServiceTierRecord& r) {
    jdoc j;
    if (r.requested) j["requested"] = *r.requested;
    j["effective"] = r.effective;
    if (r.change_reason) j["change_reason"] = to_string(*r.change_reason);
    return j;
}

inline jdoc to_json(const EffortRecord& r) {
    jdoc j;
    if (r.requested) j["requested"] = to_string(*r.requested);
    j["effective_status"] = to_string(r.effective_status);
    return j;
}

inline jdoc to_json(const ToolUse& t) {
    jdoc j;
    j["name"] = t.name;
    j["invocation_count"] = t.invocation_count;
    if (t.result_refs) j["result_refs"] = *t.result_refs;
    if (t.redacted) j["redacted"] = *t.redacted;
    return j;
}

inline jdoc to_json(const RetrievalSummary& r) {
    jdoc j = jdoc::object();
    if (r.source_classes) j["source_classes"] = *r.source_classes;
    if (r.retrieved_item_count) j["retrieved_item_count"] = *r.retrieved_item_count;
    if (r.redacted) j["redacted"] = *r.redacted;
    return j;
}

inline jdoc to_json(const ToolsRecord& r) {
    jdoc j;
    if (r.allowed) j["allowed"] = *r.allowed;
    j["used"] = jdoc::array();
    for (const auto& t : r.used) j["used"].push_back(to_json(t));
    if (r.retrieval_summary) j["retrieval_summary"] = to_json(*r.retrieval_summary);
    return j;
}

inline jdoc to_json(const ContextRecord& r) {
    jdoc j;
    j["input_truncated"] = to_string(r.input_truncated);
    if (r.retrieved_item_count) j["retrieved_item_count"] = *r.retrieved_item_count;
    if (r.context_window_class) j["context_window_class"] = to_string(*r.context_window_class);
    return j;
}

inline jdoc to_json(const FallbackRecord& r) {
    jdoc j;
    j["status"] = to_string(r.status);
    if (r.from) j["from"] = *r.from;
    if (r.to) j["to"] = *r.to;
    if (r.reason) j["reason"] = to_string(*r.reason);
    return j;
}

inline jdoc to_json(const SafetyRecord& r) {
    jdoc j;
    j["status"] = to_string(r.status);
    if (r.category) j["category"] = *r.category;
    if (r.visible_action) j["visible_action"] = to_string(*r.visible_action);
    return j;
}

inline jdoc to_json(const ProviderHop& h) {
    jdoc j;
    j["role"] = to_string(h.role);
    if (h.provider) j["provider"] = *h.provider;
    if (h.model) j["model"] = *h.model;
    if (h.redacted) j["redacted"] = *h.redacted;
    return j;
}

inline jdoc to_json(const RedactionEntry& e) {
    jdoc j;
    j["field"] = e.field;
    j["reason"] = to_string(e.reason);
    if (e.visible_to) {
        jdoc v = jdoc::array();
        for (auto a : *e.visible_to) v.push_back(to_string(a));
        j["visible_to"] = v;
    }
    return j;
}

inline jdoc receipt_to_json(const RouteReceipt& r) {
    jdoc j;
    j["schema_version"] = r.schema_version;
    j["receipt_id"] = r.receipt_id;
    j["request_id"] = r.request_id;
    j["served_at"] = r.served_at;
    if (r.requested_model) j["requested_model"] = *r.requested_model;
    if (r.resolved_model) j["resolved_model"] = *r.resolved_model;
    j["model_identifier_type"] = to_string(r.model_identifier_type);
    if (r.service_tier) j["service_tier"] = to_json(*r.service_tier);
    if (r.effort) j["effort"] = to_json(*r.effort);
    if (r.tools) j["tools"] = to_json(*r.tools);
    if (r.context) j["context"] = to_json(*r.context);
    j["fallback"] = to_json(r.fallback);
    j["safety"] = to_json(r.safety);
    j["region_class"] = to_string(r.region_class);
    if (r.provider_chain) {
        jdoc hops = jdoc::array();
        for (const auto& h : *r.provider_chain) hops.push_back(to_json(h));
        j["provider_chain"] = hops;
    }
    j["completion_status"] = to_string(r.completion_status);
    j["redactions"] = jdoc::array();
    for (const auto& e : r.redactions) j["redactions"].push_back(to_json(e));
    if (r.retention_class) j["retention_class"] = to_string(*r.retention_class);
    if (r.provider_extensions) j["provider_extensions"] = detail::sort_keys_recursively(*r.provider_extensions);
    return j;
}

namespace detail {

template <typename E>
E req_enum(const jdoc& j, const char* key) {
    return *enum_from_string<E>(j.at(key).template get_ref<const std::string&>());
}

template <typename E>
std::optional<E> opt_enum(const jdoc& j, const char* key) {
    if (auto it = j.find(key); it != j.end()) {
        return enum_from_string<E>(it->template get_ref<const std::string&>());
    }
    return std::nullopt;
}

inline std::optional<std::string> opt_string(const jdoc& j, const char* key) {
    if (auto it = j.find(key); it != j.end()) return it->get<std::string>();
    return std::nullopt;
}

inline std::optional<std::int64_t> opt_int(const jdoc& j, const char* key) {
    if (auto it = j.find(key); it != j.end()) return it->get<std::int64_t>();
    return std::nullopt;
}

inline std::optional<bool> opt_bool(const jdoc& j, const char* key) {
    if (auto it = j.find(key); it != j.end()) return it->get<bool>();
    return std::nullopt;
}

inline std::optional<std::vector<std::string>> opt_string_list(const jdoc& j, const char* key) {
    if (auto it = j.find(key); it != j.end()) return it->get<std::vector<std::string>>();
    return std::nullopt;
}

}  // namespace detail

// Conversion from an already schema-validated document. Callers go through
// parse_receipt unless they hold a document known valid.
inline RouteReceipt receipt_from_json_unchecked(const jdoc& j) {
    using namespace detail;
    RouteReceipt r;
    r.schema_version = j.at("schema_version").get<std::string>();
    r.receipt_id = j.at("receipt_id").get<std::string>();
    r.request_id = j.at("request_id").get<std::string>();
    r.served_at = j.at("served_at").get<std::string>();
    r.requested_model = opt_string(j, "requested_model");
    r.resolved_model = opt_string(j, "resolved_model");
    r.model_identifier_type = req_enum<ModelIdentifierType>(j, "model_identifier_type");
    if (auto it = j.find("service_tier"); it != j.end()) {
        ServiceTierRecord t;
        t.requested = opt_string(*it, "requested");
        t.effective = it->at("effective").get<std::string>();
        t.change_reason = opt_enum<TierChangeReason>(*it, "change_reason");
        r.service_tier = std::move(t);
    }
    if (auto it = j.find("effort"); it != j.end()) {
        EffortRecord e;
        e.requested = opt_enum<EffortLevel>(*it, "requested");
        e.effective_status = req_enum<EffortStatus>(*it, "effective_status");
        r.effort = e;
    }
    if (auto it = j.find("tools"); it != j.end()) {
        ToolsRecord t;
        t.allowed = opt_string_list(*it, "allowed");
        for (const auto& u : it->at("used")) {
            ToolUse tu;
            tu.name = u.at("name").get<std::string>();
            tu.invocation_count = u.at("invocation_count").get<std::int64_t>();
            tu.result_refs = opt_string_list(u, "result_refs");
            tu.redacted = opt_bool(u, "redacted");
            t.used.push_back(std::move(tu));
        }
        if (auto rs = it->find("retrieval_summary"); rs != it->end()) {
            RetrievalSummary sum;
            sum.source_classes = opt_string_list(*rs, "source_classes");
            sum.retrieved_item_count = opt_int(*rs, "retrieved_item_count");
            sum.redacted = opt_bool(*rs, "redacted");
            t.retrieval_summary = std::move(sum);
        }
        r.tools = std::move(t);
    }
    if (auto it = j.find("context"); it != j.end()) {
        ContextRecord c;
        c.input_truncated = req_enum<TruncationState>(*it, "input_truncated");
        c.retrieved_item_count = opt_int(*it, "retrieved_item_count");
        c.context_window_class = opt_enum<ContextWindowClass>(*it, "context_window_class");
        r.context = c;
    }
    {
        const auto& f = j.at("fallback");
        r.fallback.status = req_enum<FallbackStatus>(f, "status");
        r.fallback.from = opt_string(f, "from");
        r.fallback.to = opt_string(f, "to");
        r.fallback.reason = opt_enum<FallbackReason>(f, "reason");
    }
    {
        const auto& s = j.at("safety");
        r.safety.status = req_enum<SafetyStatus>(s, "status");
        r.safety.category = opt_string(s, "category");
        r.safety.visible_action = opt_enum<SafetyAction>(s, "visible_action");
    }
    r.region_class = req_enum<RegionClass>(j, "region_class");
    if (auto it = j.find("provider_chain"); it != j.end()) {
        std::vector<ProviderHop> hops;
        for (const auto& h : *it) {
            ProviderHop hop;
            hop.role = req_enum<HopRole>(h, "role");
            hop.provider = opt_string(h, "provider");
            hop.model = opt_string(h, "model");
            hop.redacted = opt_bool(h, "redacted");
            hops.push_back(std::move(hop));
        }
        r.provider_chain = std::move(hops);
    }
    r.completion_status = req_enum<CompletionStatus>(j, "completion_status");
    for (const auto& e : j.at("redactions")) {
        RedactionEntry entry;
        entry.field = e.at("field").get<std::string>();
        entry.reason = req_enum<RedactionReason>(e, "reason");
        if (auto vt = e.find("visible_to"); vt != e.end()) {
            std::vector<Audience> audiences;
            for (const auto& a : *vt) {
                audiences.push_back(*enum_from_string<Audience>(a.get_ref<const std::string&>()));
            }
            entry.visible_to = std::move(audiences);
        }
        r.redactions.push_back(std::move(entry));
    }
    r.retention_class = opt_enum<RetentionClass>(j, "retention_class");
    if (auto it = j.find("provider_extensions"); it != j.end()) {
        r.provider_extensions = detail::sort_keys_recursively(*it);
    }
    return r;
}

inline RouteReceipt parse_receipt(const jdoc& doc) {
    ValidationReport report = validate_json(doc);
    if (!report.valid()) throw ValidationError(std::move(report));
    return receipt_from_json_unchecked(doc);
}

inline RouteReceipt parse_receipt_text(std::string_view text) {
    jdoc doc = jdoc::parse(text, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) {
        ValidationReport report;
        report.errors.push_back({"", ErrorKind::bad_type, "input is not well-formed JSON"});
        throw ValidationError(std::move(report));
    }
    return parse_receipt(doc);
}

inline std::string canonical_serialize(const RouteReceipt& r) { return receipt_to_json(r).dump(); }

}  // namespace routereceipt

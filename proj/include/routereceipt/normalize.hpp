#pragma once

// Fragment extraction and merging. Each provider surface exposes a few route
// facts per answer; extraction maps exactly the documented fields of one
// surface into a partial receipt, and merge assembles fragments plus an
// envelope into a full, schema-valid receipt. Fields nobody observed are
// recorded, not guessed: fallback/safety default to status "unknown" and
// unobserved optional records get a not_collected redaction entry.
//
// Surfaces and what they expose:
//   openai_priority     requested/effective service tier; a priority->default
//                       downgrade is a documented capacity fallback, so the
//                       fragment then also carries fallback {occurred, capacity}
//   anthropic_tiers     assigned tier in response usage (+ requested tier)
//   bedrock_tiers       requested/resolved service tier
//   openai_web_search   web-search invocations and citation refs
//   openrouter_fallback requested vs returned model, fallback occurrence
//   simulated           the in-repo provider; exposes every record
//
// Raw shapes are this repo's convention, frozen as fixture files named
// <surface>.json; they are not live API responses.

#include <set>
#include <string>
#include <vector>

#include "routereceipt/consistency.hpp"
#include "routereceipt/ids.hpp"

namespace routereceipt {

enum class ProviderSurface {
    openai_priority,
    anthropic_tiers,
    bedrock_tiers,
    openai_web_search,
    openrouter_fallback,
    simulated
};

template <>
struct EnumTraits<ProviderSurface> {
    static constexpr std::array<std::string_view, 6> names{
        "openai_priority", "anthropic_tiers",     "bedrock_tiers",
        "openai_web_search", "openrouter_fallback", "simulated"};
};

struct ExtractError : Error {
    using Error::Error;
};

struct MergeError : Error {
    std::string field;

    MergeError(std::string field_path, const std::string& left, const std::string& right)
        : Error("conflicting fragment values for " + field_path + ": " + left + " vs " + right),
          field(std::move(field_path)) {}
};

struct ReceiptFragment {
    ProviderSurface surface = ProviderSurface::simulated;
    std::string observed_at;  // RFC 3339 UTC
    std::optional<std::string> requested_model;
    std::optional<std::string> resolved_model;
    std::optional<ServiceTierRecord> service_tier;
    std::optional<EffortRecord> effort;    // simulated surface only
    std::optional<ToolsRecord> tools;
    std::optional<ContextRecord> context;  // simulated surface only
    std::optional<FallbackRecord> fallback;
    std::optional<SafetyRecord> safety;    // simulated surface only
    std::vector<RedactionEntry> redactions;

    friend bool operator==(const ReceiptFragment&, const ReceiptFragment&) = default;
};

struct Envelope {
    std::string receipt_id;
    std::string request_id;
    std::string served_at;
    ModelIdentifierType model_identifier_type = ModelIdentifierType::unknown;
    RegionClass region_class = RegionClass::unknown;
    CompletionStatus completion_status = CompletionStatus::unknown;
    std::optional<RetentionClass> retention_class;
};

// The receipt-shaped view of a fragment: present partial fields in schema
// order, redactions always last. Surface and observed_at are extraction
// metadata, not receipt content.
inline jdoc fragment_to_json(const ReceiptFragment& f) {
    jdoc j;
    if (f.requested_model) j["requested_model"] = *f.requested_model;
    if (f.resolved_model) j["resolved_model"] = *f.resolved_model;
    if (f.service_tier) j["service_tier"] = to_json(*f.service_tier);
    if (f.effort) j["effort"] = to_json(*f.effort);
    if (f.tools) j["tools"] = to_json(*f.tools);
    if (f.context) j["context"] = to_json(*f.context);
    if (f.fallback) j["fallback"] = to_json(*f.fallback);
    if (f.safety) j["safety"] = to_json(*f.safety);
    j["redactions"] = jdoc::array();
    for (const auto& e : f.redactions) j["redactions"].push_back(to_json(e));
    return j;
}

inline std::string canonical_fragment(const ReceiptFragment& f) { return fragment_to_json(f).dump(); }

namespace detail {

inline const jdoc& require_key(const jdoc& j, const char* key, const char* where) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw ExtractError(std::string("missing key \"") + key + "\" in " + where);
    }
    return *it;
}

inline std::optional<std::string> maybe_string(const jdoc& j, const char* key) {
    if (auto it = j.find(key); it != j.end() && it->is_string()) return it->get<std::string>();
    return std::nullopt;
}

// Tier-change inference: equal tiers -> "none"; a mismatch -> "capacity" only
// where the surface documents capacity-driven downgrade, else "unknown". An
// "auto" request names a routing mode rather than a tier, so no inference.
inline void infer_change_reason(ServiceTierRecord& tier, bool downgrade_documented) {
    if (!tier.requested || *tier.requested == "auto") return;
    if (*tier.requested == tier.effective) {
        tier.change_reason = TierChangeReason::none;
    } else {
        tier.change_reason =
            downgrade_documented ? TierChangeReason::capacity : TierChangeReason::unknown;
    }
}

inline ReceiptFragment extract_openai_priority(const jdoc& raw) {
    ReceiptFragment f;
    f.surface = ProviderSurface::openai_priority;
    const jdoc& response = require_key(raw, "response", "openai_priority metadata");
    ServiceTierRecord tier;
    tier.effective = require_key(response, "service_tier", "openai_priority response").get<std::string>();
    if (auto req = raw.find("request"); req != raw.end()) {
        tier.requested = maybe_string(*req, "service_tier");
    }
    infer_change_reason(tier, /*downgrade_documented=*/true);
    const bool downgraded = tier.change_reason == TierChangeReason::capacity;
    f.service_tier = std::move(tier);
    if (downgraded) {
        FallbackRecord fb;
        fb.status = FallbackStatus::occurred;
        fb.reason = FallbackReason::capacity;
        f.fallback = fb;
    }
    return f;
}

inline ReceiptFragment extract_anthropic_tiers(const jdoc& raw) {
    ReceiptFragment f;
    f.surface = ProviderSurface::anthropic_tiers;
    const jdoc& response = require_key(raw, "response", "anthropic_tiers metadata");
    const jdoc& usage = require_key(response, "usage", "anthropic_tiers response");
    ServiceTierRecord tier;
    tier.effective = require_key(usage, "service_tier", "anthropic_tiers usage").get<std::string>();
    if (auto req = raw.find("request"); req != raw.end()) {
        tier.requested = maybe_string(*req, "service_tier");
    }
    infer_change_reason(tier, /*downgrade_documented=*/true);
    f.service_tier = std::move(tier);
    return f;
}

inline ReceiptFragment extract_bedrock_tiers(const jdoc& raw) {
    ReceiptFragment f;
    f.surface = ProviderSurface::bedrock_tiers;
    const jdoc& response = require_key(raw, "response", "bedrock_tiers metadata");
    ServiceTierRecord tier;
    tier.effective = require_key(response, "serviceTier", "bedrock_tiers response").get<std::string>();
    if (auto req = raw.find("request"); req != raw.end()) {
        tier.requested = maybe_string(*req, "serviceTier");
    }
    infer_change_reason(tier, /*downgrade_documented=*/false);
    f.service_tier = std::move(tier);
    return f;
}

inline ReceiptFragment extract_openai_web_search(const jdoc& raw) {
    ReceiptFragment f;
    f.surface = ProviderSurface::openai_web_search;
    const jdoc& response = require_key(raw, "response", "openai_web_search metadata");
    const jdoc& output = require_key(response, "output", "openai_web_search response");
    std::int64_t calls = 0;
    std::vector<std::string> refs;  // citation URLs, kept as opaque strings
    for (const auto& item : output) {
        const auto type = maybe_string(item, "type").value_or("");
        if (type == "web_search_call") {
            ++calls;
        } else if (type == "message") {
            if (auto content = item.find("content"); content != item.end()) {
                for (const auto& block : *content) {
                    if (auto ann = block.find("annotations"); ann != block.end()) {
                        for (const auto& a : *ann) {
                            if (maybe_string(a, "type").value_or("") == "url_citation") {
                                if (auto url = maybe_string(a, "url")) refs.push_back(*url);
                            }
                        }
                    }
                }
            }
        }
    }
    ToolsRecord tools;
    if (calls > 0) {
        ToolUse use;
        use.name = "web_search";
        use.invocation_count = calls;
        if (!refs.empty()) use.result_refs = std::move(refs);
        tools.used.push_back(std::move(use));
    }
    // zero search calls -> used stays [], which records "no search ran"
    f.tools = std::move(tools);
    return f;
}

inline ReceiptFragment extract_openrouter_fallback(const jdoc& raw) {
    ReceiptFragment f;
    f.surface = ProviderSurface::openrouter_fallback;
    const jdoc& request = require_key(raw, "request", "openrouter_fallback metadata");
    const jdoc& response = require_key(raw, "response", "openrouter_fallback metadata");
    f.requested_model = require_key(request, "model", "openrouter_fallback request").get<std::string>();
    f.resolved_model = require_key(response, "model", "openrouter_fallback response").get<std::string>();
    FallbackRecord fb;
    fb.status = (*f.requested_model == *f.resolved_model) ? FallbackStatus::none
                                                          : FallbackStatus::occurred;
    f.fallback = fb;
    return f;
}

inline ReceiptFragment extract_simulated(const jdoc& raw) {
    ReceiptFragment f;
    f.surface = ProviderSurface::simulated;
    const jdoc& response = require_key(raw, "response", "simulated metadata");
    const jdoc* request = nullptr;
    if (auto it = raw.find("request"); it != raw.end()) request = &*it;

    if (request) f.requested_model = maybe_string(*request, "model");
    f.resolved_model = maybe_string(response, "model");

    if (auto eff = maybe_string(response, "service_tier")) {
        ServiceTierRecord tier;
        tier.effective = *eff;
        if (request) tier.requested = maybe_string(*request, "service_tier");
        if (auto reason = maybe_string(response, "tier_change_reason")) {
            tier.change_reason = enum_from_string<TierChangeReason>(*reason);
        }
        f.service_tier = std::move(tier);
    }

    if (auto st = maybe_string(response, "effort_status")) {
        EffortRecord effort;
        if (request) {
            if (auto lvl = maybe_string(*request, "effort")) {
                effort.requested = enum_from_string<EffortLevel>(*lvl);
            }
        }
        effort.effective_status = enum_from_string<EffortStatus>(*st).value_or(EffortStatus::unknown);
        f.effort = effort;
    }

    if (auto it = response.find("tools"); it != response.end()) {
        ToolsRecord tools;
        if (request) {
            if (auto allowed = request->find("tools_allowed"); allowed != request->end()) {
                tools.allowed = allowed->get<std::vector<std::string>>();
            }
        }
        for (const auto& t : *it) {
            ToolUse use;
            use.name = require_key(t, "name", "simulated tool entry").get<std::string>();
            use.invocation_count = t.value("invocations", std::int64_t{0});
            if (auto refs = t.find("result_refs"); refs != t.end()) {
                use.result_refs = refs->get<std::vector<std::string>>();
            }
            tools.used.push_back(std::move(use));
        }
        f.tools = std::move(tools);
    }

    if (auto it = response.find("context"); it != response.end()) {
        ContextRecord ctx;
        ctx.input_truncated = it->value("input_truncated", false) ? TruncationState::truncated
                                                                  : TruncationState::not_truncated;
        if (auto count = it->find("retrieved_item_count"); count != it->end()) {
            ctx.retrieved_item_count = count->get<std::int64_t>();
        }
        f.context = ctx;
    }

    if (auto it = response.find("fallback"); it != response.end()) {
        FallbackRecord fb;
        const bool occurred = it->value("occurred", false);
        fb.status = occurred ? FallbackStatus::occurred : FallbackStatus::none;
        fb.from = maybe_string(*it, "from");
        fb.to = maybe_string(*it, "to");
        if (auto reason = maybe_string(*it, "reason")) {
            fb.reason = enum_from_string<FallbackReason>(*reason);
        }
        f.fallback = fb;
    }

    if (auto it = response.find("safety"); it != response.end()) {
        SafetyRecord safety;
        safety.status = it->value("intervened", false) ? SafetyStatus::intervened : SafetyStatus::none;
        safety.category = maybe_string(*it, "category");
        if (auto action = maybe_string(*it, "visible_action")) {
            safety.visible_action = enum_from_string<SafetyAction>(*action);
        }
        f.safety = safety;
    }

    return f;
}

}  // namespace detail

inline ReceiptFragment extract_fragment(ProviderSurface surface, const jdoc& raw,
                                        std::string observed_at = {}) {
    if (!raw.is_object()) throw ExtractError("provider metadata must be a JSON object");
    ReceiptFragment f;
    switch (surface) {
        case ProviderSurface::openai_priority: f = detail::extract_openai_priority(raw); break;
        case ProviderSurface::anthropic_tiers: f = detail::extract_anthropic_tiers(raw); break;
        case ProviderSurface::bedrock_tiers: f = detail::extract_bedrock_tiers(raw); break;
        case ProviderSurface::openai_web_search: f = detail::extract_openai_web_search(raw); break;
        case ProviderSurface::openrouter_fallback: f = detail::extract_openrouter_fallback(raw); break;
        case ProviderSurface::simulated: f = detail::extract_simulated(raw); break;
    }
    f.observed_at = observed_at.empty() ? system_utc_now() : std::move(observed_at);
    return f;
}

struct MergeResult {
    RouteReceipt receipt;
    std::vector<ConsistencyWarning> warnings;
};

namespace detail {

// Field names a surface can expose, used for not_collected bookkeeping.
inline const std::set<std::string>& documented_fields(ProviderSurface s) {
    static const std::set<std::string> tier{"service_tier"};
    static const std::set<std::string> tier_fb{"service_tier", "fallback"};
    static const std::set<std::string> tools{"tools"};
    static const std::set<std::string> models_fb{"requested_model", "resolved_model", "fallback"};
    static const std::set<std::string> all{"requested_model", "resolved_model", "service_tier",
                                           "effort",          "tools",          "context",
                                           "fallback",        "safety"};
    switch (s) {
        case ProviderSurface::openai_priority: return tier_fb;
        case ProviderSurface::anthropic_tiers: return tier;
        case ProviderSurface::bedrock_tiers: return tier;
        case ProviderSurface::openai_web_search: return tools;
        case ProviderSurface::openrouter_fallback: return models_fb;
        case ProviderSurface::simulated: return all;
    }
    return all;
}

inline jdoc to_json_value(const std::string& v) { return jdoc(v); }
inline jdoc to_json_value(const ServiceTierRecord& v) { return to_json(v); }
inline jdoc to_json_value(const EffortRecord& v) { return to_json(v); }
inline jdoc to_json_value(const ToolsRecord& v) { return to_json(v); }
inline jdoc to_json_value(const ContextRecord& v) { return to_json(v); }
inline jdoc to_json_value(const FallbackRecord& v) { return to_json(v); }
inline jdoc to_json_value(const SafetyRecord& v) { return to_json(v); }

template <typename T>
void merge_field(const char* name, std::optional<T>& into, const std::optional<T>& from) {
    if (!from) return;
    if (into && !(*into == *from)) {
        throw MergeError("/" + std::string(name), to_json_value(*into).dump(),
                         to_json_value(*from).dump());
    }
    into = from;
}

}  // namespace detail

// Merge policy: conflicting fragment values are a hard error (a receipt is an
// audit record; silent overwrites forge history). Identical values coexist.
inline MergeResult merge(const Envelope& envelope, const std::vector<ReceiptFragment>& fragments) {
    RouteReceipt r;
    r.receipt_id = envelope.receipt_id.empty() ? mint_receipt_id() : envelope.receipt_id;
    r.request_id = envelope.request_id;
    r.served_at = envelope.served_at;
    r.model_identifier_type = envelope.model_identifier_type;
    r.region_class = envelope.region_class;
    r.completion_status = envelope.completion_status;
    r.retention_class = envelope.retention_class;

    std::optional<FallbackRecord> fallback;
    std::optional<SafetyRecord> safety;
    std::set<std::string> observed;
    auto note = [&observed](const char* name, bool present) {
        if (present) observed.insert(name);
    };
    for (const auto& f : fragments) {
        detail::merge_field("requested_model", r.requested_model, f.requested_model);
        detail::merge_field("resolved_model", r.resolved_model, f.resolved_model);
        detail::merge_field("service_tier", r.service_tier, f.service_tier);
        detail::merge_field("effort", r.effort, f.effort);
        detail::merge_field("tools", r.tools, f.tools);
        detail::merge_field("context", r.context, f.context);
        detail::merge_field("fallback", fallback, f.fallback);
        detail::merge_field("safety", safety, f.safety);
        note("requested_model", f.requested_model.has_value());
        note("resolved_model", f.resolved_model.has_value());
        note("service_tier", f.service_tier.has_value());
        note("effort", f.effort.has_value());
        note("tools", f.tools.has_value());
        note("context", f.context.has_value());
        note("fallback", f.fallback.has_value());
        note("safety", f.safety.has_value());
        for (const auto& entry : f.redactions) r.redactions.push_back(entry);
    }
    r.fallback = fallback.value_or(FallbackRecord{FallbackStatus::unknown, {}, {}, {}});
    r.safety = safety.value_or(SafetyRecord{SafetyStatus::unknown, {}, {}});

    // Expected-but-unobserved fields become explicit not_collected entries.
    // With no fragments at all, the expectation is the full documented
    // optional-record vocabulary.
    std::set<std::string> expected;
    if (fragments.empty()) {
        expected = {"service_tier", "effort", "tools", "context"};
    } else {
        for (const auto& f : fragments) {
            const auto& fields = detail::documented_fields(f.surface);
            expected.insert(fields.begin(), fields.end());
        }
    }
    static constexpr std::array<std::string_view, 8> schema_order{
        "requested_model", "resolved_model", "service_tier", "effort",
        "tools",           "context",        "fallback",     "safety"};
    for (auto name : schema_order) {
        const std::string key(name);
        if (expected.count(key) && !observed.count(key)) {
            r.redactions.push_back({"/" + key, RedactionReason::not_collected, std::nullopt});
        }
    }

    MergeResult result{std::move(r), {}};
    result.warnings = check_consistency(result.receipt);
    return result;
}

}  // namespace routereceipt

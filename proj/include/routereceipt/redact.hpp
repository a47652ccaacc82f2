#pragma once

// Audience-scoped views. One receipt object serves four audiences by hiding
// fields per policy and keeping the bookkeeping: optional fields are removed,
// required fields are generalized to their "redacted" member, and every
// hidden field carries a redaction entry naming who may still see it. Views
// stay schema-valid.
//
// Policy rules use JSON-pointer field paths. visible_to sets are upward-
// closed at load time (naming an audience admits every higher one), so
// disclosure is monotone end_user -> developer -> administrator -> auditor
// for every loadable policy, and the auditor view under an empty policy is
// the receipt itself.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "routereceipt/consistency.hpp"

namespace routereceipt {

struct PolicyLoadError : Error {
    using Error::Error;
};

struct RedactionRule {
    std::string field_path;  // JSON pointer, e.g. "/safety/category"
    RedactionReason reason = RedactionReason::contractual;
    std::vector<Audience> visible_to;  // upward-closed, ascending

    friend bool operator==(const RedactionRule&, const RedactionRule&) = default;
};

struct RedactionPolicy {
    std::vector<RedactionRule> rules;
    // Audience floors by field path; fields below the floor are hidden with
    // reason "contractual".
    std::map<std::string, Audience> default_visibility;

    friend bool operator==(const RedactionPolicy&, const RedactionPolicy&) = default;
};

struct AudienceView {
    Audience audience = Audience::end_user;
    RouteReceipt receipt;  // hidden fields removed/generalized; redactions retained
};

namespace detail {

enum class HideAction { remove, generalize };

// Closed table of paths a policy may hide. Required fields without a
// "redacted" member cannot be hidden in a schema-valid way and are rejected
// at load time.
inline const std::map<std::string, HideAction>& hideable_paths() {
    static const std::map<std::string, HideAction> table{
        {"/requested_model", HideAction::remove},
        {"/resolved_model", HideAction::remove},
        {"/service_tier", HideAction::remove},
        {"/service_tier/requested", HideAction::remove},
        {"/service_tier/change_reason", HideAction::remove},
        {"/effort", HideAction::remove},
        {"/effort/requested", HideAction::remove},
        {"/effort/effective_status", HideAction::generalize},
        {"/tools", HideAction::remove},
        {"/tools/allowed", HideAction::remove},
        {"/tools/retrieval_summary", HideAction::remove},
        {"/context", HideAction::remove},
        {"/context/input_truncated", HideAction::generalize},
        {"/context/retrieved_item_count", HideAction::remove},
        {"/context/context_window_class", HideAction::remove},
        {"/fallback", HideAction::generalize},
        {"/fallback/status", HideAction::generalize},
        {"/fallback/from", HideAction::remove},
        {"/fallback/to", HideAction::remove},
        {"/fallback/reason", HideAction::remove},
        {"/safety", HideAction::generalize},
        {"/safety/status", HideAction::generalize},
        {"/safety/category", HideAction::remove},
        {"/safety/visible_action", HideAction::remove},
        {"/region_class", HideAction::generalize},
        {"/provider_chain", HideAction::remove},
        {"/retention_class", HideAction::remove},
        {"/provider_extensions", HideAction::remove},
    };
    return table;
}

inline std::vector<Audience> upward_closure(const std::vector<Audience>& audiences) {
    if (audiences.empty()) return {};
    Audience lowest = audiences.front();
    for (auto a : audiences) {
        if (audience_rank(a) < audience_rank(lowest)) lowest = a;
    }
    std::vector<Audience> closed;
    for (int r = audience_rank(lowest); r <= audience_rank(Audience::auditor); ++r) {
        closed.push_back(static_cast<Audience>(r));
    }
    return closed;
}

// Returns true when the field was present and is now hidden.
inline bool apply_hide(RouteReceipt& r, const std::string& path, HideAction action) {
    auto hide_tier = [&](auto member) {
        if (!r.service_tier) return false;
        return member(*r.service_tier);
    };
    if (path == "/requested_model") return std::exchange(r.requested_model, std::nullopt).has_value();
    if (path == "/resolved_model") return std::exchange(r.resolved_model, std::nullopt).has_value();
    if (path == "/service_tier") return std::exchange(r.service_tier, std::nullopt).has_value();
    if (path == "/service_tier/requested") {
        return hide_tier([](ServiceTierRecord& t) {
            return std::exchange(t.requested, std::nullopt).has_value();
        });
    }
    if (path == "/service_tier/change_reason") {
        return hide_tier([](ServiceTierRecord& t) {
            return std::exchange(t.change_reason, std::nullopt).has_value();
        });
    }
    if (path == "/effort") return std::exchange(r.effort, std::nullopt).has_value();
    if (path == "/effort/requested") {
        return r.effort && std::exchange(r.effort->requested, std::nullopt).has_value();
    }
    if (path == "/effort/effective_status") {
        if (!r.effort || r.effort->effective_status == EffortStatus::redacted) return false;
        r.effort->effective_status = EffortStatus::redacted;
        return true;
    }
    if (path == "/tools") return std::exchange(r.tools, std::nullopt).has_value();
    if (path == "/tools/allowed") {
        return r.tools && std::exchange(r.tools->allowed, std::nullopt).has_value();
    }
    if (path == "/tools/retrieval_summary") {
        return r.tools && std::exchange(r.tools->retrieval_summary, std::nullopt).has_value();
    }
    if (path == "/context") return std::exchange(r.context, std::nullopt).has_value();
    if (path == "/context/input_truncated") {
        if (!r.context || r.context->input_truncated == TruncationState::redacted) return false;
        r.context->input_truncated = TruncationState::redacted;
        return true;
    }
    if (path == "/context/retrieved_item_count") {
        return r.context && std::exchange(r.context->retrieved_item_count, std::nullopt).has_value();
    }
    if (path == "/context/context_window_class") {
        return r.context && std::exchange(r.context->context_window_class, std::nullopt).has_value();
    }
    if (path == "/fallback") {
        if (r.fallback == FallbackRecord{FallbackStatus::redacted, {}, {}, {}}) return false;
        r.fallback = FallbackRecord{FallbackStatus::redacted, {}, {}, {}};
        return true;
    }
    if (path == "/fallback/status") {
        if (r.fallback.status == FallbackStatus::redacted) return false;
        r.fallback.status = FallbackStatus::redacted;
        return true;
    }
    if (path == "/fallback/from") return std::exchange(r.fallback.from, std::nullopt).has_value();
    if (path == "/fallback/to") return std::exchange(r.fallback.to, std::nullopt).has_value();
    if (path == "/fallback/reason") return std::exchange(r.fallback.reason, std::nullopt).has_value();
    if (path == "/safety") {
        if (r.safety == SafetyRecord{SafetyStatus::redacted, {}, {}}) return false;
        r.safety = SafetyRecord{SafetyStatus::redacted, {}, {}};
        return true;
    }
    if (path == "/safety/status") {
        if (r.safety.status == SafetyStatus::redacted) return false;
        r.safety.status = SafetyStatus::redacted;
        return true;
    }
    if (path == "/safety/category") return std::exchange(r.safety.category, std::nullopt).has_value();
    if (path == "/safety/visible_action") {
        return std::exchange(r.safety.visible_action, std::nullopt).has_value();
    }
    if (path == "/region_class") {
        if (r.region_class == RegionClass::redacted) return false;
        r.region_class = RegionClass::redacted;
        return true;
    }
    if (path == "/provider_chain") return std::exchange(r.provider_chain, std::nullopt).has_value();
    if (path == "/retention_class") return std::exchange(r.retention_class, std::nullopt).has_value();
    if (path == "/provider_extensions") {
        return std::exchange(r.provider_extensions, std::nullopt).has_value();
    }
    (void)action;
    return false;
}

}  // namespace detail

inline RedactionRule make_rule(std::string field_path, RedactionReason reason,
                               std::vector<Audience> visible_to) {
    if (!detail::hideable_paths().count(field_path)) {
        throw PolicyLoadError("rule names a field path that cannot be hidden: " + field_path);
    }
    if (visible_to.empty()) {
        throw PolicyLoadError("rule for " + field_path + " has an empty visible_to set");
    }
    return {std::move(field_path), reason, detail::upward_closure(visible_to)};
}

inline RedactionPolicy parse_redaction_policy(const jdoc& doc) {
    RedactionPolicy policy;
    if (auto rules = doc.find("rules"); rules != doc.end()) {
        for (const auto& r : *rules) {
            const auto reason_str = r.at("reason").get<std::string>();
            auto reason = enum_from_string<RedactionReason>(reason_str);
            if (!reason) throw PolicyLoadError("unknown redaction reason: " + reason_str);
            std::vector<Audience> visible_to;
            for (const auto& a : r.at("visible_to")) {
                auto audience = enum_from_string<Audience>(a.get_ref<const std::string&>());
                if (!audience) throw PolicyLoadError("unknown audience: " + a.dump());
                visible_to.push_back(*audience);
            }
            policy.rules.push_back(make_rule(r.at("field").get<std::string>(), *reason, visible_to));
        }
    }
    if (auto floors = doc.find("default_visibility"); floors != doc.end()) {
        for (const auto& [path, value] : floors->items()) {
            if (!detail::hideable_paths().count(path)) {
                throw PolicyLoadError("default_visibility names a field path that cannot be hidden: " +
                                      path);
            }
            auto audience = enum_from_string<Audience>(value.template get_ref<const std::string&>());
            if (!audience) throw PolicyLoadError("unknown audience: " + value.dump());
            policy.default_visibility[path] = *audience;
        }
    }
    return policy;
}

inline jdoc redaction_policy_to_json(const RedactionPolicy& policy) {
    jdoc j;
    j["rules"] = jdoc::array();
    for (const auto& r : policy.rules) {
        jdoc rule;
        rule["field"] = r.field_path;
        rule["reason"] = to_string(r.reason);
        jdoc vt = jdoc::array();
        for (auto a : r.visible_to) vt.push_back(to_string(a));
        rule["visible_to"] = vt;
        j["rules"].push_back(rule);
    }
    j["default_visibility"] = jdoc::object();
    for (const auto& [path, audience] : policy.default_visibility) {
        j["default_visibility"][path] = to_string(audience);
    }
    return j;
}

// Out-of-the-box tiering: safety category and the provider chain are audit
// material; fallback route endpoints are operational detail.
inline RedactionPolicy default_redaction_policy() {
    RedactionPolicy policy;
    policy.rules.push_back(
        make_rule("/safety/category", RedactionReason::safety, {Audience::auditor}));
    policy.rules.push_back(
        make_rule("/provider_chain", RedactionReason::trade_secret, {Audience::auditor}));
    policy.rules.push_back(
        make_rule("/fallback/from", RedactionReason::security, {Audience::developer}));
    policy.rules.push_back(
        make_rule("/fallback/to", RedactionReason::security, {Audience::developer}));
    return policy;
}

inline AudienceView view_for(const RouteReceipt& receipt, Audience audience,
                             const RedactionPolicy& policy) {
    AudienceView view{audience, receipt};
    auto hide = [&](const std::string& path, RedactionReason reason,
                    const std::vector<Audience>& visible_to) {
        const auto action = detail::hideable_paths().at(path);
        if (!detail::apply_hide(view.receipt, path, action)) return;
        RedactionEntry entry{path, reason, visible_to};
        const auto& existing = view.receipt.redactions;
        if (std::find(existing.begin(), existing.end(), entry) == existing.end()) {
            view.receipt.redactions.push_back(std::move(entry));
        }
    };
    for (const auto& rule : policy.rules) {
        const bool visible =
            std::find(rule.visible_to.begin(), rule.visible_to.end(), audience) != rule.visible_to.end();
        if (!visible) hide(rule.field_path, rule.reason, rule.visible_to);
    }
    for (const auto& [path, floor] : policy.default_visibility) {
        if (!audience_at_least(audience, floor)) {
            std::vector<Audience> visible_to;
            for (int r = audience_rank(floor); r <= audience_rank(Audience::auditor); ++r) {
                visible_to.push_back(static_cast<Audience>(r));
            }
            hide(path, RedactionReason::contractual, visible_to);
        }
    }
    return view;
}

// --- End-user labels ------------------------------------------------------

enum class LabelCode {
    web_search_used,
    fast_mode,
    model_updated,
    fallback_used,
    safety_restricted,
    incomplete_response
};

template <>
struct EnumTraits<LabelCode> {
    static constexpr std::array<std::string_view, 6> names{
        "web_search_used", "fast_mode",         "model_updated",
        "fallback_used",   "safety_restricted", "incomplete_response"};
};

struct EndUserLabel {
    LabelCode code;
    bool present = false;

    friend bool operator==(const EndUserLabel&, const EndUserLabel&) = default;
};

struct LabelOptions {
    // Effective tiers a deployment documents as latency-optimized; empty by
    // default so unconfigured deployments never mislabel.
    std::set<std::string> fast_tiers;
    // Resolution of the same requested alias on the previous answer, when a
    // store can supply history. Without it, model_updated stays false.
    std::optional<std::string> prior_resolved_model;
};

// Pure function of receipt (+ options). Absent conditions yield
// present=false — the absence of a label is shown, not omitted.
inline std::vector<EndUserLabel> end_user_labels(const RouteReceipt& r,
                                                 const LabelOptions& opts = {}) {
    bool web_search = false;
    if (r.tools) {
        for (const auto& t : r.tools->used) {
            if (t.name == "web_search" && t.invocation_count > 0) web_search = true;
        }
    }
    bool fast = false;
    if (r.effort && r.effort->requested &&
        (*r.effort->requested == EffortLevel::minimal || *r.effort->requested == EffortLevel::low)) {
        fast = true;
    }
    if (r.service_tier && opts.fast_tiers.count(r.service_tier->effective)) fast = true;
    const bool updated = opts.prior_resolved_model && r.resolved_model &&
                         *opts.prior_resolved_model != *r.resolved_model;
    return {
        {LabelCode::web_search_used, web_search},
        {LabelCode::fast_mode, fast},
        {LabelCode::model_updated, updated},
        {LabelCode::fallback_used, r.fallback.status == FallbackStatus::occurred},
        {LabelCode::safety_restricted, r.safety.status == SafetyStatus::intervened},
        {LabelCode::incomplete_response, r.completion_status != CompletionStatus::complete},
    };
}

inline jdoc labels_to_json(const std::vector<EndUserLabel>& labels) {
    jdoc arr = jdoc::array();
    for (const auto& l : labels) {
        jdoc item;
        item["code"] = to_string(l.code);
        item["present"] = l.present;
        arr.push_back(item);
    }
    return arr;
}

}  // namespace routereceipt

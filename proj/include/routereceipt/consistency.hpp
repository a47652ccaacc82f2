#pragma once

// Cross-field consistency. Absence fields are load-bearing ("no fallback" is
// a statement, not a gap), so contradictions between them are flagged — as
// warnings, never validity errors: receipts from third parties must still
// parse. The rule list is closed:
//
//   tier_change_unexplained   change_reason "none" while requested != effective
//   fallback_none_with_route  fallback.status "none" but from/to present
//   safety_none_with_action   safety.status "none" but visible_action not "none"
//   retrieval_count_mismatch  context.retrieved_item_count != sum of used-tool
//                             result_refs lengths (only when both sides exist)
//   redaction_not_applied     a redaction entry names a field that is present
//                             unredacted, with reason other than
//                             not_collected / not_applicable

#include <string>
#include <vector>

#include "routereceipt/canonical.hpp"

namespace routereceipt {

namespace detail {

// A value counts as redacted if it is the string "redacted" or a record
// generalized to status "redacted".
inline bool value_is_redacted(const jdoc& v) {
    if (v.is_string()) return v.get_ref<const std::string&>() == "redacted";
    if (v.is_object()) {
        if (auto it = v.find("status"); it != v.end() && it->is_string()) {
            return it->get_ref<const std::string&>() == "redacted";
        }
    }
    return false;
}

inline std::string as_pointer(const std::string& field) {
    if (!field.empty() && field.front() == '/') return field;
    return "/" + field;
}

}  // namespace detail

inline std::vector<ConsistencyWarning> check_consistency(const RouteReceipt& r) {
    std::vector<ConsistencyWarning> warnings;

    if (r.service_tier && r.service_tier->change_reason == TierChangeReason::none &&
        r.service_tier->requested && *r.service_tier->requested != r.service_tier->effective) {
        warnings.push_back({"/service_tier/change_reason", "tier_change_unexplained",
                            "change_reason is \"none\" but requested \"" + *r.service_tier->requested +
                                "\" differs from effective \"" + r.service_tier->effective + "\""});
    }

    if (r.fallback.status == FallbackStatus::none && (r.fallback.from || r.fallback.to)) {
        warnings.push_back({"/fallback", "fallback_none_with_route",
                            "status is \"none\" but a from/to route is recorded"});
    }

    if (r.safety.status == SafetyStatus::none && r.safety.visible_action &&
        *r.safety.visible_action != SafetyAction::none) {
        warnings.push_back({"/safety", "safety_none_with_action",
                            "status is \"none\" but visible_action is \"" +
                                std::string(to_string(*r.safety.visible_action)) + "\""});
    }

    if (r.context && r.context->retrieved_item_count && r.tools) {
        std::int64_t refs = 0;
        bool any_refs = false;
        for (const auto& t : r.tools->used) {
            if (t.result_refs) {
                any_refs = true;
                refs += static_cast<std::int64_t>(t.result_refs->size());
            }
        }
        if (any_refs && refs != *r.context->retrieved_item_count) {
            warnings.push_back({"/context/retrieved_item_count", "retrieval_count_mismatch",
                                "recorded " + std::to_string(*r.context->retrieved_item_count) +
                                    " but used tools carry " + std::to_string(refs) + " result_refs"});
        }
    }

    const jdoc doc = receipt_to_json(r);
    for (std::size_t i = 0; i < r.redactions.size(); ++i) {
        const auto& entry = r.redactions[i];
        if (entry.reason == RedactionReason::not_collected ||
            entry.reason == RedactionReason::not_applicable) {
            continue;
        }
        const jdoc::json_pointer ptr(detail::as_pointer(entry.field));
        if (doc.contains(ptr) && !detail::value_is_redacted(doc.at(ptr))) {
            warnings.push_back({"/redactions/" + std::to_string(i), "redaction_not_applied",
                                "entry marks \"" + entry.field +
                                    "\" redacted but the field is present unredacted"});
        }
    }

    return warnings;
}

}  // namespace routereceipt

#pragma once

// Route-constraint evaluation and receipt diffing. A constraint policy is a
// set of route promises ("stay on this snapshot", "no fallback", "stay in
// these regions"); evaluation judges a receipt after the fact, one violation
// per breached constraint. Unverifiable promises are breaches: a constrained
// field whose value is unknown or redacted yields a violation with that
// observed value, never a silent pass.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "routereceipt/canonical.hpp"

namespace routereceipt {

struct ConstraintPolicy {
    std::optional<std::string> pinned_resolved_model;
    bool allow_moving_alias = true;
    bool allow_fallback = true;
    std::set<RegionClass> allowed_region_classes{
        RegionClass::user_selected_region, RegionClass::data_zone,   RegionClass::global,
        RegionClass::provider_default,     RegionClass::unknown,     RegionClass::redacted};
    std::optional<std::set<std::string>> allowed_tools;
    std::optional<std::string> required_effective_tier;
    bool forbid_global_endpoint = false;  // sugar: drops "global" from the allowed set

    friend bool operator==(const ConstraintPolicy&, const ConstraintPolicy&) = default;
};

enum class ViolationCode {
    model_drift,
    moving_alias_used,
    fallback_forbidden,
    region_forbidden,
    tool_forbidden,
    tier_mismatch
};

template <>
struct EnumTraits<ViolationCode> {
    static constexpr std::array<std::string_view, 6> names{
        "model_drift",      "moving_alias_used", "fallback_forbidden",
        "region_forbidden", "tool_forbidden",    "tier_mismatch"};
};

struct Violation {
    ViolationCode code;
    std::string field_path;
    std::string expected;
    std::string observed;

    friend bool operator==(const Violation&, const Violation&) = default;
};

inline ConstraintPolicy parse_constraint_policy(const jdoc& doc) {
    ConstraintPolicy p;
    if (auto it = doc.find("pinned_resolved_model"); it != doc.end()) {
        p.pinned_resolved_model = it->get<std::string>();
    }
    p.allow_moving_alias = doc.value("allow_moving_alias", true);
    p.allow_fallback = doc.value("allow_fallback", true);
    if (auto it = doc.find("allowed_region_classes"); it != doc.end()) {
        p.allowed_region_classes.clear();
        for (const auto& rc : *it) {
            auto region = enum_from_string<RegionClass>(rc.template get_ref<const std::string&>());
            if (!region) throw Error("unknown region class in policy: " + rc.dump());
            p.allowed_region_classes.insert(*region);
        }
        if (p.allowed_region_classes.empty()) {
            throw Error("allowed_region_classes must be non-empty");
        }
    }
    if (auto it = doc.find("allowed_tools"); it != doc.end()) {
        p.allowed_tools = std::set<std::string>(it->begin(), it->end());
    }
    if (auto it = doc.find("required_effective_tier"); it != doc.end()) {
        p.required_effective_tier = it->get<std::string>();
    }
    p.forbid_global_endpoint = doc.value("forbid_global_endpoint", false);
    return p;
}

inline jdoc constraint_policy_to_json(const ConstraintPolicy& p) {
    jdoc j = jdoc::object();
    if (p.pinned_resolved_model) j["pinned_resolved_model"] = *p.pinned_resolved_model;
    j["allow_moving_alias"] = p.allow_moving_alias;
    j["allow_fallback"] = p.allow_fallback;
    jdoc regions = jdoc::array();
    for (auto rc : p.allowed_region_classes) regions.push_back(to_string(rc));
    j["allowed_region_classes"] = regions;
    if (p.allowed_tools) {
        j["allowed_tools"] = jdoc(std::vector<std::string>(p.allowed_tools->begin(),
                                                           p.allowed_tools->end()));
    }
    if (p.required_effective_tier) j["required_effective_tier"] = *p.required_effective_tier;
    j["forbid_global_endpoint"] = p.forbid_global_endpoint;
    return j;
}

// Each constraint evaluates independently, so evaluating a policy equals the
// union of evaluating its constraints alone.
inline std::vector<Violation> evaluate(const RouteReceipt& r, const ConstraintPolicy& p) {
    std::vector<Violation> out;

    if (p.pinned_resolved_model) {
        const std::string observed = r.resolved_model.value_or("unknown");
        if (observed != *p.pinned_resolved_model) {
            out.push_back({ViolationCode::model_drift, "/resolved_model", *p.pinned_resolved_model,
                           observed});
        }
    }

    if (!p.allow_moving_alias) {
        const auto t = r.model_identifier_type;
        if (t == ModelIdentifierType::moving_alias || t == ModelIdentifierType::router ||
            t == ModelIdentifierType::unknown) {
            out.push_back({ViolationCode::moving_alias_used, "/model_identifier_type",
                           "fixed", std::string(to_string(t))});
        }
    }

    if (!p.allow_fallback) {
        if (r.fallback.status != FallbackStatus::none) {
            out.push_back({ViolationCode::fallback_forbidden, "/fallback/status", "none",
                           std::string(to_string(r.fallback.status))});
        }
    }

    {
        auto allowed = p.allowed_region_classes;
        if (p.forbid_global_endpoint) allowed.erase(RegionClass::global);
        if (!allowed.count(r.region_class)) {
            std::string expected;
            for (auto rc : allowed) {
                if (!expected.empty()) expected += "|";
                expected += to_string(rc);
            }
            out.push_back({ViolationCode::region_forbidden, "/region_class", expected,
                           std::string(to_string(r.region_class))});
        }
    }

    if (p.allowed_tools) {
        std::string expected;
        for (const auto& t : *p.allowed_tools) {
            if (!expected.empty()) expected += "|";
            expected += t;
        }
        if (!r.tools) {
            out.push_back({ViolationCode::tool_forbidden, "/tools", expected, "unknown"});
        } else {
            for (std::size_t i = 0; i < r.tools->used.size(); ++i) {
                const auto& use = r.tools->used[i];
                if (use.invocation_count > 0 && !p.allowed_tools->count(use.name)) {
                    out.push_back({ViolationCode::tool_forbidden,
                                   "/tools/used/" + std::to_string(i) + "/name", expected, use.name});
                }
            }
        }
    }

    if (p.required_effective_tier) {
        const std::string observed = r.service_tier ? r.service_tier->effective : "unknown";
        if (observed != *p.required_effective_tier) {
            out.push_back({ViolationCode::tier_mismatch, "/service_tier/effective",
                           *p.required_effective_tier, observed});
        }
    }

    return out;
}

inline jdoc violations_to_json(const std::vector<Violation>& violations) {
    jdoc arr = jdoc::array();
    for (const auto& v : violations) {
        jdoc item;
        item["code"] = to_string(v.code);
        item["field_path"] = v.field_path;
        item["expected"] = v.expected;
        item["observed"] = v.observed;
        arr.push_back(item);
    }
    return arr;
}

// --- Route diff -------------------------------------------------------------

struct ChangedField {
    std::string field_path;
    std::string left_value;   // canonical JSON text; "" when absent on that side
    std::string right_value;

    friend bool operator==(const ChangedField&, const ChangedField&) = default;
};

struct RouteDiff {
    std::vector<ChangedField> changed_fields;
    bool material = false;

    friend bool operator==(const RouteDiff&, const RouteDiff&) = default;
};

namespace detail {

inline void diff_values(const jdoc* left, const jdoc* right, const std::string& path,
                        std::vector<ChangedField>& out) {
    if (left && right && *left == *right) return;
    if (left && right && left->is_object() && right->is_object()) {
        std::vector<std::string> keys;
        for (const auto& [k, unused] : left->items()) keys.push_back(k);
        for (const auto& [k, unused] : right->items()) {
            if (!left->contains(k)) keys.push_back(k);
        }
        for (const auto& k : keys) {
            const jdoc* l = left->contains(k) ? &left->at(k) : nullptr;
            const jdoc* r = right->contains(k) ? &right->at(k) : nullptr;
            diff_values(l, r, path + "/" + pointer_escape(k), out);
        }
        return;
    }
    if (left && right && left->is_array() && right->is_array()) {
        const std::size_t n = std::max(left->size(), right->size());
        for (std::size_t i = 0; i < n; ++i) {
            const jdoc* l = i < left->size() ? &(*left)[i] : nullptr;
            const jdoc* r = i < right->size() ? &(*right)[i] : nullptr;
            diff_values(l, r, path + "/" + std::to_string(i), out);
        }
        return;
    }
    out.push_back({path, left ? left->dump() : "", right ? right->dump() : ""});
}

// Fields whose change makes two routes materially different. Fixed in v0.1
// so diffs stay comparable across deployments.
inline const std::vector<std::string>& material_paths() {
    static const std::vector<std::string> paths{
        "/resolved_model",   "/service_tier/effective", "/fallback/status",
        "/region_class",     "/completion_status",      "/safety/status"};
    return paths;
}

inline std::vector<std::string> used_tool_names(const RouteReceipt& r) {
    std::vector<std::string> names;
    if (r.tools) {
        for (const auto& t : r.tools->used) names.push_back(t.name);
    }
    std::sort(names.begin(), names.end());
    return names;
}

}  // namespace detail

// Symmetric up to left/right swap; diff of a receipt with itself is empty.
inline RouteDiff diff(const RouteReceipt& a, const RouteReceipt& b) {
    RouteDiff d;
    const jdoc left = receipt_to_json(a);
    const jdoc right = receipt_to_json(b);
    detail::diff_values(&left, &right, "", d.changed_fields);

    for (const auto& changed : d.changed_fields) {
        for (const auto& mat : detail::material_paths()) {
            if (changed.field_path == mat || changed.field_path.rfind(mat + "/", 0) == 0) {
                d.material = true;
            }
        }
    }
    if (detail::used_tool_names(a) != detail::used_tool_names(b)) d.material = true;
    return d;
}

inline jdoc diff_to_json(const RouteDiff& d) {
    jdoc j;
    j["changed_fields"] = jdoc::array();
    for (const auto& c : d.changed_fields) {
        jdoc item;
        item["field_path"] = c.field_path;
        item["left_value"] = c.left_value;
        item["right_value"] = c.right_value;
        j["changed_fields"].push_back(item);
    }
    j["material"] = d.material;
    return j;
}

}  // namespace routereceipt

#pragma once

// Deterministic simulated provider. Scenarios script every route decision —
// alias resolution by request index, tier downgrades, fallback-chain
// failures, tool triggers, safety interventions — so that identical
// (scenario, seed, request sequence) produce bit-identical routes. The
// simulator also keeps a decision log; receipts emitted downstream can be
// replayed against it.
//
// Scenario file shape (all fields optional unless noted):
//   {
//     "seed": 42,
//     "alias_table": {"alias": [{"snapshot": "m-2026-03-02", "active_from": 0}, ...]},
//     "tier_downgrade": {"indices": [5], "probability": 0.0, "downgrade_to": "standard"},
//     "fallback_chain": {"models": ["m-b", "m-c"],
//                        "failures": [{"model": "m-a", "indices": [3], "kind": "rate_limit"}]},
//     "tool_behavior": {"file_search": {"mode": "always", "result_refs": [...]},
//                       "web_search": {"mode": "indices", "indices": [2], "result_count": 3}},
//     "safety_schedule": [9],
//     "safety_category": "sensitive_data",
//     "region_class": "user_selected_region"
//   }

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "routereceipt/normalize.hpp"

namespace routereceipt {

struct ProbeError : Error {
    using Error::Error;
};

enum class TriggerKind { rate_limit, provider_error, unavailable_model };

template <>
struct EnumTraits<TriggerKind> {
    static constexpr std::array<std::string_view, 3> names{"rate_limit", "provider_error",
                                                           "unavailable_model"};
};

inline FallbackReason fallback_reason_for(TriggerKind kind) {
    switch (kind) {
        case TriggerKind::rate_limit: return FallbackReason::rate_limit;
        case TriggerKind::provider_error: return FallbackReason::provider_error;
        case TriggerKind::unavailable_model: return FallbackReason::provider_error;
    }
    return FallbackReason::unknown;
}

struct AliasStep {
    std::string snapshot;
    std::int64_t active_from = 0;  // first request index served by this snapshot
};

struct FailureSpec {
    std::string model;
    std::set<std::int64_t> indices;
    TriggerKind kind = TriggerKind::provider_error;
};

struct ToolBehavior {
    enum class Mode { never, always, indices };
    Mode mode = Mode::never;
    std::set<std::int64_t> indices;
    std::optional<std::vector<std::string>> result_refs;  // fixed refs, else generated
    std::int64_t result_count = 0;
};

struct SimScenario {
    std::uint64_t seed = 0;
    std::map<std::string, std::vector<AliasStep>> alias_table;
    std::set<std::int64_t> tier_downgrade_indices;
    double tier_downgrade_probability = 0.0;
    std::string downgrade_to = "standard";
    std::vector<std::string> fallback_chain;
    std::vector<FailureSpec> failures;
    std::map<std::string, ToolBehavior> tool_behavior;
    std::set<std::int64_t> safety_schedule;
    std::string safety_category = "sensitive_data";
    RegionClass region_class = RegionClass::user_selected_region;

    static SimScenario parse(const jdoc& doc) {
        SimScenario s;
        s.seed = doc.value("seed", std::uint64_t{0});
        if (auto it = doc.find("alias_table"); it != doc.end()) {
            for (const auto& [alias, steps] : it->items()) {
                std::vector<AliasStep> parsed;
                for (const auto& step : steps) {
                    parsed.push_back({step.at("snapshot").template get<std::string>(),
                                      step.value("active_from", std::int64_t{0})});
                }
                std::sort(parsed.begin(), parsed.end(),
                          [](const AliasStep& a, const AliasStep& b) {
                              return a.active_from < b.active_from;
                          });
                s.alias_table[alias] = std::move(parsed);
            }
        }
        if (auto it = doc.find("tier_downgrade"); it != doc.end()) {
            if (auto idx = it->find("indices"); idx != it->end()) {
                for (const auto& i : *idx) s.tier_downgrade_indices.insert(i.template get<std::int64_t>());
            }
            s.tier_downgrade_probability = it->value("probability", 0.0);
            s.downgrade_to = it->value("downgrade_to", std::string("standard"));
        }
        if (auto it = doc.find("fallback_chain"); it != doc.end()) {
            if (auto models = it->find("models"); models != it->end()) {
                s.fallback_chain = models->template get<std::vector<std::string>>();
            }
            if (auto fails = it->find("failures"); fails != it->end()) {
                for (const auto& f : *fails) {
                    FailureSpec spec;
                    spec.model = f.at("model").template get<std::string>();
                    for (const auto& i : f.at("indices")) {
                        spec.indices.insert(i.template get<std::int64_t>());
                    }
                    const auto kind = f.value("kind", std::string("provider_error"));
                    auto parsed = enum_from_string<TriggerKind>(kind);
                    if (!parsed) throw Error("unknown failure kind in scenario: " + kind);
                    spec.kind = *parsed;
                    s.failures.push_back(std::move(spec));
                }
            }
        }
        if (auto it = doc.find("tool_behavior"); it != doc.end()) {
            for (const auto& [name, cfg] : it->items()) {
                ToolBehavior b;
                const auto mode = cfg.value("mode", std::string("never"));
                if (mode == "always") b.mode = ToolBehavior::Mode::always;
                else if (mode == "indices") b.mode = ToolBehavior::Mode::indices;
                else if (mode == "never") b.mode = ToolBehavior::Mode::never;
                else throw Error("unknown tool mode in scenario: " + mode);
                if (auto idx = cfg.find("indices"); idx != cfg.end()) {
                    for (const auto& i : *idx) b.indices.insert(i.template get<std::int64_t>());
                }
                if (auto refs = cfg.find("result_refs"); refs != cfg.end()) {
                    b.result_refs = refs->template get<std::vector<std::string>>();
                }
                b.result_count = cfg.value("result_count", std::int64_t{0});
                s.tool_behavior[name] = std::move(b);
            }
        }
        if (auto it = doc.find("safety_schedule"); it != doc.end()) {
            for (const auto& i : *it) s.safety_schedule.insert(i.template get<std::int64_t>());
        }
        s.safety_category = doc.value("safety_category", std::string("sensitive_data"));
        if (auto it = doc.find("region_class"); it != doc.end()) {
            auto region = enum_from_string<RegionClass>(it->template get_ref<const std::string&>());
            if (!region) throw Error("unknown region_class in scenario: " + it->dump());
            s.region_class = *region;
        }
        return s;
    }
};

struct CompletionRequest {
    std::string request_id;
    std::string requested_model;
    std::optional<std::string> requested_tier;
    std::optional<EffortLevel> requested_effort;
    std::optional<std::vector<std::string>> tools_allowed;
    std::optional<std::string> region_preference;
    std::string prompt;
};

// What the simulator actually decided for one request; receipts are checked
// against these entries.
struct RouteDecision {
    std::int64_t index = 0;
    std::string requested_model;
    std::optional<std::string> resolved_model;  // absent when every hop failed
    ModelIdentifierType identifier_type = ModelIdentifierType::fixed;
    std::optional<std::string> requested_tier;
    std::string effective_tier;
    std::optional<TierChangeReason> tier_change_reason;
    FallbackRecord fallback{FallbackStatus::none, {}, {}, {}};
    std::vector<ToolUse> tools_used;
    std::optional<std::vector<std::string>> tools_allowed;
    SafetyRecord safety{SafetyStatus::none, {}, {}};
    std::optional<EffortLevel> effort_requested;
    EffortStatus effort_status = EffortStatus::not_applicable;
    bool input_truncated = false;
    std::optional<std::int64_t> retrieved_item_count;
    CompletionStatus completion_status = CompletionStatus::complete;
    RegionClass region_class = RegionClass::unknown;
};

struct ProviderResult {
    jdoc raw;          // simulated-surface metadata document
    std::string text;  // placeholder; no model runs here
    RouteDecision decision;
};

// Adapter boundary for upstreams. The simulator is the only implementation
// shipped; a real-provider adapter would implement the same interface.
class UpstreamProvider {
public:
    virtual ~UpstreamProvider() = default;
    virtual ProviderResult complete(const CompletionRequest& request, std::int64_t index) = 0;
    virtual std::string name() const = 0;
};

class SimulatedProvider final : public UpstreamProvider {
public:
    explicit SimulatedProvider(SimScenario scenario) : scenario_(std::move(scenario)) {}

    std::string name() const override { return "simulated"; }

    ProviderResult complete(const CompletionRequest& request, std::int64_t index) override {
        RouteDecision d = decide(request, index);
        ProviderResult result{raw_metadata(request, d), placeholder_text(index), d};
        {
            std::lock_guard<std::mutex> lock(mu_);
            log_.push_back(std::move(d));
        }
        return result;
    }

    std::vector<RouteDecision> decision_log() const {
        std::lock_guard<std::mutex> lock(mu_);
        return log_;
    }

    const SimScenario& scenario() const { return scenario_; }

    // Probe hooks: injected failures at absolute request indices. first_hop
    // fails only the first model tried; otherwise every hop fails (an
    // unavailable model exhausts the chain).
    void inject_failure(std::int64_t index, TriggerKind kind, bool first_hop_only) {
        std::lock_guard<std::mutex> lock(mu_);
        injected_[index] = {kind, first_hop_only};
    }

    void clear_injected_failures() {
        std::lock_guard<std::mutex> lock(mu_);
        injected_.clear();
    }

    RouteDecision decide(const CompletionRequest& request, std::int64_t index) const {
        RouteDecision d;
        d.index = index;
        d.requested_model = request.requested_model;
        d.region_class = scenario_.region_class;

        // Alias resolution: latest step whose active_from <= index.
        std::string primary = request.requested_model;
        if (auto it = scenario_.alias_table.find(request.requested_model);
            it != scenario_.alias_table.end() && !it->second.empty()) {
            const AliasStep* chosen = &it->second.front();
            for (const auto& step : it->second) {
                if (step.active_from <= index) chosen = &step;
            }
            primary = chosen->snapshot;
            d.identifier_type = ModelIdentifierType::moving_alias;
        } else {
            d.identifier_type = ModelIdentifierType::fixed;
        }

        // Service tier.
        d.requested_tier = request.requested_tier;
        d.effective_tier = request.requested_tier.value_or("standard");
        bool downgraded = false;
        if (request.requested_tier && *request.requested_tier != scenario_.downgrade_to) {
            downgraded = scenario_.tier_downgrade_indices.count(index) > 0 ||
                         bernoulli(index, scenario_.tier_downgrade_probability);
        }
        if (downgraded) {
            d.effective_tier = scenario_.downgrade_to;
            d.tier_change_reason = TierChangeReason::capacity;
        } else if (request.requested_tier) {
            d.tier_change_reason = TierChangeReason::none;
        }

        // Fallback chain walk.
        std::vector<std::string> route{primary};
        for (const auto& m : scenario_.fallback_chain) {
            if (std::find(route.begin(), route.end(), m) == route.end()) route.push_back(m);
        }
        std::optional<std::pair<TriggerKind, bool>> injected;
        {
            std::lock_guard<std::mutex> lock(mu_);
            if (auto it = injected_.find(index); it != injected_.end()) injected = it->second;
        }
        std::optional<TriggerKind> first_failure;
        std::optional<std::string> served;
        for (std::size_t hop = 0; hop < route.size(); ++hop) {
            std::optional<TriggerKind> failure = scheduled_failure(route[hop], index);
            if (injected && (hop == 0 || !injected->second)) {
                failure = injected->first;
            }
            if (!failure) {
                served = route[hop];
                break;
            }
            if (!first_failure) first_failure = failure;
        }
        d.resolved_model = served;
        if (first_failure) {
            d.fallback.status = FallbackStatus::occurred;
            d.fallback.from = route.front();
            d.fallback.to = served;
            d.fallback.reason = fallback_reason_for(*first_failure);
        } else {
            d.fallback.status = FallbackStatus::none;
            d.fallback.reason = FallbackReason::none;
        }
        d.completion_status = served ? CompletionStatus::complete : CompletionStatus::error;

        // Tools.
        d.tools_allowed = request.tools_allowed;
        if (served) {
            std::int64_t total_refs = 0;
            bool any_refs = false;
            for (const auto& [tool_name, behavior] : scenario_.tool_behavior) {
                const bool triggered =
                    behavior.mode == ToolBehavior::Mode::always ||
                    (behavior.mode == ToolBehavior::Mode::indices && behavior.indices.count(index));
                if (!triggered) continue;
                if (request.tools_allowed &&
                    std::find(request.tools_allowed->begin(), request.tools_allowed->end(),
                              tool_name) == request.tools_allowed->end()) {
                    continue;  // the request did not allow this tool
                }
                ToolUse use;
                use.name = tool_name;
                use.invocation_count = 1;
                if (behavior.result_refs) {
                    use.result_refs = behavior.result_refs;
                } else if (behavior.result_count > 0) {
                    std::vector<std::string> refs;
                    for (std::int64_t k = 0; k < behavior.result_count; ++k) {
                        refs.push_back("sim://" + tool_name + "/" + std::to_string(index) + "/" +
                                       std::to_string(k));
                    }
                    use.result_refs = std::move(refs);
                }
                if (use.result_refs) {
                    any_refs = true;
                    total_refs += static_cast<std::int64_t>(use.result_refs->size());
                }
                d.tools_used.push_back(std::move(use));
            }
            if (any_refs) d.retrieved_item_count = total_refs;
        }

        // Safety.
        if (served && scenario_.safety_schedule.count(index)) {
            d.safety.status = SafetyStatus::intervened;
            d.safety.category = scenario_.safety_category;
            d.safety.visible_action = SafetyAction::masked;
        } else {
            d.safety.status = SafetyStatus::none;
            d.safety.visible_action = SafetyAction::none;
        }

        // Effort.
        d.effort_requested = request.requested_effort;
        d.effort_status = request.requested_effort ? EffortStatus::completed
                                                   : EffortStatus::not_applicable;
        return d;
    }

    // Simulated-surface metadata for one decision; the receipt pipeline reads
    // this, not the decision object.
    static jdoc raw_metadata(const CompletionRequest& request, const RouteDecision& d) {
        jdoc raw;
        jdoc req;
        req["model"] = request.requested_model;
        if (request.requested_tier) req["service_tier"] = *request.requested_tier;
        if (request.requested_effort) req["effort"] = to_string(*request.requested_effort);
        if (request.tools_allowed) req["tools_allowed"] = *request.tools_allowed;
        raw["request"] = req;

        jdoc resp;
        if (d.resolved_model) resp["model"] = *d.resolved_model;
        resp["service_tier"] = d.effective_tier;
        if (d.tier_change_reason) resp["tier_change_reason"] = to_string(*d.tier_change_reason);
        jdoc fb;
        fb["occurred"] = d.fallback.status == FallbackStatus::occurred;
        if (d.fallback.from) fb["from"] = *d.fallback.from;
        if (d.fallback.to) fb["to"] = *d.fallback.to;
        if (d.fallback.reason) fb["reason"] = to_string(*d.fallback.reason);
        resp["fallback"] = fb;
        jdoc tools = jdoc::array();
        for (const auto& t : d.tools_used) {
            jdoc tool;
            tool["name"] = t.name;
            tool["invocations"] = t.invocation_count;
            if (t.result_refs) tool["result_refs"] = *t.result_refs;
            tools.push_back(tool);
        }
        resp["tools"] = tools;
        jdoc safety;
        safety["intervened"] = d.safety.status == SafetyStatus::intervened;
        if (d.safety.category) safety["category"] = *d.safety.category;
        if (d.safety.visible_action) safety["visible_action"] = to_string(*d.safety.visible_action);
        resp["safety"] = safety;
        resp["effort_status"] = to_string(d.effort_status);
        jdoc ctx;
        ctx["input_truncated"] = d.input_truncated;
        if (d.retrieved_item_count) ctx["retrieved_item_count"] = *d.retrieved_item_count;
        resp["context"] = ctx;
        raw["response"] = resp;
        return raw;
    }

private:
    SimScenario scenario_;
    mutable std::mutex mu_;
    std::vector<RouteDecision> log_;
    std::map<std::int64_t, std::pair<TriggerKind, bool>> injected_;

    static std::string placeholder_text(std::int64_t index) {
        return "[simulated completion " + std::to_string(index) + "]";
    }

    std::optional<TriggerKind> scheduled_failure(const std::string& model,
                                                 std::int64_t index) const {
        for (const auto& spec : scenario_.failures) {
            if (spec.model == model && spec.indices.count(index)) return spec.kind;
        }
        return std::nullopt;
    }

    // Per-index coin flip, a pure function of (seed, index).
    bool bernoulli(std::int64_t index, double p) const {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        std::uint64_t x = scenario_.seed ^ (static_cast<std::uint64_t>(index) * 0x9E3779B97F4A7C15ull);
        std::mt19937_64 rng(x);
        return std::bernoulli_distribution(p)(rng);
    }
};

}  // namespace routereceipt

#pragma once

// Gateway core: fronts the simulated provider, emits one receipt per
// completion through the extract/merge pipeline, stores it, and hosts the
// desk-scale probes. Failures leave receipts too — an exhausted fallback
// chain still produces a stored receipt with completion_status "error".
//
// Request indices come from an atomic counter; every per-request decision is
// a pure function of (scenario, index), so identical scenario + seed +
// request sequence reproduce the same receipts up to receipt_id/served_at.

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "routereceipt/policy.hpp"
#include "routereceipt/simulator.hpp"
#include "routereceipt/store.hpp"

namespace routereceipt {

struct CompletionExchange {
    CompletionRequest request;
    std::string text;
    jdoc raw;  // provider metadata the receipt was normalized from
    RouteReceipt receipt;
    std::int64_t index = 0;  // gateway request index the simulator decided at
};

enum class ProbeKind { alias_drift, fallback_observability };

template <>
struct EnumTraits<ProbeKind> {
    static constexpr std::array<std::string_view, 2> names{"alias_drift", "fallback_observability"};
};

struct ProbeEvent {
    std::int64_t request_index = 0;
    std::string detail;
};

struct ProbeReport {
    ProbeKind probe = ProbeKind::alias_drift;
    std::vector<ProbeEvent> events;
    std::map<std::string, std::int64_t> summary;

    jdoc to_json() const {
        jdoc j;
        j["probe"] = to_string(probe);
        j["events"] = jdoc::array();
        for (const auto& e : events) {
            jdoc item;
            item["request_index"] = e.request_index;
            item["detail"] = e.detail;
            j["events"].push_back(item);
        }
        jdoc s = jdoc::object();
        for (const auto& [k, v] : summary) s[k] = v;
        j["summary"] = s;
        return j;
    }
};

struct FallbackTrigger {
    TriggerKind kind = TriggerKind::rate_limit;
    std::int64_t request_index = 0;  // relative to the probe's own sequence
};

struct GatewayOptions {
    RedactionPolicy policy = default_redaction_policy();
    Clock clock = system_clock_utc();
    std::set<std::string> fast_tiers;  // effective tiers labeled "fast mode"
};

class Gateway {
public:
    Gateway(SimScenario scenario, const std::filesystem::path& store_dir,
            GatewayOptions options = {})
        : provider_(std::make_unique<SimulatedProvider>(std::move(scenario))),
          store_(store_dir, ReceiptStore::Mode::read_write),
          options_(std::move(options)) {}

    CompletionExchange handle_completion(const CompletionRequest& request) {
        const std::int64_t index = next_index_.fetch_add(1);
        ProviderResult result = provider_->complete(request, index);
        const std::string served_at = options_.clock();

        ReceiptFragment fragment = extract_fragment(ProviderSurface::simulated, result.raw, served_at);

        Envelope envelope;
        envelope.receipt_id = mint_receipt_id();
        envelope.request_id = request.request_id.empty()
                                  ? "req-" + std::to_string(index)
                                  : request.request_id;
        envelope.served_at = served_at;
        envelope.model_identifier_type = result.decision.identifier_type;
        envelope.region_class = result.decision.region_class;
        envelope.completion_status = result.decision.completion_status;

        MergeResult merged = merge(envelope, {fragment});
        store_.append(merged.receipt);

        return {request, std::move(result.text), std::move(result.raw), std::move(merged.receipt),
                index};
    }

    // Thin transport over the backing modules.
    std::string ingest(const jdoc& doc) {
        RouteReceipt r = parse_receipt(doc);
        store_.append(r);
        return r.receipt_id;
    }

    ReceiptStore::GetResult serve_receipt(const std::string& id, Audience audience) const {
        return store_.get(id, audience, options_.policy);
    }

    static ValidationReport serve_validate(const jdoc& doc) { return validate_json(doc); }

    std::vector<Violation> serve_evaluate(const jdoc& receipt_doc,
                                          const ConstraintPolicy& policy) const {
        return evaluate(parse_receipt(receipt_doc), policy);
    }

    AggregateReport serve_aggregate(AggregateMetric metric, const TimeWindow& window) const {
        return store_.aggregate(metric, window);
    }

    // Issue n fixed-prompt completions against one alias and report every
    // index where consecutive resolutions differ.
    ProbeReport run_alias_drift_probe(const std::string& alias,
                                      const std::vector<std::string>& prompts, std::int64_t n) {
        if (!provider_->scenario().alias_table.count(alias)) {
            throw ProbeError("alias not defined in scenario: " + alias);
        }
        if (n <= 0) throw ProbeError("probe request count must be positive");
        const std::vector<std::string> effective_prompts =
            prompts.empty() ? std::vector<std::string>{"probe:ping"} : prompts;

        ProbeReport report;
        report.probe = ProbeKind::alias_drift;
        std::optional<std::string> previous;
        for (std::int64_t i = 0; i < n; ++i) {
            CompletionRequest req;
            req.request_id = "probe-alias-" + std::to_string(i);
            req.requested_model = alias;
            req.prompt = effective_prompts[static_cast<std::size_t>(i) % effective_prompts.size()];
            const CompletionExchange exchange = handle_completion(req);
            const auto resolved = exchange.receipt.resolved_model;
            if (previous && resolved && *previous != *resolved) {
                report.events.push_back(
                    {exchange.index,
                     "alias \"" + alias + "\" resolution changed: " + *previous + " -> " + *resolved});
            }
            if (resolved) previous = resolved;
        }
        report.summary["requests"] = n;
        report.summary["drift_events"] = static_cast<std::int64_t>(report.events.size());
        return report;
    }

    // Deliberately trigger failures and measure whether each emitted receipt
    // makes the fallback visible (status, route, reason). This gateway is its
    // own positive control: every trigger must be visible.
    ProbeReport run_fallback_probe(const std::vector<FallbackTrigger>& triggers) {
        ProbeReport report;
        report.probe = ProbeKind::fallback_observability;
        const std::int64_t base = next_index_.load();
        std::int64_t max_rel = -1;
        for (const auto& t : triggers) {
            if (t.request_index < 0) throw ProbeError("trigger index must be non-negative");
            provider_->inject_failure(base + t.request_index, t.kind,
                                       t.kind != TriggerKind::unavailable_model);
            max_rel = std::max(max_rel, t.request_index);
        }

        const std::string probe_model = probe_model_name();
        std::map<std::int64_t, RouteReceipt> receipts;
        for (std::int64_t i = 0; i <= max_rel; ++i) {
            CompletionRequest req;
            req.request_id = "probe-fallback-" + std::to_string(i);
            req.requested_model = probe_model;
            req.prompt = "probe:fallback";
            receipts.emplace(i, handle_completion(req).receipt);
        }
        provider_->clear_injected_failures();

        std::int64_t visible_count = 0;
        for (const auto& t : triggers) {
            const auto& r = receipts.at(t.request_index);
            const bool status_visible = r.fallback.status == FallbackStatus::occurred;
            const bool reason_visible = r.fallback.reason.has_value();
            const bool from_visible = r.fallback.from.has_value();
            const bool to_expected = t.kind != TriggerKind::unavailable_model;
            const bool to_visible = !to_expected || r.fallback.to.has_value();
            const bool visible = status_visible && reason_visible && from_visible && to_visible;
            if (visible) ++visible_count;
            std::string detail = std::string(to_string(t.kind)) + " trigger: status=" +
                                 std::string(to_string(r.fallback.status));
            if (r.fallback.from) detail += " from=" + *r.fallback.from;
            if (r.fallback.to) detail += " to=" + *r.fallback.to;
            if (r.fallback.reason) detail += " reason=" + std::string(to_string(*r.fallback.reason));
            detail += " completion=" + std::string(to_string(r.completion_status));
            detail += visible ? " [visible]" : " [NOT VISIBLE]";
            report.events.push_back({t.request_index, std::move(detail)});
        }
        report.summary["triggers"] = static_cast<std::int64_t>(triggers.size());
        report.summary["visible"] = visible_count;
        report.summary["all_visible"] =
            visible_count == static_cast<std::int64_t>(triggers.size()) ? 1 : 0;
        return report;
    }

    std::vector<RouteDecision> decision_log() const { return provider_->decision_log(); }

    ReceiptStore& store() { return store_; }
    const ReceiptStore& store() const { return store_; }
    const GatewayOptions& options() const { return options_; }
    const SimScenario& scenario() const { return provider_->scenario(); }

    LabelOptions label_options_for(const RouteReceipt& r) const {
        LabelOptions opts;
        opts.fast_tiers = options_.fast_tiers;
        if (r.requested_model) {
            if (auto served = parse_rfc3339_utc(r.served_at)) {
                opts.prior_resolved_model =
                    store_.prior_resolved_model(*r.requested_model, *served, r.receipt_id);
            }
        }
        return opts;
    }

private:
    std::unique_ptr<SimulatedProvider> provider_;
    ReceiptStore store_;
    GatewayOptions options_;
    std::atomic<std::int64_t> next_index_{0};

    // The probed primary must not collapse into the chain, or first-hop
    // triggers would leave no hop to fall back to.
    std::string probe_model_name() const {
        const auto& s = provider_->scenario();
        if (!s.alias_table.empty()) return s.alias_table.begin()->first;
        return "probe-primary-model";
    }
};

}  // namespace routereceipt

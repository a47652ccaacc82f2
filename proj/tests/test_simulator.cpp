#include <catch2/catch_amalgamated.hpp>

#include "helpers/test_util.hpp"
#include "routereceipt/simulator.hpp"

using namespace routereceipt;

namespace {

SimScenario scenario(const std::string& name) {
    return SimScenario::parse(rrtest::load_json(rrtest::fixture_dir() / "scenarios" / name));
}

CompletionRequest alias_request(int i) {
    CompletionRequest req;
    req.request_id = "req-" + std::to_string(i);
    req.requested_model = "contract-pro-latest";
    req.requested_tier = "priority";
    req.prompt = "summarize";
    return req;
}

}  // namespace

TEST_CASE("alias resolution follows the active_from schedule") {
    SimulatedProvider provider(scenario("alias_flips.json"));
    REQUIRE(provider.decide(alias_request(0), 0).resolved_model == "contract-pro-2026-03-02");
    REQUIRE(provider.decide(alias_request(29), 29).resolved_model == "contract-pro-2026-03-02");
    REQUIRE(provider.decide(alias_request(30), 30).resolved_model == "contract-pro-2026-04-18");
    REQUIRE(provider.decide(alias_request(69), 69).resolved_model == "contract-pro-2026-04-18");
    REQUIRE(provider.decide(alias_request(70), 70).resolved_model == "contract-pro-2026-05-22");
    REQUIRE(provider.decide(alias_request(0), 0).identifier_type ==
            ModelIdentifierType::moving_alias);
}

TEST_CASE("unknown models resolve to themselves as fixed identifiers") {
    SimulatedProvider provider(scenario("static_alias.json"));
    CompletionRequest req;
    req.requested_model = "pinned-model-2026-01-01";
    const auto d = provider.decide(req, 0);
    REQUIRE(d.resolved_model == "pinned-model-2026-01-01");
    REQUIRE(d.identifier_type == ModelIdentifierType::fixed);
}

TEST_CASE("scheduled tier downgrades mark capacity, others none") {
    jdoc doc = rrtest::load_json(rrtest::fixture_dir() / "scenarios/static_alias.json");
    doc["tier_downgrade"] = jdoc{{"indices", jdoc::array({2})}, {"downgrade_to", "standard"}};
    SimulatedProvider provider(SimScenario::parse(doc));
    const auto normal = provider.decide(alias_request(0), 0);
    REQUIRE(normal.effective_tier == "priority");
    REQUIRE(normal.tier_change_reason == TierChangeReason::none);
    const auto downgraded = provider.decide(alias_request(2), 2);
    REQUIRE(downgraded.effective_tier == "standard");
    REQUIRE(downgraded.tier_change_reason == TierChangeReason::capacity);

    // Without a requested tier there is nothing to downgrade from.
    CompletionRequest no_tier;
    no_tier.requested_model = "m";
    const auto d = provider.decide(no_tier, 2);
    REQUIRE(d.effective_tier == "standard");
    REQUIRE_FALSE(d.requested_tier);
    REQUIRE_FALSE(d.tier_change_reason);
}

TEST_CASE("scheduled failures walk the fallback chain") {
    jdoc doc = rrtest::load_json(rrtest::fixture_dir() / "scenarios/static_alias.json");
    doc["fallback_chain"] =
        jdoc{{"models", jdoc::array({"m-b"})},
             {"failures", jdoc::array({jdoc{{"model", "contract-pro-2026-03-02"},
                                            {"indices", jdoc::array({3})},
                                            {"kind", "rate_limit"}}})}};
    SimulatedProvider provider(SimScenario::parse(doc));

    const auto ok = provider.decide(alias_request(2), 2);
    REQUIRE(ok.fallback.status == FallbackStatus::none);
    REQUIRE(ok.resolved_model == "contract-pro-2026-03-02");

    const auto failed = provider.decide(alias_request(3), 3);
    REQUIRE(failed.fallback.status == FallbackStatus::occurred);
    REQUIRE(failed.fallback.from == "contract-pro-2026-03-02");
    REQUIRE(failed.fallback.to == "m-b");
    REQUIRE(failed.fallback.reason == FallbackReason::rate_limit);
    REQUIRE(failed.resolved_model == "m-b");
    REQUIRE(failed.completion_status == CompletionStatus::complete);
}

TEST_CASE("exhausting every hop is an error decision that still reports the route") {
    jdoc doc = rrtest::load_json(rrtest::fixture_dir() / "scenarios/static_alias.json");
    doc["fallback_chain"] =
        jdoc{{"models", jdoc::array({"m-b"})},
             {"failures",
              jdoc::array({jdoc{{"model", "contract-pro-2026-03-02"},
                                {"indices", jdoc::array({1})},
                                {"kind", "provider_error"}},
                           jdoc{{"model", "m-b"}, {"indices", jdoc::array({1})},
                                {"kind", "provider_error"}}})}};
    SimulatedProvider provider(SimScenario::parse(doc));
    const auto d = provider.decide(alias_request(1), 1);
    REQUIRE_FALSE(d.resolved_model);
    REQUIRE(d.completion_status == CompletionStatus::error);
    REQUIRE(d.fallback.status == FallbackStatus::occurred);
    REQUIRE(d.fallback.from == "contract-pro-2026-03-02");
    REQUIRE_FALSE(d.fallback.to);
}

TEST_CASE("tool triggers respect the request's allowed set") {
    SimulatedProvider provider(scenario("northstar.json"));
    CompletionRequest req = alias_request(0);
    const auto d = provider.decide(req, 0);
    REQUIRE(d.tools_used.size() == 1);
    REQUIRE(d.tools_used[0].name == "file_search");
    REQUIRE(d.retrieved_item_count == 6);

    req.tools_allowed = std::vector<std::string>{};  // nothing allowed
    const auto none = provider.decide(req, 0);
    REQUIRE(none.tools_used.empty());
    REQUIRE_FALSE(none.retrieved_item_count);

    req.tools_allowed = std::vector<std::string>{"file_search"};
    REQUIRE(provider.decide(req, 0).tools_used.size() == 1);
}

TEST_CASE("safety schedule intervenes with a masked action") {
    jdoc doc = rrtest::load_json(rrtest::fixture_dir() / "scenarios/static_alias.json");
    doc["safety_schedule"] = jdoc::array({4});
    SimulatedProvider provider(SimScenario::parse(doc));
    const auto clean = provider.decide(alias_request(3), 3);
    REQUIRE(clean.safety.status == SafetyStatus::none);
    const auto hit = provider.decide(alias_request(4), 4);
    REQUIRE(hit.safety.status == SafetyStatus::intervened);
    REQUIRE(hit.safety.category == "sensitive_data");
    REQUIRE(hit.safety.visible_action == SafetyAction::masked);
}

TEST_CASE("decisions are bit-reproducible for equal scenario and seed") {
    const SimScenario s = scenario("mixed.json");
    SimulatedProvider a(s);
    SimulatedProvider b(s);
    for (int i = 0; i < 300; ++i) {
        const auto da = a.decide(alias_request(i), i);
        const auto db = b.decide(alias_request(i), i);
        REQUIRE(da.resolved_model == db.resolved_model);
        REQUIRE(da.effective_tier == db.effective_tier);
        REQUIRE(da.fallback == db.fallback);
        REQUIRE(da.tools_used == db.tools_used);
        REQUIRE(da.safety == db.safety);
        REQUIRE(da.completion_status == db.completion_status);
    }
}

TEST_CASE("probability downgrades differ by seed but not by run") {
    jdoc doc = rrtest::load_json(rrtest::fixture_dir() / "scenarios/static_alias.json");
    doc["tier_downgrade"] = jdoc{{"probability", 0.5}};
    doc["seed"] = 1;
    SimulatedProvider a(SimScenario::parse(doc));
    doc["seed"] = 2;
    SimulatedProvider b(SimScenario::parse(doc));
    int diff = 0;
    for (int i = 0; i < 200; ++i) {
        const bool da = a.decide(alias_request(i), i).effective_tier == "standard";
        const bool db = b.decide(alias_request(i), i).effective_tier == "standard";
        const bool da2 = a.decide(alias_request(i), i).effective_tier == "standard";
        REQUIRE(da == da2);
        if (da != db) ++diff;
    }
    REQUIRE(diff > 0);
}

TEST_CASE("raw metadata round-trips through the simulated-surface extractor") {
    SimulatedProvider provider(scenario("northstar.json"));
    CompletionRequest req = alias_request(0);
    req.requested_effort = EffortLevel::high;
    const auto result = provider.complete(req, 0);
    const auto frag = extract_fragment(ProviderSurface::simulated, result.raw);
    REQUIRE(frag.resolved_model == result.decision.resolved_model);
    REQUIRE(frag.service_tier->effective == result.decision.effective_tier);
    REQUIRE(frag.fallback->status == result.decision.fallback.status);
    REQUIRE(frag.safety->status == result.decision.safety.status);
    REQUIRE(frag.effort->requested == EffortLevel::high);
    REQUIRE(frag.effort->effective_status == EffortStatus::completed);
    REQUIRE(frag.tools->used == result.decision.tools_used);
    REQUIRE(provider.decision_log().size() == 1);
}

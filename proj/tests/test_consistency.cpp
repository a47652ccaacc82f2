#include <catch2/catch_amalgamated.hpp>

#include "helpers/receipt_gen.hpp"
#include "helpers/test_util.hpp"
#include "routereceipt/consistency.hpp"

using namespace routereceipt;

TEST_CASE("golden receipt has zero consistency warnings") {
    REQUIRE(check_consistency(rrtest::golden_receipt()).empty());
}

TEST_CASE("unexplained tier change is flagged") {
    RouteReceipt r = rrtest::golden_receipt();
    r.service_tier = ServiceTierRecord{"priority", "default", TierChangeReason::none};
    const auto warnings = check_consistency(r);
    REQUIRE(warnings.size() == 1);
    REQUIRE(warnings[0].path == "/service_tier/change_reason");
    REQUIRE(warnings[0].code == "tier_change_unexplained");

    // An explained change is fine.
    r.service_tier->change_reason = TierChangeReason::capacity;
    REQUIRE(check_consistency(r).empty());
    // An unexplained-but-unlabeled change is fine too.
    r.service_tier->change_reason.reset();
    REQUIRE(check_consistency(r).empty());
}

TEST_CASE("fallback none with a recorded route is flagged") {
    RouteReceipt r = rrtest::golden_receipt();
    r.fallback = FallbackRecord{FallbackStatus::none, "m-a", "m-b", std::nullopt};
    const auto warnings = check_consistency(r);
    REQUIRE(warnings.size() == 1);
    REQUIRE(warnings[0].path == "/fallback");
    REQUIRE(warnings[0].code == "fallback_none_with_route");
}

TEST_CASE("safety none with a visible action is flagged") {
    RouteReceipt r = rrtest::golden_receipt();
    r.safety = SafetyRecord{SafetyStatus::none, std::nullopt, SafetyAction::masked};
    const auto warnings = check_consistency(r);
    REQUIRE(warnings.size() == 1);
    REQUIRE(warnings[0].path == "/safety");
    REQUIRE(warnings[0].code == "safety_none_with_action");

    r.safety.visible_action = SafetyAction::none;
    REQUIRE(check_consistency(r).empty());
    r.safety.visible_action.reset();
    REQUIRE(check_consistency(r).empty());
}

TEST_CASE("retrieval count mismatch against tool result_refs is flagged") {
    RouteReceipt r = rrtest::golden_receipt();
    r.context->retrieved_item_count = 4;  // tools carry 6 refs
    const auto warnings = check_consistency(r);
    REQUIRE(warnings.size() == 1);
    REQUIRE(warnings[0].path == "/context/retrieved_item_count");
    REQUIRE(warnings[0].code == "retrieval_count_mismatch");

    // No refs recorded anywhere -> nothing to compare against.
    r.tools->used[0].result_refs.reset();
    REQUIRE(check_consistency(r).empty());
}

TEST_CASE("an unapplied redaction entry is flagged, not_collected is exempt") {
    RouteReceipt r = rrtest::golden_receipt();
    r.redactions.push_back({"/resolved_model", RedactionReason::trade_secret, std::nullopt});
    const auto warnings = check_consistency(r);
    REQUIRE(warnings.size() == 1);
    REQUIRE(warnings[0].path == "/redactions/0");
    REQUIRE(warnings[0].code == "redaction_not_applied");

    r.redactions[0].reason = RedactionReason::not_collected;
    REQUIRE(check_consistency(r).empty());

    // A generalized field counts as applied.
    r.redactions[0] = {"/region_class", RedactionReason::contractual, std::nullopt};
    r.region_class = RegionClass::redacted;
    REQUIRE(check_consistency(r).empty());

    // So does a generalized record.
    r.redactions[0] = {"/fallback", RedactionReason::security, std::nullopt};
    r.fallback = FallbackRecord{FallbackStatus::redacted, {}, {}, {}};
    REQUIRE(check_consistency(r).empty());

    // An entry naming an absent field is satisfied trivially.
    r.redactions[0] = {"/provider_chain", RedactionReason::trade_secret, std::nullopt};
    REQUIRE(check_consistency(r).empty());
}

TEST_CASE("warnings never include codes outside the documented rule list") {
    static const std::set<std::string> documented{
        "tier_change_unexplained", "fallback_none_with_route", "safety_none_with_action",
        "retrieval_count_mismatch", "redaction_not_applied"};
    std::mt19937_64 rng(1234);
    rrtest::GenOptions opts;
    opts.allow_redacted_enums = true;
    for (int i = 0; i < 300; ++i) {
        const RouteReceipt r = rrtest::random_receipt(rng, i, opts);
        for (const auto& w : check_consistency(r)) {
            REQUIRE(documented.count(w.code) == 1);
        }
    }
}

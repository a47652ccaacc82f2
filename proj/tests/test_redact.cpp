#include <catch2/catch_amalgamated.hpp>

#include <functional>
#include <set>

#include "helpers/receipt_gen.hpp"
#include "helpers/test_util.hpp"

using namespace routereceipt;

namespace {

const std::vector<Audience> kAudiences{Audience::end_user, Audience::developer,
                                       Audience::administrator, Audience::auditor};

// Leaf paths present and not generalized, bookkeeping subtree excluded.
std::set<std::string> visible_leaves(const RouteReceipt& r) {
    std::set<std::string> out;
    const jdoc doc = receipt_to_json(r);
    std::function<void(const jdoc&, const std::string&)> walk = [&](const jdoc& v,
                                                                    const std::string& path) {
        if (path == "/redactions") return;
        if (v.is_object()) {
            for (const auto& [k, child] : v.items()) walk(child, path + "/" + k);
        } else if (v.is_array()) {
            for (std::size_t i = 0; i < v.size(); ++i) walk(v[i], path + "/" + std::to_string(i));
        } else {
            if (v.is_string() && v.get_ref<const std::string&>() == "redacted") return;
            out.insert(path);
        }
    };
    walk(doc, "");
    return out;
}

bool covered_by_entry(const std::string& leaf, const RedactionEntry& entry, Audience audience) {
    const bool path_match = leaf == entry.field || leaf.rfind(entry.field + "/", 0) == 0;
    if (!path_match) return false;
    if (!entry.visible_to) return false;
    return std::find(entry.visible_to->begin(), entry.visible_to->end(), audience) ==
           entry.visible_to->end();
}

}  // namespace

TEST_CASE("auditor view under an empty policy is the receipt itself") {
    const RouteReceipt r = rrtest::golden_receipt();
    const AudienceView view = view_for(r, Audience::auditor, RedactionPolicy{});
    REQUIRE(view.receipt == r);
}

TEST_CASE("a rule visible to auditors only strips the field below auditor") {
    RouteReceipt r = rrtest::golden_receipt();
    r.provider_chain = std::vector<ProviderHop>{{HopRole::served, "sim-provider",
                                                 std::string("contract-pro-2026-04-18"), {}}};
    RedactionPolicy policy;
    policy.rules.push_back(make_rule("/provider_chain", RedactionReason::trade_secret,
                                     {Audience::auditor}));

    const AudienceView auditor = view_for(r, Audience::auditor, policy);
    REQUIRE(auditor.receipt.provider_chain.has_value());
    REQUIRE(auditor.receipt.redactions.empty());

    const AudienceView end_user = view_for(r, Audience::end_user, policy);
    REQUIRE_FALSE(end_user.receipt.provider_chain.has_value());
    REQUIRE(end_user.receipt.redactions.size() == 1);
    REQUIRE(end_user.receipt.redactions[0].field == "/provider_chain");
    REQUIRE(end_user.receipt.redactions[0].visible_to ==
            std::vector<Audience>{Audience::auditor});
}

TEST_CASE("required enum fields are generalized, and the view re-validates") {
    const RouteReceipt r = rrtest::golden_receipt();
    RedactionPolicy policy;
    policy.rules.push_back(make_rule("/region_class", RedactionReason::contractual,
                                     {Audience::administrator, Audience::auditor}));
    const AudienceView developer = view_for(r, Audience::developer, policy);
    REQUIRE(developer.receipt.region_class == RegionClass::redacted);
    REQUIRE(developer.receipt.redactions.size() == 1);
    REQUIRE(validate_json(receipt_to_json(developer.receipt)).valid());

    const AudienceView admin = view_for(r, Audience::administrator, policy);
    REQUIRE(admin.receipt.region_class == RegionClass::user_selected_region);
}

TEST_CASE("whole-record generalization keeps fallback and safety schema-valid") {
    RouteReceipt r = rrtest::golden_receipt();
    r.fallback = FallbackRecord{FallbackStatus::occurred, "m-a", "m-b", FallbackReason::rate_limit};
    RedactionPolicy policy;
    policy.rules.push_back(make_rule("/fallback", RedactionReason::security, {Audience::auditor}));
    const AudienceView view = view_for(r, Audience::developer, policy);
    REQUIRE(view.receipt.fallback.status == FallbackStatus::redacted);
    REQUIRE_FALSE(view.receipt.fallback.from);
    REQUIRE(validate_json(receipt_to_json(view.receipt)).valid());
    REQUIRE(check_consistency(view.receipt).empty());
}

TEST_CASE("policy rules on unhideable or unknown paths are load errors") {
    REQUIRE_THROWS_AS(make_rule("/receipt_id", RedactionReason::privacy, {Audience::auditor}),
                      PolicyLoadError);
    REQUIRE_THROWS_AS(make_rule("/completion_status", RedactionReason::privacy, {Audience::auditor}),
                      PolicyLoadError);
    REQUIRE_THROWS_AS(make_rule("/no_such_field", RedactionReason::privacy, {Audience::auditor}),
                      PolicyLoadError);
    REQUIRE_THROWS_AS(make_rule("/safety/category", RedactionReason::privacy, {}), PolicyLoadError);
}

TEST_CASE("visible_to sets are upward-closed at load") {
    const auto rule = make_rule("/safety/category", RedactionReason::safety, {Audience::developer});
    REQUIRE(rule.visible_to == std::vector<Audience>{Audience::developer, Audience::administrator,
                                                     Audience::auditor});
}

TEST_CASE("policy files parse and the shipped default matches the built-in") {
    const jdoc doc = rrtest::load_json(rrtest::fixture_dir() / "policies/default_redaction.json");
    REQUIRE(parse_redaction_policy(doc) == default_redaction_policy());
}

TEST_CASE("default policy hides provider_chain and safety category from end users") {
    RouteReceipt r = rrtest::golden_receipt();
    r.provider_chain = std::vector<ProviderHop>{{HopRole::served, "sim-provider", {}, {}}};
    r.safety.category = "sensitive_data";
    const auto policy = default_redaction_policy();
    const AudienceView end_user = view_for(r, Audience::end_user, policy);
    REQUIRE_FALSE(end_user.receipt.provider_chain);
    REQUIRE_FALSE(end_user.receipt.safety.category);
    const AudienceView auditor = view_for(r, Audience::auditor, policy);
    REQUIRE(auditor.receipt == r);
}

TEST_CASE("default_visibility floors hide with reason contractual") {
    const RouteReceipt r = rrtest::golden_receipt();
    RedactionPolicy policy;
    policy.default_visibility["/resolved_model"] = Audience::developer;
    const AudienceView view = view_for(r, Audience::end_user, policy);
    REQUIRE_FALSE(view.receipt.resolved_model);
    REQUIRE(view.receipt.redactions.size() == 1);
    REQUIRE(view.receipt.redactions[0].reason == RedactionReason::contractual);
    REQUIRE(view_for(r, Audience::developer, policy).receipt.resolved_model ==
            r.resolved_model);
}

TEST_CASE("redaction properties hold over randomized receipts and policies") {
    std::mt19937_64 rng(0xBADC0DEu);
    for (int i = 0; i < 300; ++i) {
        const RouteReceipt r = rrtest::random_receipt(rng, i);
        const RedactionPolicy policy = rrtest::random_policy(rng);
        std::vector<AudienceView> views;
        for (auto audience : kAudiences) views.push_back(view_for(r, audience, policy));

        // Monotone disclosure.
        for (std::size_t a = 0; a + 1 < views.size(); ++a) {
            const auto lower = visible_leaves(views[a].receipt);
            const auto higher = visible_leaves(views[a + 1].receipt);
            for (const auto& leaf : lower) {
                CAPTURE(i, a, leaf);
                REQUIRE(higher.count(leaf) == 1);
            }
        }

        const auto full = visible_leaves(r);
        for (std::size_t a = 0; a < views.size(); ++a) {
            const auto& view = views[a];
            // Schema preservation.
            REQUIRE(validate_json(receipt_to_json(view.receipt)).valid());
            // Bookkeeping completeness: every leaf hidden or generalized
            // relative to the full receipt is covered by an entry excluding
            // this audience.
            const auto seen = visible_leaves(view.receipt);
            for (const auto& leaf : full) {
                if (seen.count(leaf)) continue;
                bool covered = false;
                for (const auto& entry : view.receipt.redactions) {
                    if (covered_by_entry(leaf, entry, kAudiences[a])) {
                        covered = true;
                        break;
                    }
                }
                CAPTURE(i, a, leaf);
                REQUIRE(covered);
            }
            // Idempotence.
            const AudienceView again = view_for(view.receipt, kAudiences[a], policy);
            REQUIRE(again.receipt == view.receipt);
        }
    }
}

TEST_CASE("golden receipt yields all-absent labels") {
    const auto labels = end_user_labels(rrtest::golden_receipt());
    REQUIRE(labels.size() == 6);
    for (const auto& l : labels) {
        CAPTURE(to_string(l.code));
        REQUIRE_FALSE(l.present);
    }
}

TEST_CASE("labels fire on their direct conditions") {
    RouteReceipt r = rrtest::golden_receipt();
    r.fallback = FallbackRecord{FallbackStatus::occurred, {}, {}, FallbackReason::rate_limit};
    r.completion_status = CompletionStatus::length_limit;
    r.safety.status = SafetyStatus::intervened;
    r.tools->used.push_back({"web_search", 2, std::nullopt, std::nullopt});
    const auto labels = end_user_labels(r);
    auto present = [&](LabelCode code) {
        for (const auto& l : labels) {
            if (l.code == code) return l.present;
        }
        return false;
    };
    REQUIRE(present(LabelCode::fallback_used));
    REQUIRE(present(LabelCode::incomplete_response));
    REQUIRE(present(LabelCode::safety_restricted));
    REQUIRE(present(LabelCode::web_search_used));
    REQUIRE_FALSE(present(LabelCode::fast_mode));
    REQUIRE_FALSE(present(LabelCode::model_updated));
}

TEST_CASE("web_search with zero invocations does not fire the label") {
    RouteReceipt r = rrtest::golden_receipt();
    r.tools->used.push_back({"web_search", 0, std::nullopt, std::nullopt});
    const auto labels = end_user_labels(r);
    REQUIRE_FALSE(labels[0].present);
}

TEST_CASE("fast_mode follows requested effort and the configured fast tiers") {
    RouteReceipt r = rrtest::golden_receipt();
    r.effort->requested = EffortLevel::low;
    REQUIRE(end_user_labels(r)[1].present);

    r.effort->requested = EffortLevel::high;
    LabelOptions opts;
    opts.fast_tiers = {"priority"};
    REQUIRE(end_user_labels(r, opts)[1].present);
    REQUIRE_FALSE(end_user_labels(r)[1].present);
}

TEST_CASE("model_updated needs history and a differing resolution") {
    const RouteReceipt r = rrtest::golden_receipt();
    REQUIRE_FALSE(end_user_labels(r)[2].present);
    LabelOptions opts;
    opts.prior_resolved_model = "contract-pro-2026-03-02";
    REQUIRE(end_user_labels(r, opts)[2].present);
    opts.prior_resolved_model = *r.resolved_model;
    REQUIRE_FALSE(end_user_labels(r, opts)[2].present);
}

TEST_CASE("labels are deterministic in their fixed order") {
    const RouteReceipt r = rrtest::golden_receipt();
    const auto a = end_user_labels(r);
    const auto b = end_user_labels(r);
    REQUIRE(a == b);
    REQUIRE(to_string(a[0].code) == "web_search_used");
    REQUIRE(to_string(a[5].code) == "incomplete_response");
}

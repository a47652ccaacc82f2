#include <catch2/catch_amalgamated.hpp>

#include "helpers/receipt_gen.hpp"
#include "helpers/test_util.hpp"

using namespace routereceipt;

TEST_CASE("golden receipt round-trips byte-for-byte") {
    const std::string text = rrtest::golden_receipt_text();
    const RouteReceipt r = parse_receipt_text(text);
    REQUIRE(canonical_serialize(r) == text);
}

TEST_CASE("canonical serialization is idempotent and order-normalizing") {
    // Same fields, scrambled key order.
    const std::string scrambled = R"({
      "redactions": [],
      "completion_status": "complete",
      "region_class": "user_selected_region",
      "safety": {"visible_action": "none", "status": "none"},
      "fallback": {"reason": "none", "status": "none"},
      "served_at": "2026-06-16T14:03:00Z",
      "request_id": "req-northstar-0001",
      "receipt_id": "rr-7c2f41a8a9b34de0b6d5c3f2e1908a4d",
      "model_identifier_type": "moving_alias",
      "resolved_model": "contract-pro-2026-04-18",
      "requested_model": "contract-pro-latest",
      "effort": {"effective_status": "completed", "requested": "high"},
      "context": {"retrieved_item_count": 6, "input_truncated": "false"},
      "tools": {"used": [{"result_refs": ["contract_chunks[14]","contract_chunks[15]","contract_chunks[22]","contract_chunks[41]","policy_chunks[3]","policy_chunks[8]"], "invocation_count": 1, "name": "file_search"}]},
      "service_tier": {"change_reason": "none", "effective": "priority", "requested": "priority"}
    })";
    const RouteReceipt from_scrambled = parse_receipt_text(scrambled);
    REQUIRE(canonical_serialize(from_scrambled) == rrtest::golden_receipt_text());
    REQUIRE(canonical_serialize(parse_receipt_text(canonical_serialize(from_scrambled))) ==
            canonical_serialize(from_scrambled));
}

TEST_CASE("minimal receipt keeps optional fields absent") {
    const std::string minimal = R"({
      "schema_version": "route-receipt.v0.1",
      "receipt_id": "rr-1",
      "request_id": "q-1",
      "served_at": "2026-01-02T03:04:05Z",
      "model_identifier_type": "unknown",
      "fallback": {"status": "unknown"},
      "safety": {"status": "unknown"},
      "region_class": "unknown",
      "completion_status": "unknown",
      "redactions": []
    })";
    const RouteReceipt r = parse_receipt_text(minimal);
    REQUIRE_FALSE(r.requested_model);
    REQUIRE_FALSE(r.resolved_model);
    REQUIRE_FALSE(r.service_tier);
    REQUIRE_FALSE(r.effort);
    REQUIRE_FALSE(r.tools);
    REQUIRE_FALSE(r.context);
    REQUIRE_FALSE(r.provider_chain);
    REQUIRE_FALSE(r.retention_class);
    REQUIRE_FALSE(r.provider_extensions);
    REQUIRE_FALSE(r.fallback.from);
    REQUIRE_FALSE(r.fallback.reason);
}

TEST_CASE("provider_extensions content survives verbatim with sorted keys") {
    jdoc doc = rrtest::load_json(rrtest::golden_dir() / "golden_s7.json");
    doc["provider_extensions"] = jdoc::parse(R"({"zeta": 1, "alpha": {"y": 2, "x": [3, 1.5, "s"]}})");
    const RouteReceipt r = parse_receipt(doc);
    const std::string once = canonical_serialize(r);
    const std::string twice = canonical_serialize(parse_receipt_text(once));
    REQUIRE(once == twice);
    REQUIRE(once.find(R"("provider_extensions":{"alpha":{"x":[3,1.5,"s"],"y":2},"zeta":1})") !=
            std::string::npos);
}

TEST_CASE("parse_receipt rejects invalid documents with the report attached") {
    jdoc doc = rrtest::load_json(rrtest::golden_dir() / "golden_s7.json");
    doc.erase("redactions");
    try {
        parse_receipt(doc);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        REQUIRE(e.report.errors.size() == 1);
        REQUIRE(e.report.errors[0].path == "/redactions");
    }
}

TEST_CASE("round trip holds for randomized receipts") {
    std::mt19937_64 rng(0xC0FFEEu);
    rrtest::GenOptions opts;
    opts.allow_redacted_enums = true;
    for (int i = 0; i < 500; ++i) {
        const RouteReceipt r = rrtest::random_receipt(rng, i, opts);
        const std::string text = canonical_serialize(r);
        CAPTURE(text);
        const auto report = validate_document(text);
        REQUIRE(report.valid());
        const RouteReceipt back = parse_receipt_text(text);
        REQUIRE(back == r);
        REQUIRE(canonical_serialize(back) == text);
    }
}

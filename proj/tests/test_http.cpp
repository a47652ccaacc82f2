#include <catch2/catch_amalgamated.hpp>

#include <thread>

#include "helpers/test_util.hpp"
#include "routereceipt/http_server.hpp"

using namespace routereceipt;

namespace {

struct TestServer {
    Gateway gateway;
    httplib::Server server;
    int port = 0;
    std::thread thread;

    explicit TestServer(const std::string& scenario_name)
        : gateway(SimScenario::parse(
                      rrtest::load_json(rrtest::fixture_dir() / "scenarios" / scenario_name)),
                  rrtest::fresh_dir("http"),
                  [] {
                      GatewayOptions opts;
                      opts.clock = fixed_clock("2026-06-16T14:03:00Z");
                      return opts;
                  }()) {
        register_routes(server, gateway);
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~TestServer() {
        server.stop();
        thread.join();
    }

    httplib::Client client() { return httplib::Client("127.0.0.1", port); }
};

jdoc body_of(const httplib::Result& res) { return jdoc::parse(res->body); }

}  // namespace

TEST_CASE("ingest then fetch: 201, audience views, 404, 409") {
    TestServer ts("static_alias.json");
    auto client = ts.client();

    const std::string golden = rrtest::golden_receipt_text();
    auto posted = client.Post("/v1/receipts", golden, "application/json");
    REQUIRE(posted);
    REQUIRE(posted->status == 201);
    const std::string id = body_of(posted).at("receipt_id").get<std::string>();
    REQUIRE(id == rrtest::golden_receipt().receipt_id);

    auto dup = client.Post("/v1/receipts", golden, "application/json");
    REQUIRE(dup->status == 409);

    auto fetched = client.Get("/v1/receipts/" + id);
    REQUIRE(fetched->status == 200);
    REQUIRE(jdoc(body_of(fetched).at("receipt")).dump() ==
            receipt_to_json(rrtest::golden_receipt()).dump());

    auto end_user = client.Get("/v1/receipts/" + id + "?audience=end_user");
    REQUIRE(end_user->status == 200);
    const jdoc view = body_of(end_user);
    REQUIRE(view.contains("labels"));
    REQUIRE(view.at("labels").size() == 6);

    auto missing = client.Get("/v1/receipts/rr-none");
    REQUIRE(missing->status == 404);
}

TEST_CASE("invalid ingest is a 422 with the validation report") {
    TestServer ts("static_alias.json");
    auto client = ts.client();
    jdoc doc = rrtest::load_json(rrtest::golden_dir() / "golden_s7.json");
    doc.erase("redactions");
    auto res = client.Post("/v1/receipts", doc.dump(), "application/json");
    REQUIRE(res->status == 422);
    const jdoc report = body_of(res);
    REQUIRE(report.at("errors").size() == 1);
    REQUIRE(report.at("errors")[0].at("path") == "/redactions");
}

TEST_CASE("malformed bodies are 400 with a root-level report") {
    TestServer ts("static_alias.json");
    auto client = ts.client();
    auto res = client.Post("/v1/validate", "{oops", "application/json");
    REQUIRE(res->status == 400);
    const jdoc report = body_of(res);
    REQUIRE(report.at("errors")[0].at("path") == "");
    REQUIRE(report.at("errors")[0].at("kind") == "bad_type");
}

TEST_CASE("validate endpoint returns the report with 200/422") {
    TestServer ts("static_alias.json");
    auto client = ts.client();
    auto ok = client.Post("/v1/validate", rrtest::golden_receipt_text(), "application/json");
    REQUIRE(ok->status == 200);
    REQUIRE(body_of(ok).at("valid") == true);

    jdoc bad = rrtest::load_json(rrtest::golden_dir() / "golden_s7.json");
    bad["model_identifier_type"] = "experimental";
    auto rejected = client.Post("/v1/validate", bad.dump(), "application/json");
    REQUIRE(rejected->status == 422);
    REQUIRE(body_of(rejected).at("errors")[0].at("kind") == "bad_enum");
}

TEST_CASE("constraint evaluation over HTTP flags the drift") {
    TestServer ts("static_alias.json");
    auto client = ts.client();
    jdoc body;
    body["receipt"] = rrtest::load_json(rrtest::golden_dir() / "golden_s7.json");
    body["policy"] = rrtest::load_json(rrtest::fixture_dir() / "policies/northstar_constraints.json");
    auto res = client.Post("/v1/constraints/evaluate", body.dump(), "application/json");
    REQUIRE(res->status == 200);
    const jdoc violations = body_of(res).at("violations");
    REQUIRE(violations.size() == 1);
    REQUIRE(violations[0].at("code") == "model_drift");
}

TEST_CASE("completions emit receipts and aggregates see them") {
    TestServer ts("northstar.json");
    auto client = ts.client();
    jdoc req;
    req["requested_model"] = "contract-pro-latest";
    req["requested_tier"] = "priority";
    req["requested_effort"] = "high";
    req["request_id"] = "req-http-1";
    auto res = client.Post("/v1/completions", req.dump(), "application/json");
    REQUIRE(res->status == 200);
    const jdoc completion = body_of(res);
    REQUIRE(completion.contains("receipt_id"));
    REQUIRE(completion.at("receipt").at("resolved_model") == "contract-pro-2026-04-18");

    auto agg = client.Get(
        "/v1/aggregates/fallback_rate?from=2026-01-01T00:00:00Z&to=2027-01-01T00:00:00Z");
    REQUIRE(agg->status == 200);
    REQUIRE(body_of(agg).at("denominator") == 1);

    auto bad_metric = client.Get(
        "/v1/aggregates/nope?from=2026-01-01T00:00:00Z&to=2027-01-01T00:00:00Z");
    REQUIRE(bad_metric->status == 400);
}

TEST_CASE("the role header caps the requested audience") {
    TestServer ts("static_alias.json");
    auto client = ts.client();
    client.Post("/v1/receipts", rrtest::golden_receipt_text(), "application/json");
    const std::string id = rrtest::golden_receipt().receipt_id;

    httplib::Headers end_user_role{{"X-Access-Role", "end_user"}};
    auto denied = client.Get("/v1/receipts/" + id + "?audience=auditor", end_user_role);
    REQUIRE(denied->status == 403);
    auto allowed = client.Get("/v1/receipts/" + id + "?audience=end_user", end_user_role);
    REQUIRE(allowed->status == 200);
    auto defaulted = client.Get("/v1/receipts/" + id, end_user_role);
    REQUIRE(defaulted->status == 200);
    REQUIRE(body_of(defaulted).contains("labels"));
}

TEST_CASE("probe endpoints run against the gateway scenario") {
    TestServer ts("alias_flips.json");
    auto client = ts.client();
    jdoc req;
    req["alias"] = "contract-pro-latest";
    req["n"] = 100;
    auto res = client.Post("/v1/probes/alias-drift", req.dump(), "application/json");
    REQUIRE(res->status == 200);
    const jdoc report = body_of(res);
    REQUIRE(report.at("summary").at("drift_events") == 2);

    jdoc unknown;
    unknown["alias"] = "nope";
    REQUIRE(client.Post("/v1/probes/alias-drift", unknown.dump(), "application/json")->status ==
            400);

    TestServer with_chain("mixed.json");
    auto chain_client = with_chain.client();
    jdoc fb;
    fb["triggers"] = jdoc::array({jdoc{{"kind", "rate_limit"}, {"request_index", 2}}});
    auto fb_res = chain_client.Post("/v1/probes/fallback", fb.dump(), "application/json");
    REQUIRE(fb_res->status == 200);
    REQUIRE(body_of(fb_res).at("summary").at("all_visible") == 1);
}

TEST_CASE("schema endpoint serves the embedded schema") {
    TestServer ts("static_alias.json");
    auto client = ts.client();
    auto res = client.Get("/v1/schema");
    REQUIRE(res->status == 200);
    REQUIRE(res->body == export_schema_text());
}

#pragma once

// HTTP/1.1 JSON transport over the gateway. Endpoints:
//
//   POST /v1/completions                 run one simulated completion
//   POST /v1/receipts                    ingest an externally built receipt
//   GET  /v1/receipts/{id}?audience=     audience-scoped view (+labels for end users)
//   POST /v1/validate                    schema-validate a document
//   POST /v1/constraints/evaluate        {"receipt":..., "policy":...} -> violations
//   GET  /v1/aggregates/{metric}?from=&to=
//   POST /v1/probes/alias-drift          {"alias":..., "prompts":[...], "n":...}
//   POST /v1/probes/fallback             {"triggers":[{"kind":...,"request_index":...}]}
//   GET  /v1/schema                      the embedded schema
//
// Status map: 200/201 success, 400 malformed body, 403 audience above the
// caller's role, 404 unknown id, 409 duplicate id, 410 purged (tombstone
// body), 422 validation failure.
//
// Audience: the `audience` parameter picks the view, capped by the
// X-Access-Role header; with no header the deployment boundary is trusted
// and the cap is auditor.

#include <httplib.h>

#include "routereceipt/gateway.hpp"

namespace routereceipt {

namespace detail {

inline void send_json(httplib::Response& res, int status, const jdoc& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

inline jdoc error_body(const std::string& message) { return jdoc{{"error", message}}; }

inline jdoc malformed_body_report() {
    ValidationReport report;
    report.errors.push_back({"", ErrorKind::bad_type, "input is not well-formed JSON"});
    return report.to_json();
}

inline std::optional<jdoc> parse_body(const httplib::Request& req, httplib::Response& res) {
    jdoc doc = jdoc::parse(req.body, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) {
        send_json(res, 400, malformed_body_report());
        return std::nullopt;
    }
    return doc;
}

// Audience resolution; nullopt means a response was already sent.
inline std::optional<Audience> resolve_audience(const httplib::Request& req,
                                                httplib::Response& res) {
    Audience cap = Audience::auditor;
    if (req.has_header("X-Access-Role")) {
        const auto role = req.get_header_value("X-Access-Role");
        auto parsed = enum_from_string<Audience>(role);
        if (!parsed) {
            send_json(res, 400, error_body("unknown access role: " + role));
            return std::nullopt;
        }
        cap = *parsed;
    }
    Audience requested = cap;
    if (req.has_param("audience")) {
        const auto name = req.get_param_value("audience");
        auto parsed = enum_from_string<Audience>(name);
        if (!parsed) {
            send_json(res, 400, error_body("unknown audience: " + name));
            return std::nullopt;
        }
        requested = *parsed;
    }
    if (audience_rank(requested) > audience_rank(cap)) {
        send_json(res, 403, error_body("audience exceeds access role"));
        return std::nullopt;
    }
    return requested;
}

inline std::optional<CompletionRequest> parse_completion_request(const jdoc& doc,
                                                                 httplib::Response& res) {
    if (!doc.contains("requested_model")) {
        send_json(res, 400, error_body("requested_model is required"));
        return std::nullopt;
    }
    CompletionRequest req;
    req.requested_model = doc.at("requested_model").get<std::string>();
    req.request_id = doc.value("request_id", std::string{});
    if (auto it = doc.find("requested_tier"); it != doc.end()) {
        req.requested_tier = it->get<std::string>();
    }
    if (auto it = doc.find("requested_effort"); it != doc.end()) {
        auto level = enum_from_string<EffortLevel>(it->get_ref<const std::string&>());
        if (!level) {
            send_json(res, 400, error_body("unknown requested_effort: " + it->dump()));
            return std::nullopt;
        }
        req.requested_effort = *level;
    }
    if (auto it = doc.find("tools_allowed"); it != doc.end()) {
        req.tools_allowed = it->get<std::vector<std::string>>();
    }
    if (auto it = doc.find("region_preference"); it != doc.end()) {
        req.region_preference = it->get<std::string>();
    }
    req.prompt = doc.value("prompt", std::string{});
    return req;
}

}  // namespace detail

inline void register_routes(httplib::Server& server, Gateway& gateway) {
    using detail::error_body;
    using detail::send_json;

    server.Post("/v1/completions", [&gateway](const httplib::Request& req, httplib::Response& res) {
        auto doc = detail::parse_body(req, res);
        if (!doc) return;
        auto completion_req = detail::parse_completion_request(*doc, res);
        if (!completion_req) return;
        const CompletionExchange exchange = gateway.handle_completion(*completion_req);
        jdoc body;
        body["text"] = exchange.text;
        body["receipt_id"] = exchange.receipt.receipt_id;
        body["receipt"] = receipt_to_json(exchange.receipt);
        send_json(res, 200, body);
    });

    server.Post("/v1/receipts", [&gateway](const httplib::Request& req, httplib::Response& res) {
        auto doc = detail::parse_body(req, res);
        if (!doc) return;
        try {
            const std::string id = gateway.ingest(*doc);
            send_json(res, 201, jdoc{{"receipt_id", id}});
        } catch (const ValidationError& e) {
            send_json(res, 422, e.report.to_json());
        } catch (const StoreError& e) {
            if (e.kind == StoreError::Kind::duplicate_id) {
                send_json(res, 409, error_body(e.what()));
            } else {
                send_json(res, 500, error_body(e.what()));
            }
        }
    });

    server.Get(R"(/v1/receipts/([^/]+))", [&gateway](const httplib::Request& req,
                                                     httplib::Response& res) {
        const auto audience = detail::resolve_audience(req, res);
        if (!audience) return;
        const auto result = gateway.serve_receipt(req.matches[1].str(), *audience);
        switch (result.status) {
            case ReceiptStore::GetResult::Status::found: {
                jdoc body;
                body["receipt"] = receipt_to_json(result.view->receipt);
                if (*audience == Audience::end_user) {
                    body["labels"] = labels_to_json(end_user_labels(
                        result.view->receipt, gateway.label_options_for(result.view->receipt)));
                }
                send_json(res, 200, body);
                return;
            }
            case ReceiptStore::GetResult::Status::purged:
                send_json(res, 410, result.tombstone->to_json());
                return;
            case ReceiptStore::GetResult::Status::not_found:
                send_json(res, 404, error_body("no receipt with that id"));
                return;
        }
    });

    server.Post("/v1/validate", [](const httplib::Request& req, httplib::Response& res) {
        auto doc = detail::parse_body(req, res);
        if (!doc) return;
        const ValidationReport report = Gateway::serve_validate(*doc);
        send_json(res, report.valid() ? 200 : 422, report.to_json());
    });

    server.Post("/v1/constraints/evaluate", [&gateway](const httplib::Request& req,
                                                       httplib::Response& res) {
        auto doc = detail::parse_body(req, res);
        if (!doc) return;
        if (!doc->contains("receipt") || !doc->contains("policy")) {
            send_json(res, 400, error_body("body must carry \"receipt\" and \"policy\""));
            return;
        }
        try {
            const ConstraintPolicy policy = parse_constraint_policy(doc->at("policy"));
            const auto violations = gateway.serve_evaluate(doc->at("receipt"), policy);
            jdoc body;
            body["violations"] = violations_to_json(violations);
            send_json(res, 200, body);
        } catch (const ValidationError& e) {
            send_json(res, 422, e.report.to_json());
        } catch (const Error& e) {
            send_json(res, 400, error_body(e.what()));
        }
    });

    server.Get(R"(/v1/aggregates/([^/]+))", [&gateway](const httplib::Request& req,
                                                       httplib::Response& res) {
        const auto metric = enum_from_string<AggregateMetric>(req.matches[1].str());
        if (!metric) {
            send_json(res, 400, error_body("unknown metric: " + req.matches[1].str()));
            return;
        }
        if (!req.has_param("from") || !req.has_param("to")) {
            send_json(res, 400, error_body("from and to are required"));
            return;
        }
        const auto from = parse_rfc3339_utc(req.get_param_value("from"));
        const auto to = parse_rfc3339_utc(req.get_param_value("to"));
        if (!from || !to || !(*from <= *to)) {
            send_json(res, 400, error_body("from/to must be RFC 3339 UTC with from <= to"));
            return;
        }
        send_json(res, 200, gateway.serve_aggregate(*metric, {*from, *to}).to_json());
    });

    server.Post("/v1/probes/alias-drift", [&gateway](const httplib::Request& req,
                                                     httplib::Response& res) {
        auto doc = detail::parse_body(req, res);
        if (!doc) return;
        if (!doc->contains("alias")) {
            send_json(res, 400, error_body("alias is required"));
            return;
        }
        std::vector<std::string> prompts;
        if (auto it = doc->find("prompts"); it != doc->end()) {
            prompts = it->get<std::vector<std::string>>();
        }
        const std::int64_t n = doc->value("n", std::int64_t{100});
        try {
            send_json(res, 200,
                      gateway.run_alias_drift_probe(doc->at("alias").get<std::string>(), prompts, n)
                          .to_json());
        } catch (const ProbeError& e) {
            send_json(res, 400, error_body(e.what()));
        }
    });

    server.Post("/v1/probes/fallback", [&gateway](const httplib::Request& req,
                                                  httplib::Response& res) {
        auto doc = detail::parse_body(req, res);
        if (!doc) return;
        std::vector<FallbackTrigger> triggers;
        if (auto it = doc->find("triggers"); it != doc->end()) {
            for (const auto& t : *it) {
                const auto kind = enum_from_string<TriggerKind>(
                    t.at("kind").template get_ref<const std::string&>());
                if (!kind) {
                    send_json(res, 400, error_body("unknown trigger kind: " + t.at("kind").dump()));
                    return;
                }
                triggers.push_back({*kind, t.at("request_index").template get<std::int64_t>()});
            }
        }
        try {
            send_json(res, 200, gateway.run_fallback_probe(triggers).to_json());
        } catch (const ProbeError& e) {
            send_json(res, 400, error_body(e.what()));
        }
    });

    server.Get("/v1/schema", [](const httplib::Request&, httplib::Response& res) {
        res.status = 200;
        res.set_content(export_schema_text(), "application/json");
    });
}

}  // namespace routereceipt

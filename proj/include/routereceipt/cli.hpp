#pragma once

// Command-line front door. Subcommands: validate, view, normalize, eval,
// aggregate, probe (alias-drift | fallback), schema. Exit codes are part of
// the contract:
//
//   0  operation succeeded and, for validate/eval, the result is clean
//   1  validation errors, constraint violations, or bad input data
//   2  usage errors
//   3  I/O errors
//
// --json emits compact canonical machine output; the default human form is
// pretty-printed. Both are byte-stable for identical inputs.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "routereceipt/gateway.hpp"

namespace routereceipt::cli {

constexpr int kExitOk = 0;
constexpr int kExitDirty = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct IoFailure : Error {
    using Error::Error;
};

struct DataFailure : Error {
    using Error::Error;
};

namespace detail {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoFailure("read failed: " + path);
    return buf.str();
}

inline jdoc parse_json_file(const std::string& path) {
    jdoc doc = jdoc::parse(read_file(path), nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) throw DataFailure(path + " is not well-formed JSON");
    return doc;
}

inline void emit(std::ostream& out, const jdoc& doc, bool machine) {
    out << (machine ? doc.dump() : doc.dump(2)) << "\n";
}

inline Audience parse_audience_or_throw(const std::string& name) {
    auto a = enum_from_string<Audience>(name);
    if (!a) throw CLI::ValidationError("--audience", "unknown audience: " + name);
    return *a;
}

inline Envelope parse_envelope(const jdoc& doc) {
    Envelope env;
    env.receipt_id = doc.value("receipt_id", std::string{});
    env.request_id = doc.value("request_id", std::string{});
    env.served_at = doc.value("served_at", std::string{});
    if (env.request_id.empty() || env.served_at.empty()) {
        throw DataFailure("envelope must carry request_id and served_at");
    }
    if (!parse_rfc3339_utc(env.served_at)) {
        throw DataFailure("envelope served_at is not RFC 3339 UTC: " + env.served_at);
    }
    auto req_enum = [&doc](const char* key, auto& slot, auto parse) {
        auto it = doc.find(key);
        if (it == doc.end()) throw DataFailure(std::string("envelope must carry ") + key);
        auto v = parse(it->template get_ref<const std::string&>());
        if (!v) throw DataFailure(std::string("envelope ") + key + " has unknown value: " + it->dump());
        slot = *v;
    };
    req_enum("model_identifier_type", env.model_identifier_type,
             enum_from_string<ModelIdentifierType>);
    req_enum("region_class", env.region_class, enum_from_string<RegionClass>);
    req_enum("completion_status", env.completion_status, enum_from_string<CompletionStatus>);
    if (auto it = doc.find("retention_class"); it != doc.end()) {
        auto v = enum_from_string<RetentionClass>(it->get_ref<const std::string&>());
        if (!v) throw DataFailure("envelope retention_class has unknown value: " + it->dump());
        env.retention_class = *v;
    }
    return env;
}

inline void render_labels(std::ostream& out, const std::vector<EndUserLabel>& labels) {
    out << "end-user labels:\n";
    for (const auto& l : labels) {
        out << "  [" << (l.present ? 'x' : ' ') << "] " << to_string(l.code) << "\n";
    }
}

inline std::filesystem::path pick_store_dir(const std::string& flag_value, bool allow_temp) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("RR_STORE_PATH")) return env;
    if (allow_temp) {
        auto dir = std::filesystem::temp_directory_path() /
                   ("rr-probe-store-" + mint_receipt_id().substr(3, 12));
        return dir;
    }
    throw CLI::ValidationError("store", "no store given and RR_STORE_PATH is unset");
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"route receipt toolkit"};
    app.require_subcommand(1);
    bool machine = false;
    app.add_flag("--json", machine, "emit compact machine JSON");

    // validate FILE
    std::string validate_file;
    auto* cmd_validate = app.add_subcommand("validate", "schema-validate a receipt document");
    cmd_validate->add_option("file", validate_file, "receipt JSON file")->required();

    // view --audience A [--policy P] FILE
    std::string view_audience, view_policy, view_file;
    auto* cmd_view = app.add_subcommand("view", "audience-scoped view of a receipt");
    cmd_view->add_option("--audience", view_audience, "end_user|developer|administrator|auditor")
        ->required();
    cmd_view->add_option("--policy", view_policy, "redaction policy JSON file");
    cmd_view->add_option("file", view_file, "receipt JSON file")->required();

    // normalize --surface S... --envelope E RAW...
    std::vector<std::string> normalize_surfaces;
    std::string normalize_envelope;
    std::vector<std::string> normalize_raws;
    auto* cmd_normalize = app.add_subcommand("normalize",
                                             "extract fragments from provider metadata and merge");
    cmd_normalize->add_option("--surface", normalize_surfaces,
                              "provider surface per raw file (one value applies to all)")
        ->required();
    cmd_normalize->add_option("--envelope", normalize_envelope, "envelope JSON file")->required();
    cmd_normalize->add_option("raw", normalize_raws, "raw provider metadata files")->required();

    // eval --policy P FILE_OR_JSONL
    std::string eval_policy, eval_file;
    auto* cmd_eval = app.add_subcommand("eval", "evaluate receipts against a constraint policy");
    cmd_eval->add_option("--policy", eval_policy, "constraint policy JSON file")->required();
    cmd_eval->add_option("file", eval_file, "receipt JSON or JSONL file")->required();

    // aggregate --metric M --from T0 --to T1 [STORE]
    std::string agg_metric, agg_from, agg_to, agg_store;
    auto* cmd_aggregate = app.add_subcommand("aggregate", "corpus statistics over a store");
    cmd_aggregate->add_option("--metric", agg_metric, "metric name")->required();
    cmd_aggregate->add_option("--from", agg_from, "window start, RFC 3339 UTC (inclusive)")
        ->required();
    cmd_aggregate->add_option("--to", agg_to, "window end, RFC 3339 UTC (exclusive)")->required();
    cmd_aggregate->add_option("store", agg_store, "store directory (default: RR_STORE_PATH)");

    // probe (alias-drift | fallback)
    auto* cmd_probe = app.add_subcommand("probe", "run a desk-scale probe against the simulator");
    cmd_probe->require_subcommand(1);
    std::string probe_scenario, probe_alias, probe_store;
    std::vector<std::string> probe_prompts;
    std::int64_t probe_n = 100;
    auto* cmd_drift = cmd_probe->add_subcommand("alias-drift", "detect alias resolution changes");
    cmd_drift->add_option("--scenario", probe_scenario, "scenario JSON file")->required();
    cmd_drift->add_option("--alias", probe_alias, "alias to probe (default: sole scenario alias)");
    cmd_drift->add_option("--prompt", probe_prompts, "fixed probe prompt (repeatable)");
    cmd_drift->add_option("-n,--requests", probe_n, "request count");
    cmd_drift->add_option("--store", probe_store, "store directory for probe receipts");
    std::string fb_scenario, fb_store;
    std::vector<std::string> fb_triggers;
    auto* cmd_fb = cmd_probe->add_subcommand("fallback", "measure fallback visibility");
    cmd_fb->add_option("--scenario", fb_scenario, "scenario JSON file")->required();
    cmd_fb->add_option("--trigger", fb_triggers,
                       "kind:index with kind rate_limit|provider_error|unavailable_model")
        ->required();
    cmd_fb->add_option("--store", fb_store, "store directory for probe receipts");

    auto* cmd_schema = app.add_subcommand("schema", "print the receipt schema");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (*cmd_validate) {
            const ValidationReport report = validate_document(detail::read_file(validate_file));
            ValidationReport full = report;
            if (report.valid()) {
                full.warnings = check_consistency(
                    receipt_from_json_unchecked(detail::parse_json_file(validate_file)));
            }
            detail::emit(out, full.to_json(), machine);
            return full.valid() ? kExitOk : kExitDirty;
        }

        if (*cmd_view) {
            const Audience audience = detail::parse_audience_or_throw(view_audience);
            const RedactionPolicy policy = view_policy.empty()
                                               ? default_redaction_policy()
                                               : parse_redaction_policy(detail::parse_json_file(view_policy));
            RouteReceipt receipt;
            try {
                receipt = parse_receipt_text(detail::read_file(view_file));
            } catch (const ValidationError& e) {
                detail::emit(out, e.report.to_json(), machine);
                return kExitDirty;
            }
            const AudienceView view = view_for(receipt, audience, policy);
            jdoc body;
            body["audience"] = to_string(audience);
            body["receipt"] = receipt_to_json(view.receipt);
            if (audience == Audience::end_user) {
                const auto labels = end_user_labels(view.receipt);
                body["labels"] = labels_to_json(labels);
                if (!machine) detail::render_labels(out, labels);
            }
            detail::emit(out, body, machine);
            return kExitOk;
        }

        if (*cmd_normalize) {
            if (normalize_surfaces.size() != 1 && normalize_surfaces.size() != normalize_raws.size()) {
                err << "--surface must be given once or once per raw file\n";
                return kExitUsage;
            }
            std::vector<ReceiptFragment> fragments;
            for (std::size_t i = 0; i < normalize_raws.size(); ++i) {
                const auto& surface_name =
                    normalize_surfaces.size() == 1 ? normalize_surfaces[0] : normalize_surfaces[i];
                auto surface = enum_from_string<ProviderSurface>(surface_name);
                if (!surface) {
                    err << "unknown surface: " << surface_name << "\n";
                    return kExitUsage;
                }
                fragments.push_back(
                    extract_fragment(*surface, detail::parse_json_file(normalize_raws[i])));
            }
            Envelope envelope = detail::parse_envelope(detail::parse_json_file(normalize_envelope));
            const MergeResult merged = merge(envelope, fragments);
            for (const auto& w : merged.warnings) {
                err << "warning " << w.path << " [" << w.code << "] " << w.detail << "\n";
            }
            detail::emit(out, receipt_to_json(merged.receipt), machine);
            return kExitOk;
        }

        if (*cmd_eval) {
            const ConstraintPolicy policy =
                parse_constraint_policy(detail::parse_json_file(eval_policy));
            const std::string text = detail::read_file(eval_file);
            std::vector<std::string> docs;
            {
                jdoc whole = jdoc::parse(text, nullptr, /*allow_exceptions=*/false);
                if (!whole.is_discarded()) {
                    docs.push_back(text);
                } else {  // JSONL
                    std::istringstream in(text);
                    std::string line;
                    while (std::getline(in, line)) {
                        if (!line.empty()) docs.push_back(line);
                    }
                }
            }
            jdoc results = jdoc::array();
            bool any_violation = false;
            for (const auto& doc_text : docs) {
                RouteReceipt r;
                try {
                    r = parse_receipt_text(doc_text);
                } catch (const ValidationError& e) {
                    detail::emit(out, e.report.to_json(), machine);
                    return kExitDirty;
                }
                const auto violations = evaluate(r, policy);
                if (!violations.empty()) any_violation = true;
                jdoc item;
                item["receipt_id"] = r.receipt_id;
                item["violations"] = violations_to_json(violations);
                results.push_back(item);
            }
            detail::emit(out, results, machine);
            return any_violation ? kExitDirty : kExitOk;
        }

        if (*cmd_aggregate) {
            auto metric = enum_from_string<AggregateMetric>(agg_metric);
            if (!metric) {
                err << "unknown metric: " << agg_metric << "\n";
                return kExitUsage;
            }
            const auto from = parse_rfc3339_utc(agg_from);
            const auto to = parse_rfc3339_utc(agg_to);
            if (!from || !to || !(*from <= *to)) {
                err << "--from/--to must be RFC 3339 UTC with from <= to\n";
                return kExitUsage;
            }
            const auto dir = detail::pick_store_dir(agg_store, /*allow_temp=*/false);
            ReceiptStore store(dir, ReceiptStore::Mode::read_only);
            detail::emit(out, store.aggregate(*metric, {*from, *to}).to_json(), machine);
            return kExitOk;
        }

        if (*cmd_drift) {
            const SimScenario scenario =
                SimScenario::parse(detail::parse_json_file(probe_scenario));
            std::string alias = probe_alias;
            if (alias.empty()) {
                if (scenario.alias_table.size() != 1) {
                    err << "--alias is required when the scenario defines "
                        << scenario.alias_table.size() << " aliases\n";
                    return kExitUsage;
                }
                alias = scenario.alias_table.begin()->first;
            }
            Gateway gateway(scenario, detail::pick_store_dir(probe_store, /*allow_temp=*/true));
            detail::emit(out, gateway.run_alias_drift_probe(alias, probe_prompts, probe_n).to_json(),
                         machine);
            return kExitOk;
        }

        if (*cmd_fb) {
            const SimScenario scenario = SimScenario::parse(detail::parse_json_file(fb_scenario));
            std::vector<FallbackTrigger> triggers;
            for (const auto& spec : fb_triggers) {
                const auto colon = spec.rfind(':');
                if (colon == std::string::npos) {
                    err << "--trigger must be kind:index, got " << spec << "\n";
                    return kExitUsage;
                }
                auto kind = enum_from_string<TriggerKind>(spec.substr(0, colon));
                if (!kind) {
                    err << "unknown trigger kind in " << spec << "\n";
                    return kExitUsage;
                }
                triggers.push_back({*kind, std::stoll(spec.substr(colon + 1))});
            }
            Gateway gateway(scenario, detail::pick_store_dir(fb_store, /*allow_temp=*/true));
            detail::emit(out, gateway.run_fallback_probe(triggers).to_json(), machine);
            return kExitOk;
        }

        if (*cmd_schema) {
            out << (machine ? receipt_schema().dump() + "\n" : export_schema_text());
            return kExitOk;
        }
    } catch (const IoFailure& e) {
        err << e.what() << "\n";
        return kExitIo;
    } catch (const CLI::ValidationError& e) {
        err << e.what() << "\n";
        return kExitUsage;
    } catch (const ValidationError& e) {
        detail::emit(out, e.report.to_json(), machine);
        return kExitDirty;
    } catch (const StoreError& e) {
        err << e.what() << "\n";
        return e.kind == StoreError::Kind::io ? kExitIo : kExitDirty;
    } catch (const Error& e) {
        err << e.what() << "\n";
        return kExitDirty;
    }
    return kExitUsage;
}

}  // namespace routereceipt::cli

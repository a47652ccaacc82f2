#pragma once

// The embedded route-receipt.v0.1 JSON Schema (draft 2020-12). Built once,
// programmatically, from the same enum tables the typed layer uses; the
// checked-in golden transcription in tests/golden is the independent copy the
// fidelity test diffs against.

#include <string>

#include "routereceipt/receipt.hpp"

namespace routereceipt {

namespace detail {

template <typename E>
jdoc enum_members() {
    jdoc arr = jdoc::array();
    for (auto name : EnumTraits<E>::names) arr.push_back(std::string(name));
    return arr;
}

template <typename E>
jdoc string_enum() {
    jdoc j;
    j["type"] = "string";
    j["enum"] = enum_members<E>();
    return j;
}

inline jdoc plain_string() {
    jdoc j;
    j["type"] = "string";
    return j;
}

inline jdoc non_negative_integer() {
    jdoc j;
    j["type"] = "integer";
    j["minimum"] = 0;
    return j;
}

inline jdoc string_array(bool unique) {
    jdoc j;
    j["type"] = "array";
    j["items"] = plain_string();
    if (unique) j["uniqueItems"] = true;
    return j;
}

inline jdoc ref_array(const char* def_name) {
    jdoc j;
    j["type"] = "array";
    j["items"] = jdoc{{"$ref", std::string("#/$defs/") + def_name}};
    return j;
}

}  // namespace detail

inline const jdoc& receipt_schema() {
    static const jdoc schema = [] {
        using namespace detail;
        jdoc s;
        s["$schema"] = kSchemaDialect;
        s["$id"] = kSchemaId;
        s["title"] = "RouteReceipt";
        s["type"] = "object";
        s["additionalProperties"] = false;
        s["required"] = jdoc::array({"schema_version", "receipt_id", "request_id", "served_at",
                                     "model_identifier_type", "fallback", "safety", "region_class",
                                     "completion_status", "redactions"});

        jdoc props;
        {
            jdoc v;
            v["type"] = "string";
            v["const"] = kSchemaVersion;
            props["schema_version"] = v;
        }
        {
            jdoc v;
            v["type"] = "string";
            v["minLength"] = 1;
            props["receipt_id"] = v;
            props["request_id"] = v;
        }
        {
            jdoc v;
            v["type"] = "string";
            v["format"] = "date-time";
            props["served_at"] = v;
        }
        props["requested_model"] = plain_string();
        props["resolved_model"] = plain_string();
        props["model_identifier_type"] = string_enum<ModelIdentifierType>();
        {
            jdoc v;
            v["type"] = "object";
            v["additionalProperties"] = false;
            v["required"] = jdoc::array({"effective"});
            jdoc p;
            p["requested"] = plain_string();
            p["effective"] = plain_string();
            p["change_reason"] = string_enum<TierChangeReason>();
            v["properties"] = p;
            props["service_tier"] = v;
        }
        {
            jdoc v;
            v["type"] = "object";
            v["additionalProperties"] = false;
            v["required"] = jdoc::array({"effective_status"});
            jdoc p;
            p["requested"] = string_enum<EffortLevel>();
            p["effective_status"] = string_enum<EffortStatus>();
            v["properties"] = p;
            props["effort"] = v;
        }
        {
            jdoc v;
            v["type"] = "object";
            v["additionalProperties"] = false;
            v["required"] = jdoc::array({"used"});
            jdoc p;
            p["allowed"] = string_array(/*unique=*/true);
            p["used"] = ref_array("tool_use");
            jdoc rs;
            rs["type"] = "object";
            rs["additionalProperties"] = false;
            jdoc rsp;
            rsp["source_classes"] = string_array(/*unique=*/true);
            rsp["retrieved_item_count"] = non_negative_integer();
            rsp["redacted"] = jdoc{{"type", "boolean"}};
            rs["properties"] = rsp;
            p["retrieval_summary"] = rs;
            v["properties"] = p;
            props["tools"] = v;
        }
        {
            jdoc v;
            v["type"] = "object";
            v["additionalProperties"] = false;
            v["required"] = jdoc::array({"input_truncated"});
            jdoc p;
            p["input_truncated"] = string_enum<TruncationState>();
            p["retrieved_item_count"] = non_negative_integer();
            p["context_window_class"] = string_enum<ContextWindowClass>();
            v["properties"] = p;
            props["context"] = v;
        }
        {
            jdoc v;
            v["type"] = "object";
            v["additionalProperties"] = false;
            v["required"] = jdoc::array({"status"});
            jdoc p;
            p["status"] = string_enum<FallbackStatus>();
            p["from"] = plain_string();
            p["to"] = plain_string();
            p["reason"] = string_enum<FallbackReason>();
            v["properties"] = p;
            props["fallback"] = v;
        }
        {
            jdoc v;
            v["type"] = "object";
            v["additionalProperties"] = false;
            v["required"] = jdoc::array({"status"});
            jdoc p;
            p["status"] = string_enum<SafetyStatus>();
            p["category"] = plain_string();
            p["visible_action"] = string_enum<SafetyAction>();
            v["properties"] = p;
            props["safety"] = v;
        }
        props["region_class"] = string_enum<RegionClass>();
        props["provider_chain"] = ref_array("provider_hop");
        props["completion_status"] = string_enum<CompletionStatus>();
        props["redactions"] = ref_array("redaction");
        props["retention_class"] = string_enum<RetentionClass>();
        props["provider_extensions"] = jdoc{{"type", "object"}};
        s["properties"] = props;

        jdoc defs;
        {
            jdoc d;
            d["type"] = "object";
            d["additionalProperties"] = false;
            d["required"] = jdoc::array({"name", "invocation_count"});
            jdoc p;
            p["name"] = plain_string();
            p["invocation_count"] = non_negative_integer();
            p["result_refs"] = string_array(/*unique=*/false);
            p["redacted"] = jdoc{{"type", "boolean"}};
            d["properties"] = p;
            defs["tool_use"] = d;
        }
        {
            jdoc d;
            d["type"] = "object";
            d["additionalProperties"] = false;
            d["required"] = jdoc::array({"role"});
            jdoc p;
            p["role"] = string_enum<HopRole>();
            p["provider"] = plain_string();
            p["model"] = plain_string();
            p["redacted"] = jdoc{{"type", "boolean"}};
            d["properties"] = p;
            defs["provider_hop"] = d;
        }
        {
            jdoc d;
            d["type"] = "object";
            d["additionalProperties"] = false;
            d["required"] = jdoc::array({"field", "reason"});
            jdoc p;
            p["field"] = plain_string();
            p["reason"] = string_enum<RedactionReason>();
            jdoc vt;
            vt["type"] = "array";
            vt["items"] = string_enum<Audience>();
            vt["uniqueItems"] = true;
            p["visible_to"] = vt;
            d["properties"] = p;
            defs["redaction"] = d;
        }
        s["$defs"] = defs;
        return s;
    }();
    return schema;
}

// Stable textual export: 2-space indented, trailing newline. Byte-identical
// across calls and runs.
inline std::string export_schema_text() { return receipt_schema().dump(2) + "\n"; }

}  // namespace routereceipt

#pragma once

// Typed model of a route receipt: the per-answer record of the service path
// (model resolution, tier, tools, fallback, safety, region, completion) that
// produced one response. Field names and enums mirror the v0.1 wire format
// one-to-one. All types are immutable values; absent means absent, never
// defaulted.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "routereceipt/enums.hpp"

namespace routereceipt {

// Document type used across the library. Ordered so canonical key order is
// under our control, not the map's.
using jdoc = nlohmann::ordered_json;

inline constexpr std::string_view kSchemaVersion = "route-receipt.v0.1";
inline constexpr std::string_view kSchemaId =
    "https://routereceipt.org/schemas/route-receipt/v0.1/schema.json";
inline constexpr std::string_view kSchemaDialect =
    "https://json-schema.org/draft/2020-12/schema";

struct ServiceTierRecord {
    std::optional<std::string> requested;
    std::string effective;
    std::optional<TierChangeReason> change_reason;

    friend bool operator==(const ServiceTierRecord&, const ServiceTierRecord&) = default;
};

struct EffortRecord {
    std::optional<EffortLevel> requested;
    EffortStatus effective_status = EffortStatus::unknown;

    friend bool operator==(const EffortRecord&, const EffortRecord&) = default;
};

struct ToolUse {
    std::string name;
    std::int64_t invocation_count = 0;
    std::optional<std::vector<std::string>> result_refs;
    std::optional<bool> redacted;

    friend bool operator==(const ToolUse&, const ToolUse&) = default;
};

struct RetrievalSummary {
    std::optional<std::vector<std::string>> source_classes;
    std::optional<std::int64_t> retrieved_item_count;
    std::optional<bool> redacted;

    friend bool operator==(const RetrievalSummary&, const RetrievalSummary&) = default;
};

struct ToolsRecord {
    std::optional<std::vector<std::string>> allowed;
    std::vector<ToolUse> used;  // required; empty means "no tool ran", which is information
    std::optional<RetrievalSummary> retrieval_summary;

    friend bool operator==(const ToolsRecord&, const ToolsRecord&) = default;
};

struct ContextRecord {
    TruncationState input_truncated = TruncationState::unknown;
    std::optional<std::int64_t> retrieved_item_count;
    std::optional<ContextWindowClass> context_window_class;

    friend bool operator==(const ContextRecord&, const ContextRecord&) = default;
};

struct FallbackRecord {
    FallbackStatus status = FallbackStatus::unknown;
    std::optional<std::string> from;
    std::optional<std::string> to;
    std::optional<FallbackReason> reason;

    friend bool operator==(const FallbackRecord&, const FallbackRecord&) = default;
};

struct SafetyRecord {
    SafetyStatus status = SafetyStatus::unknown;
    std::optional<std::string> category;
    std::optional<SafetyAction> visible_action;

    friend bool operator==(const SafetyRecord&, const SafetyRecord&) = default;
};

struct ProviderHop {
    HopRole role = HopRole::unknown;
    std::optional<std::string> provider;
    std::optional<std::string> model;
    std::optional<bool> redacted;

    friend bool operator==(const ProviderHop&, const ProviderHop&) = default;
};

// Explicit bookkeeping that a field was hidden or generalized. `field` is a
// JSON pointer into the receipt ("/safety/category"); code minting entries
// never produces an empty path.
struct RedactionEntry {
    std::string field;
    RedactionReason reason = RedactionReason::not_applicable;
    std::optional<std::vector<Audience>> visible_to;

    friend bool operator==(const RedactionEntry&, const RedactionEntry&) = default;
};

struct RouteReceipt {
    std::string schema_version{kSchemaVersion};
    std::string receipt_id;
    std::string request_id;
    std::string served_at;  // RFC 3339 UTC, preserved verbatim
    std::optional<std::string> requested_model;
    std::optional<std::string> resolved_model;
    ModelIdentifierType model_identifier_type = ModelIdentifierType::unknown;
    std::optional<ServiceTierRecord> service_tier;
    std::optional<EffortRecord> effort;
    std::optional<ToolsRecord> tools;
    std::optional<ContextRecord> context;
    FallbackRecord fallback;
    SafetyRecord safety;
    RegionClass region_class = RegionClass::unknown;
    std::optional<std::vector<ProviderHop>> provider_chain;
    CompletionStatus completion_status = CompletionStatus::unknown;
    std::vector<RedactionEntry> redactions;
    std::optional<RetentionClass> retention_class;
    // Open provider-specific payload, kept verbatim (keys canonicalized
    // lexicographically on parse).
    std::optional<jdoc> provider_extensions;

    friend bool operator==(const RouteReceipt&, const RouteReceipt&) = default;
};

}  // namespace routereceipt

#pragma once

// Closed vocabularies of the route-receipt.v0.1 wire format. Names here are
// the exact wire strings; every set is closed (validation rejects anything
// else).

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace routereceipt {

enum class ModelIdentifierType { fixed, moving_alias, router, unknown };

enum class TierChangeReason { none, capacity, rate_limit, policy, provider_failure, unknown, redacted };

enum class EffortLevel { minimal, low, medium, high, xhigh, provider_default, unknown };

enum class EffortStatus { completed, budget_exhausted, downgraded, not_applicable, unknown, redacted };

// Wire values "false" / "true" / "unknown" / "redacted".
enum class TruncationState { not_truncated, truncated, unknown, redacted };

enum class ContextWindowClass { within_limit, near_limit, exceeded, unknown, redacted };

enum class FallbackStatus { none, occurred, unknown, redacted };

enum class FallbackReason { none, rate_limit, provider_error, moderation_refusal, capacity, policy, unknown, redacted };

enum class SafetyStatus { none, intervened, unknown, redacted };

enum class SafetyAction { none, blocked, masked, rewritten, refused, unknown, redacted };

enum class RegionClass { user_selected_region, data_zone, global, provider_default, unknown, redacted };

enum class HopRole { requested, served, fallback, tool, unknown };

enum class CompletionStatus { complete, length_limit, tool_error, safety_block, error, unknown };

enum class RetentionClass { ephemeral, standard, regulated, audit_hold, unknown };

enum class RedactionReason { privacy, security, safety, trade_secret, contractual, not_collected, not_applicable };

// Ordered by widening access: end_user < developer < administrator < auditor.
enum class Audience { end_user, developer, administrator, auditor };

template <typename E>
struct EnumTraits;

template <>
struct EnumTraits<ModelIdentifierType> {
    static constexpr std::array<std::string_view, 4> names{"fixed", "moving_alias", "router", "unknown"};
};
template <>
struct EnumTraits<TierChangeReason> {
    static constexpr std::array<std::string_view, 7> names{"none",    "capacity", "rate_limit", "policy",
                                                           "provider_failure", "unknown", "redacted"};
};
template <>
struct EnumTraits<EffortLevel> {
    static constexpr std::array<std::string_view, 7> names{"minimal", "low", "medium", "high",
                                                           "xhigh", "provider_default", "unknown"};
};
template <>
struct EnumTraits<EffortStatus> {
    static constexpr std::array<std::string_view, 6> names{"completed", "budget_exhausted", "downgraded",
                                                           "not_applicable", "unknown", "redacted"};
};
template <>
struct EnumTraits<TruncationState> {
    static constexpr std::array<std::string_view, 4> names{"false", "true", "unknown", "redacted"};
};
template <>
struct EnumTraits<ContextWindowClass> {
    static constexpr std::array<std::string_view, 5> names{"within_limit", "near_limit", "exceeded",
                                                           "unknown", "redacted"};
};
template <>
struct EnumTraits<FallbackStatus> {
    static constexpr std::array<std::string_view, 4> names{"none", "occurred", "unknown", "redacted"};
};
template <>
struct EnumTraits<FallbackReason> {
    static constexpr std::array<std::string_view, 8> names{"none",     "rate_limit", "provider_error",
                                                           "moderation_refusal", "capacity", "policy",
                                                           "unknown",  "redacted"};
};
template <>
struct EnumTraits<SafetyStatus> {
    static constexpr std::array<std::string_view, 4> names{"none", "intervened", "unknown", "redacted"};
};
template <>
struct EnumTraits<SafetyAction> {
    static constexpr std::array<std::string_view, 7> names{"none",    "blocked", "masked", "rewritten",
                                                           "refused", "unknown", "redacted"};
};
template <>
struct EnumTraits<RegionClass> {
    static constexpr std::array<std::string_view, 6> names{"user_selected_region", "data_zone", "global",
                                                           "provider_default", "unknown", "redacted"};
};
template <>
struct EnumTraits<HopRole> {
    static constexpr std::array<std::string_view, 5> names{"requested", "served", "fallback", "tool", "unknown"};
};
template <>
struct EnumTraits<CompletionStatus> {
    static constexpr std::array<std::string_view, 6> names{"complete", "length_limit", "tool_error",
                                                           "safety_block", "error", "unknown"};
};
template <>
struct EnumTraits<RetentionClass> {
    static constexpr std::array<std::string_view, 5> names{"ephemeral", "standard", "regulated",
                                                           "audit_hold", "unknown"};
};
template <>
struct EnumTraits<RedactionReason> {
    static constexpr std::array<std::string_view, 7> names{"privacy", "security", "safety", "trade_secret",
                                                           "contractual", "not_collected", "not_applicable"};
};
template <>
struct EnumTraits<Audience> {
    static constexpr std::array<std::string_view, 4> names{"end_user", "developer", "administrator", "auditor"};
};

template <typename E>
constexpr std::string_view to_string(E v) {
    return EnumTraits<E>::names[static_cast<std::size_t>(v)];
}

template <typename E>
constexpr std::optional<E> enum_from_string(std::string_view s) {
    const auto& names = EnumTraits<E>::names;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == s) return static_cast<E>(i);
    }
    return std::nullopt;
}

constexpr int audience_rank(Audience a) { return static_cast<int>(a); }

constexpr bool audience_at_least(Audience a, Audience floor) {
    return audience_rank(a) >= audience_rank(floor);
}

}  // namespace routereceipt

#pragma once

// RFC 3339 UTC timestamps. Receipts carry served_at as
// "YYYY-MM-DDTHH:MM:SS[.frac]Z"; one normal form keeps audit comparisons
// sane, so lowercase 't'/'z' and numeric offsets are rejected.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace routereceipt {

struct Timestamp {
    std::int64_t seconds = 0;  // since Unix epoch, UTC
    std::uint32_t nanos = 0;

    friend constexpr auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

namespace detail {
constexpr bool ascii_digit(char c) { return c >= '0' && c <= '9'; }
}  // namespace detail

// Strict parse; nullopt on anything that is not the documented form.
// Fractional seconds: 1..9 digits. Leap seconds are rejected.
inline std::optional<Timestamp> parse_rfc3339_utc(std::string_view s) {
    if (s.size() < 20) return std::nullopt;
    auto num = [&](std::size_t pos, std::size_t len) -> int {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (!detail::ascii_digit(s[i])) return -1;
            v = v * 10 + (s[i] - '0');
        }
        return v;
    };
    if (s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' || s[16] != ':') {
        return std::nullopt;
    }
    const int year = num(0, 4);
    const int month = num(5, 2);
    const int day = num(8, 2);
    const int hour = num(11, 2);
    const int minute = num(14, 2);
    const int sec = num(17, 2);
    if (year < 0 || month < 1 || month > 12 || day < 1 || hour < 0 || hour > 23 ||
        minute < 0 || minute > 59 || sec < 0 || sec > 59) {
        return std::nullopt;
    }
    const std::chrono::year_month_day ymd{std::chrono::year{year},
                                          std::chrono::month{static_cast<unsigned>(month)},
                                          std::chrono::day{static_cast<unsigned>(day)}};
    if (!ymd.ok()) return std::nullopt;

    std::size_t pos = 19;
    std::uint32_t nanos = 0;
    if (s[pos] == '.') {
        ++pos;
        const std::size_t start = pos;
        std::uint64_t frac = 0;
        while (pos < s.size() && detail::ascii_digit(s[pos]) && pos - start < 9) {
            frac = frac * 10 + static_cast<std::uint64_t>(s[pos] - '0');
            ++pos;
        }
        const std::size_t ndigits = pos - start;
        if (ndigits == 0) return std::nullopt;
        if (pos < s.size() && detail::ascii_digit(s[pos])) return std::nullopt;  // > 9 digits
        for (std::size_t i = ndigits; i < 9; ++i) frac *= 10;
        nanos = static_cast<std::uint32_t>(frac);
    }
    if (pos + 1 != s.size() || s[pos] != 'Z') return std::nullopt;

    const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
    return Timestamp{static_cast<std::int64_t>(days) * 86400 + hour * 3600 + minute * 60 + sec,
                     nanos};
}

inline std::string format_rfc3339_utc(const Timestamp& t) {
    std::int64_t d = t.seconds / 86400;
    std::int64_t rem = t.seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        --d;
    }
    const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{d}}};
    char buf[64];
    const int h = static_cast<int>(rem / 3600);
    const int m = static_cast<int>((rem % 3600) / 60);
    const int s = static_cast<int>(rem % 60);
    if (t.nanos == 0) {
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ",
                      static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                      static_cast<unsigned>(ymd.day()), h, m, s);
    } else {
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%09uZ",
                      static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                      static_cast<unsigned>(ymd.day()), h, m, s, t.nanos);
    }
    return buf;
}

// Injectable wall clock; tests freeze it for reproducible served_at values.
using Clock = std::function<std::string()>;

inline std::string system_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch());
    return format_rfc3339_utc(Timestamp{secs.count(), 0});
}

inline Clock system_clock_utc() {
    return [] { return system_utc_now(); };
}

inline Clock fixed_clock(std::string stamp) {
    return [stamp = std::move(stamp)] { return stamp; };
}

}  // namespace routereceipt

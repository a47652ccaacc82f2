#pragma once

// Receipt identifiers: "rr-" + 128 random bits as lowercase hex. Opaque and
// collision-resistant; the schema only demands a non-empty string.

#include <cstdint>
#include <mutex>
#include <random>
#include <string>

namespace routereceipt {

inline std::string mint_receipt_id() {
    static std::mutex mu;
    static std::mt19937_64 rng = [] {
        std::random_device rd;
        std::seed_seq seq{rd(), rd(), rd(), rd()};
        return std::mt19937_64(seq);
    }();
    std::uint64_t hi, lo;
    {
        std::lock_guard<std::mutex> lock(mu);
        hi = rng();
        lo = rng();
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string id = "rr-";
    id.reserve(3 + 32);
    for (int i = 15; i >= 0; --i) id += hex[(hi >> (i * 4)) & 0xF];
    for (int i = 15; i >= 0; --i) id += hex[(lo >> (i * 4)) & 0xF];
    return id;
}

}  // namespace routereceipt

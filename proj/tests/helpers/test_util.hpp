#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "routereceipt/canonical.hpp"

namespace rrtest {

inline std::filesystem::path golden_dir() { return RR_GOLDEN_DIR; }
inline std::filesystem::path fixture_dir() { return RR_FIXTURE_DIR; }

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline routereceipt::jdoc load_json(const std::filesystem::path& path) {
    return routereceipt::jdoc::parse(read_file(path));
}

inline std::string golden_receipt_text() {
    std::string text = read_file(golden_dir() / "golden_s7.json");
    if (!text.empty() && text.back() == '\n') text.pop_back();
    return text;
}

inline routereceipt::RouteReceipt golden_receipt() {
    return routereceipt::parse_receipt_text(golden_receipt_text());
}

// Unique scratch directory under the system temp dir.
inline std::filesystem::path fresh_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    auto dir = std::filesystem::temp_directory_path() /
               ("rr-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter.fetch_add(1)));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace rrtest

#pragma once

// Append-only receipt persistence. Layout under the store directory:
//
//   segments/NNNN.jsonl   canonical receipts, one per line, append-only
//   index.jsonl           receipt_id -> segment/line, one line per append
//   tombstones.jsonl      {receipt_id, served_at, retention_class, purged_at}
//
// Once appended, a receipt's canonical bytes never change; the only
// transition is purge-to-tombstone under retention rules, which rewrites the
// affected segment (purged bytes must actually leave the disk) and records
// the tombstone. audit_hold receipts are never purged.
//
// Concurrency: single writer, many readers. Writers serialize through an
// exclusive lock; readers see a consistent prefix. Cross-process writers are
// excluded via a lock file.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include "routereceipt/redact.hpp"

namespace routereceipt {

struct StoreError : Error {
    enum class Kind { duplicate_id, not_found, purged, invalid_receipt, io, locked, read_only };
    Kind kind;

    StoreError(Kind k, const std::string& msg) : Error(msg), kind(k) {}
};

struct ReceiptFilter {
    std::optional<Timestamp> from;  // inclusive
    std::optional<Timestamp> to;    // exclusive
    std::optional<std::string> requested_model;
    std::optional<FallbackStatus> fallback_status;
    std::optional<RegionClass> region_class;
    std::optional<CompletionStatus> completion_status;
    std::optional<RetentionClass> retention_class;
};

enum class AggregateMetric {
    fallback_rate,
    tier_change_rate,
    alias_resolution_histogram,
    safety_intervention_rate,
    incomplete_rate
};

template <>
struct EnumTraits<AggregateMetric> {
    static constexpr std::array<std::string_view, 5> names{
        "fallback_rate", "tier_change_rate", "alias_resolution_histogram",
        "safety_intervention_rate", "incomplete_rate"};
};

struct TimeWindow {
    Timestamp from;  // inclusive
    Timestamp to;    // exclusive
};

struct AggregateReport {
    AggregateMetric metric = AggregateMetric::fallback_rate;
    std::string from;
    std::string to;
    double value = 0.0;                            // rates
    std::map<std::string, std::int64_t> histogram; // alias_resolution_histogram
    std::int64_t denominator = 0;

    jdoc to_json() const {
        jdoc j;
        j["metric"] = to_string(metric);
        j["window"] = jdoc{{"from", from}, {"to", to}};
        if (metric == AggregateMetric::alias_resolution_histogram) {
            jdoc h = jdoc::object();
            for (const auto& [k, v] : histogram) h[k] = v;
            j["value"] = h;
        } else {
            j["value"] = value;
        }
        j["denominator"] = denominator;
        return j;
    }
};

// Time-to-live per retention class, seconds; nullopt means never expires.
// audit_hold never expires by construction and is not configurable.
struct RetentionRules {
    std::optional<std::int64_t> ephemeral = 24 * 3600;
    std::optional<std::int64_t> standard = 90 * 86400;
    std::optional<std::int64_t> regulated = 365 * 86400;

    std::optional<std::int64_t> ttl_for(RetentionClass c) const {
        switch (c) {
            case RetentionClass::ephemeral: return ephemeral;
            case RetentionClass::standard: return standard;
            case RetentionClass::regulated: return regulated;
            case RetentionClass::audit_hold: return std::nullopt;
            case RetentionClass::unknown: return standard;
        }
        return standard;
    }

    void validate() const {
        if (ephemeral && standard && *ephemeral > *standard) {
            throw Error("retention rules invalid: ephemeral TTL exceeds standard TTL");
        }
    }
};

// Duration strings: "<n>s", "<n>m", "<n>h", "<n>d", or "never".
inline std::optional<std::int64_t> parse_duration_seconds(const std::string& text) {
    if (text == "never") return std::nullopt;
    if (text.empty()) throw Error("empty duration");
    std::size_t pos = 0;
    const long long n = std::stoll(text, &pos);
    if (pos + 1 != text.size() || n < 0) throw Error("bad duration: " + text);
    switch (text.back()) {
        case 's': return n;
        case 'm': return n * 60;
        case 'h': return n * 3600;
        case 'd': return n * 86400;
        default: throw Error("bad duration suffix: " + text);
    }
}

// Environment overrides: RR_RETENTION_EPHEMERAL / _STANDARD / _REGULATED.
inline RetentionRules retention_rules_from_env(RetentionRules base = {}) {
    auto apply = [](const char* var, std::optional<std::int64_t>& slot) {
        if (const char* v = std::getenv(var)) slot = parse_duration_seconds(v);
    };
    apply("RR_RETENTION_EPHEMERAL", base.ephemeral);
    apply("RR_RETENTION_STANDARD", base.standard);
    apply("RR_RETENTION_REGULATED", base.regulated);
    base.validate();
    return base;
}

struct Tombstone {
    std::string receipt_id;
    std::string served_at;
    std::optional<RetentionClass> retention_class;
    std::string purged_at;

    jdoc to_json() const {
        jdoc j;
        j["receipt_id"] = receipt_id;
        j["served_at"] = served_at;
        if (retention_class) j["retention_class"] = to_string(*retention_class);
        j["purged_at"] = purged_at;
        return j;
    }
};

struct PurgeReport {
    std::vector<std::string> purged_ids;
    std::int64_t examined = 0;
};

class ReceiptStore {
public:
    enum class Mode { read_only, read_write };

    static constexpr std::size_t kSegmentCapacity = 1024;

    explicit ReceiptStore(std::filesystem::path dir, Mode mode = Mode::read_write)
        : dir_(std::move(dir)), mode_(mode) {
        namespace fs = std::filesystem;
        if (mode_ == Mode::read_write) {
            fs::create_directories(dir_ / "segments");
            acquire_lock();
        } else if (!fs::exists(dir_)) {
            throw StoreError(StoreError::Kind::io, "store directory does not exist: " + dir_.string());
        }
        load();
    }

    ~ReceiptStore() {
        if (lock_fd_ >= 0) ::close(lock_fd_);
    }

    ReceiptStore(const ReceiptStore&) = delete;
    ReceiptStore& operator=(const ReceiptStore&) = delete;

    std::size_t append(const RouteReceipt& r) {
        ValidationReport report = validate_json(receipt_to_json(r));
        if (!report.valid()) throw ValidationError(std::move(report));
        return append_canonical(r.receipt_id, r.served_at, canonical_serialize(r), r);
    }

    std::size_t append_document(const jdoc& doc) {
        RouteReceipt r = parse_receipt(doc);  // throws ValidationError when invalid
        return append_canonical(r.receipt_id, r.served_at, canonical_serialize(r), r);
    }

    struct GetResult {
        enum class Status { found, not_found, purged };
        Status status = Status::not_found;
        std::optional<AudienceView> view;
        std::optional<Tombstone> tombstone;
    };

    GetResult get(const std::string& receipt_id, Audience audience,
                  const RedactionPolicy& policy) const {
        std::shared_lock lock(mu_);
        if (auto t = tombstones_.find(receipt_id); t != tombstones_.end()) {
            return {GetResult::Status::purged, std::nullopt, t->second};
        }
        auto it = by_id_.find(receipt_id);
        if (it == by_id_.end()) return {GetResult::Status::not_found, std::nullopt, std::nullopt};
        return {GetResult::Status::found, view_for(entries_[it->second].receipt, audience, policy),
                std::nullopt};
    }

    std::optional<std::string> canonical_text(const std::string& receipt_id) const {
        std::shared_lock lock(mu_);
        auto it = by_id_.find(receipt_id);
        if (it == by_id_.end()) return std::nullopt;
        return entries_[it->second].line;
    }

    // Ids of every live receipt matching all set filter fields, ordered by
    // served_at then receipt_id.
    std::vector<std::string> query(const ReceiptFilter& f) const {
        std::shared_lock lock(mu_);
        if (f.from && f.to && !(*f.from <= *f.to)) throw Error("filter time range start > end");
        std::vector<const Entry*> hits;
        for (const auto& e : entries_) {
            if (matches(e, f)) hits.push_back(&e);
        }
        sort_entries(hits);
        std::vector<std::string> ids;
        ids.reserve(hits.size());
        for (const auto* e : hits) ids.push_back(e->receipt.receipt_id);
        return ids;
    }

    AggregateReport aggregate(AggregateMetric metric, const TimeWindow& window) const {
        std::shared_lock lock(mu_);
        if (!(window.from <= window.to)) throw Error("aggregate window start > end");
        AggregateReport report;
        report.metric = metric;
        report.from = format_rfc3339_utc(window.from);
        report.to = format_rfc3339_utc(window.to);

        std::int64_t total = 0;
        std::int64_t numerator = 0;
        std::int64_t tier_both = 0;
        std::int64_t tier_changed = 0;
        for (const auto& e : entries_) {
            if (!(window.from <= e.served_key && e.served_key < window.to)) continue;
            ++total;
            const auto& r = e.receipt;
            switch (metric) {
                case AggregateMetric::fallback_rate:
                    if (r.fallback.status == FallbackStatus::occurred) ++numerator;
                    break;
                case AggregateMetric::tier_change_rate:
                    if (r.service_tier && r.service_tier->requested) {
                        ++tier_both;
                        if (*r.service_tier->requested != r.service_tier->effective) ++tier_changed;
                    }
                    break;
                case AggregateMetric::alias_resolution_histogram:
                    if (r.resolved_model) ++report.histogram[*r.resolved_model];
                    break;
                case AggregateMetric::safety_intervention_rate:
                    if (r.safety.status == SafetyStatus::intervened) ++numerator;
                    break;
                case AggregateMetric::incomplete_rate:
                    if (r.completion_status != CompletionStatus::complete) ++numerator;
                    break;
            }
        }
        switch (metric) {
            case AggregateMetric::tier_change_rate:
                report.denominator = tier_both;
                report.value = tier_both == 0 ? 0.0
                                              : static_cast<double>(tier_changed) /
                                                    static_cast<double>(tier_both);
                break;
            case AggregateMetric::alias_resolution_histogram: {
                std::int64_t with_model = 0;
                for (const auto& [k, v] : report.histogram) with_model += v;
                report.denominator = with_model;
                break;
            }
            default:
                report.denominator = total;
                report.value = total == 0 ? 0.0
                                          : static_cast<double>(numerator) /
                                                static_cast<double>(total);
                break;
        }
        return report;
    }

    // Replaces expired receipts with tombstones. audit_hold never expires;
    // an absent retention_class is treated as standard. Idempotent at a
    // fixed `now`.
    PurgeReport enforce_retention(const RetentionRules& rules, const Timestamp& now) {
        require_writable();
        rules.validate();
        std::unique_lock lock(mu_);
        PurgeReport report;
        report.examined = static_cast<std::int64_t>(entries_.size());
        std::vector<std::size_t> doomed;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const auto& r = entries_[i].receipt;
            const RetentionClass cls = r.retention_class.value_or(RetentionClass::standard);
            if (cls == RetentionClass::audit_hold) continue;
            const auto ttl = rules.ttl_for(cls);
            if (!ttl) continue;
            Timestamp expiry = entries_[i].served_key;
            expiry.seconds += *ttl;
            if (!(now < expiry)) doomed.push_back(i);
        }
        if (doomed.empty()) return report;

        const std::string purged_at = format_rfc3339_utc(now);
        std::set<std::size_t> affected_segments;
        std::set<std::size_t> doomed_set(doomed.begin(), doomed.end());
        for (std::size_t i : doomed) {
            const auto& e = entries_[i];
            Tombstone t{e.receipt.receipt_id, e.receipt.served_at, e.receipt.retention_class,
                        purged_at};
            append_line(dir_ / "tombstones.jsonl", t.to_json().dump());
            tombstones_.emplace(e.receipt.receipt_id, std::move(t));
            report.purged_ids.push_back(e.receipt.receipt_id);
            affected_segments.insert(e.segment);
        }
        for (std::size_t seg : affected_segments) rewrite_segment(seg, doomed_set);

        std::vector<Entry> kept;
        kept.reserve(entries_.size() - doomed.size());
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (!doomed_set.count(i)) kept.push_back(std::move(entries_[i]));
        }
        entries_ = std::move(kept);
        reindex();
        return report;
    }

    // One canonical audience view per line, in query order. Auditor exports
    // under an empty policy re-import losslessly.
    std::string export_jsonl(const ReceiptFilter& f, Audience audience,
                             const RedactionPolicy& policy) const {
        const auto ids = query(f);
        std::shared_lock lock(mu_);
        std::string out;
        for (const auto& id : ids) {
            const auto& entry = entries_[by_id_.at(id)];
            const AudienceView view = view_for(entry.receipt, audience, policy);
            out += canonical_serialize(view.receipt);
            out += '\n';
        }
        return out;
    }

    std::size_t import_jsonl(const std::string& text) {
        std::istringstream in(text);
        std::string line;
        std::size_t count = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            RouteReceipt r = parse_receipt_text(line);
            append_canonical(r.receipt_id, r.served_at, canonical_serialize(r), r);
            ++count;
        }
        return count;
    }

    std::size_t size() const {
        std::shared_lock lock(mu_);
        return entries_.size();
    }

    // Most recent earlier resolution of the same requested model, for the
    // "model updated since previous answer" label.
    std::optional<std::string> prior_resolved_model(const std::string& requested_model,
                                                    const Timestamp& before,
                                                    const std::string& exclude_receipt_id) const {
        std::shared_lock lock(mu_);
        const Entry* best = nullptr;
        for (const auto& e : entries_) {
            if (!e.receipt.requested_model || *e.receipt.requested_model != requested_model) continue;
            if (!e.receipt.resolved_model) continue;
            if (e.receipt.receipt_id == exclude_receipt_id) continue;
            if (!(e.served_key < before)) continue;
            if (!best || best->served_key < e.served_key ||
                (best->served_key == e.served_key && best->receipt.receipt_id < e.receipt.receipt_id)) {
                best = &e;
            }
        }
        if (!best) return std::nullopt;
        return best->receipt.resolved_model;
    }

    const std::filesystem::path& directory() const { return dir_; }

private:
    struct Entry {
        RouteReceipt receipt;
        Timestamp served_key;
        std::string line;     // canonical bytes as stored
        std::size_t segment = 0;
    };

    std::filesystem::path dir_;
    Mode mode_;
    int lock_fd_ = -1;
    mutable std::shared_mutex mu_;
    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> by_id_;
    std::map<std::string, Tombstone> tombstones_;
    std::size_t current_segment_ = 0;
    std::size_t current_segment_count_ = 0;

    void require_writable() const {
        if (mode_ != Mode::read_write) {
            throw StoreError(StoreError::Kind::read_only, "store opened read-only");
        }
    }

    void acquire_lock() {
        const auto lock_path = dir_ / ".lock";
        lock_fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
        if (lock_fd_ < 0) {
            throw StoreError(StoreError::Kind::io, "cannot open lock file: " + lock_path.string());
        }
        if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
            ::close(lock_fd_);
            lock_fd_ = -1;
            throw StoreError(StoreError::Kind::locked,
                             "store is locked by another writer: " + dir_.string());
        }
    }

    static std::string segment_name(std::size_t n) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04zu.jsonl", n);
        return buf;
    }

    void load() {
        namespace fs = std::filesystem;
        const auto tomb_path = dir_ / "tombstones.jsonl";
        if (fs::exists(tomb_path)) {
            std::ifstream in(tomb_path);
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                const jdoc j = jdoc::parse(line);
                Tombstone t;
                t.receipt_id = j.at("receipt_id").get<std::string>();
                t.served_at = j.at("served_at").get<std::string>();
                if (auto it = j.find("retention_class"); it != j.end()) {
                    t.retention_class =
                        enum_from_string<RetentionClass>(it->get_ref<const std::string&>());
                }
                t.purged_at = j.at("purged_at").get<std::string>();
                tombstones_.emplace(t.receipt_id, std::move(t));
            }
        }
        const auto seg_dir = dir_ / "segments";
        if (fs::exists(seg_dir)) {
            std::vector<fs::path> segs;
            for (const auto& p : fs::directory_iterator(seg_dir)) {
                if (p.path().extension() == ".jsonl") segs.push_back(p.path());
            }
            std::sort(segs.begin(), segs.end());
            for (const auto& seg : segs) {
                const std::size_t seg_no =
                    static_cast<std::size_t>(std::stoul(seg.stem().string()));
                std::ifstream in(seg);
                std::string line;
                std::size_t count = 0;
                while (std::getline(in, line)) {
                    if (line.empty()) continue;
                    RouteReceipt r = parse_receipt_text(line);
                    Entry e{std::move(r), {}, line, seg_no};
                    e.served_key = *parse_rfc3339_utc(e.receipt.served_at);
                    by_id_[e.receipt.receipt_id] = entries_.size();
                    entries_.push_back(std::move(e));
                    ++count;
                }
                current_segment_ = seg_no;
                current_segment_count_ = count;
            }
            if (current_segment_count_ >= kSegmentCapacity) {
                ++current_segment_;
                current_segment_count_ = 0;
            }
        }
    }

    void reindex() {
        by_id_.clear();
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            by_id_[entries_[i].receipt.receipt_id] = i;
        }
    }

    static void append_line(const std::filesystem::path& path, const std::string& line) {
        std::ofstream out(path, std::ios::app);
        if (!out) throw StoreError(StoreError::Kind::io, "cannot open " + path.string());
        out << line << '\n';
        out.flush();
        if (!out) throw StoreError(StoreError::Kind::io, "write failed: " + path.string());
    }

    std::size_t append_canonical(const std::string& id, const std::string& served_at,
                                 std::string line, RouteReceipt receipt) {
        require_writable();
        std::unique_lock lock(mu_);
        if (by_id_.count(id) || tombstones_.count(id)) {
            throw StoreError(StoreError::Kind::duplicate_id, "receipt_id already stored: " + id);
        }
        if (current_segment_count_ >= kSegmentCapacity) {
            ++current_segment_;
            current_segment_count_ = 0;
        }
        const auto seg_path = dir_ / "segments" / segment_name(current_segment_);
        append_line(seg_path, line);
        jdoc idx;
        idx["receipt_id"] = id;
        idx["segment"] = current_segment_;
        idx["line"] = current_segment_count_;
        idx["served_at"] = served_at;
        append_line(dir_ / "index.jsonl", idx.dump());
        ++current_segment_count_;

        Entry e{std::move(receipt), *parse_rfc3339_utc(served_at), std::move(line),
                current_segment_};
        by_id_[id] = entries_.size();
        entries_.push_back(std::move(e));
        return entries_.size() - 1;
    }

    void rewrite_segment(std::size_t seg, const std::set<std::size_t>& doomed) {
        const auto seg_path = dir_ / "segments" / segment_name(seg);
        const auto tmp_path = seg_path.string() + ".tmp";
        {
            std::ofstream out(tmp_path, std::ios::trunc);
            if (!out) throw StoreError(StoreError::Kind::io, "cannot open " + tmp_path);
            for (std::size_t i = 0; i < entries_.size(); ++i) {
                if (entries_[i].segment == seg && !doomed.count(i)) {
                    out << entries_[i].line << '\n';
                }
            }
            out.flush();
            if (!out) throw StoreError(StoreError::Kind::io, "write failed: " + tmp_path);
        }
        std::filesystem::rename(tmp_path, seg_path);
        if (seg == current_segment_) {
            current_segment_count_ = 0;
            for (std::size_t i = 0; i < entries_.size(); ++i) {
                if (entries_[i].segment == seg && !doomed.count(i)) ++current_segment_count_;
            }
        }
    }

    static bool matches(const Entry& e, const ReceiptFilter& f) {
        const auto& r = e.receipt;
        if (f.from && e.served_key < *f.from) return false;
        if (f.to && !(e.served_key < *f.to)) return false;
        if (f.requested_model && r.requested_model != f.requested_model) return false;
        if (f.fallback_status && r.fallback.status != *f.fallback_status) return false;
        if (f.region_class && r.region_class != *f.region_class) return false;
        if (f.completion_status && r.completion_status != *f.completion_status) return false;
        if (f.retention_class && r.retention_class != f.retention_class) return false;
        return true;
    }

    static void sort_entries(std::vector<const Entry*>& hits) {
        std::sort(hits.begin(), hits.end(), [](const Entry* a, const Entry* b) {
            if (a->served_key != b->served_key) return a->served_key < b->served_key;
            return a->receipt.receipt_id < b->receipt.receipt_id;
        });
    }
};

}  // namespace routereceipt

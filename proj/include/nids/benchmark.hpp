#pragma once

// Throughput and latency metrics over completed timelines, and reports.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nids/pipeline.hpp"

namespace nids {

struct ThroughputInterval {
    std::size_t index = 0;
    std::int64_t width_ns = 0;
    std::uint64_t count = 0;
    double rate = 0.0;  // insertions per second
    bool operator==(const ThroughputInterval&) const = default;
};

struct LatencyInterval {
    std::size_t index = 0;
    std::uint64_t count = 0;
    double mean_ms = 0.0;
    bool operator==(const LatencyInterval&) const = default;
};

struct ThroughputResult {
    double value = 0.0;
    std::vector<ThroughputInterval> intervals;
};

struct LatencyResult {
    double value = 0.0;
    std::vector<LatencyInterval> intervals;
};

/// Splits [first insertion, last insertion) into interval_s windows aligned
/// to the first insertion. A trailing partial window shorter than half an
/// interval is dropped, otherwise its rate uses its true width. The value is
/// the highest window rate. Throws Error when no window remains.
ThroughputResult compute_throughput(std::span<const TimelineEvent> events, double interval_s = 30.0);

/// Buckets inserted_at - created_at by insertion time into interval_s windows
/// from the first insertion; the value is the median of the per-window means
/// in milliseconds (mean of the middle two for an even count). Empty windows
/// are skipped. Throws Error on empty input.
LatencyResult compute_latency(std::span<const TimelineEvent> events, double interval_s = 10.0);

struct BenchMetadata {
    std::string classifier;
    std::string params;
    std::string rate;  // sessions/s or "unlimited"
    double duration_s = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t sessions = 0;
    std::uint64_t errors = 0;
    double throughput_interval_s = 30.0;
    double latency_interval_s = 10.0;
    bool operator==(const BenchMetadata&) const = default;
};

struct BenchReport {
    static constexpr int kSchemaVersion = 1;

    double throughput_sessions_per_s = 0.0;
    double latency_ms = 0.0;
    std::vector<ThroughputInterval> throughput_intervals;
    std::vector<LatencyInterval> latency_intervals;
    std::map<std::string, double> stage_busy_ratios;
    std::optional<double> f1;  // when the replayed sessions carry labels
    BenchMetadata metadata;

    nlohmann::ordered_json to_json() const;
    static BenchReport from_json(const nlohmann::json& j);
};

BenchReport make_report(const RunSummary& summary, BenchMetadata metadata);

enum class ReportFormat { Json, Csv };

/// JSON is schema-versioned; CSV is long format (metric,interval_index,value)
/// with one row per throughput window, latency window and stage.
std::string emit_report(const BenchReport& report, ReportFormat format);

struct Spread {
    double mean = 0.0, min = 0.0, max = 0.0;
};

struct AggregateReport {
    std::vector<BenchReport> runs;
    Spread throughput;
    Spread latency;

    nlohmann::ordered_json to_json() const;
};

AggregateReport aggregate(std::vector<BenchReport> runs);

}  // namespace nids

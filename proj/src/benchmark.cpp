#include "nids/benchmark.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace nids {

namespace {

std::int64_t interval_ns(double seconds) {
    if (!(seconds > 0.0) || !std::isfinite(seconds)) throw Error("metric interval must be > 0");
    return std::max<std::int64_t>(1, std::llround(seconds * 1e9));
}

}  // namespace

ThroughputResult compute_throughput(std::span<const TimelineEvent> events, double interval_s) {
    if (events.empty()) throw Error("throughput: no events");
    const std::int64_t w = interval_ns(interval_s);
    std::int64_t lo = events.front().inserted_at;
    std::int64_t hi = lo;
    for (const auto& e : events) {
        lo = std::min(lo, e.inserted_at);
        hi = std::max(hi, e.inserted_at);
    }
    const std::int64_t span = hi - lo;
    const auto full = static_cast<std::size_t>(span / w);
    const std::int64_t rest = span % w;
    const bool keep_partial = rest > 0 && 2 * rest >= w;
    const std::size_t windows = full + (keep_partial ? 1 : 0);
    if (windows == 0) throw Error("throughput: timeline shorter than half an interval");

    std::vector<std::uint64_t> counts(windows, 0);
    for (const auto& e : events) {
        if (e.inserted_at >= hi) continue;
        const auto idx = static_cast<std::size_t>((e.inserted_at - lo) / w);
        if (idx < windows) ++counts[idx];
    }
    ThroughputResult out;
    for (std::size_t i = 0; i < windows; ++i) {
        const std::int64_t width = i < full ? w : rest;
        const double rate = static_cast<double>(counts[i]) * 1e9 / static_cast<double>(width);
        out.intervals.push_back({i, width, counts[i], rate});
        out.value = i == 0 ? rate : std::max(out.value, rate);
    }
    return out;
}

LatencyResult compute_latency(std::span<const TimelineEvent> events, double interval_s) {
    if (events.empty()) throw Error("latency: no events");
    const std::int64_t w = interval_ns(interval_s);
    std::int64_t lo = events.front().inserted_at;
    for (const auto& e : events) lo = std::min(lo, e.inserted_at);

    std::map<std::size_t, std::pair<std::int64_t, std::uint64_t>> buckets;
    for (const auto& e : events) {
        auto& b = buckets[static_cast<std::size_t>((e.inserted_at - lo) / w)];
        b.first += e.inserted_at - e.created_at;
        ++b.second;
    }
    LatencyResult out;
    std::vector<double> means;
    for (const auto& [idx, b] : buckets) {
        const double mean = static_cast<double>(b.first) / static_cast<double>(b.second) / 1e6;
        out.intervals.push_back({idx, b.second, mean});
        means.push_back(mean);
    }
    std::sort(means.begin(), means.end());
    const std::size_t n = means.size();
    out.value = n % 2 == 1 ? means[n / 2] : (means[n / 2 - 1] + means[n / 2]) / 2.0;
    return out;
}

BenchReport make_report(const RunSummary& summary, BenchMetadata metadata) {
    BenchReport r;
    const auto tp = compute_throughput(summary.timeline, metadata.throughput_interval_s);
    const auto lat = compute_latency(summary.timeline, metadata.latency_interval_s);
    r.throughput_sessions_per_s = tp.value;
    r.throughput_intervals = tp.intervals;
    r.latency_ms = lat.value;
    r.latency_intervals = lat.intervals;
    r.stage_busy_ratios = stage_busy_ratio(summary);
    metadata.sessions = summary.sessions_out;
    metadata.errors = summary.sink_errors + summary.classifier_errors;
    metadata.duration_s = static_cast<double>(summary.wall_ns) / 1e9;
    r.metadata = std::move(metadata);
    return r;
}

nlohmann::ordered_json BenchReport::to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["throughput_sessions_per_s"] = throughput_sessions_per_s;
    j["latency_ms"] = latency_ms;
    auto tp = nlohmann::ordered_json::array();
    for (const auto& i : throughput_intervals) {
        tp.push_back({{"index", i.index}, {"width_ns", i.width_ns}, {"count", i.count}, {"rate", i.rate}});
    }
    j["throughput_intervals"] = std::move(tp);
    auto lat = nlohmann::ordered_json::array();
    for (const auto& i : latency_intervals) {
        lat.push_back({{"index", i.index}, {"count", i.count}, {"mean_ms", i.mean_ms}});
    }
    j["latency_intervals"] = std::move(lat);
    nlohmann::ordered_json stages = nlohmann::ordered_json::object();
    for (const auto& [k, v] : stage_busy_ratios) stages[k] = v;
    j["stage_busy_ratios"] = std::move(stages);
    j["f1"] = f1 ? nlohmann::ordered_json(*f1) : nlohmann::ordered_json(nullptr);
    j["metadata"] = {{"classifier", metadata.classifier},
                     {"params", metadata.params},
                     {"rate", metadata.rate},
                     {"duration_s", metadata.duration_s},
                     {"seed", metadata.seed},
                     {"sessions", metadata.sessions},
                     {"errors", metadata.errors},
                     {"throughput_interval_s", metadata.throughput_interval_s},
                     {"latency_interval_s", metadata.latency_interval_s}};
    return j;
}

BenchReport BenchReport::from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema_version").get<int>() != kSchemaVersion) throw ParseError("report: unknown schema version");
        BenchReport r;
        r.throughput_sessions_per_s = j.at("throughput_sessions_per_s").get<double>();
        r.latency_ms = j.at("latency_ms").get<double>();
        for (const auto& i : j.at("throughput_intervals")) {
            r.throughput_intervals.push_back({i.at("index").get<std::size_t>(), i.at("width_ns").get<std::int64_t>(),
                                              i.at("count").get<std::uint64_t>(), i.at("rate").get<double>()});
        }
        for (const auto& i : j.at("latency_intervals")) {
            r.latency_intervals.push_back({i.at("index").get<std::size_t>(), i.at("count").get<std::uint64_t>(),
                                           i.at("mean_ms").get<double>()});
        }
        for (const auto& [k, v] : j.at("stage_busy_ratios").items()) r.stage_busy_ratios[k] = v.get<double>();
        if (!j.at("f1").is_null()) r.f1 = j.at("f1").get<double>();
        const auto& m = j.at("metadata");
        r.metadata = {m.at("classifier").get<std::string>(),
                      m.at("params").get<std::string>(),
                      m.at("rate").get<std::string>(),
                      m.at("duration_s").get<double>(),
                      m.at("seed").get<std::uint64_t>(),
                      m.at("sessions").get<std::uint64_t>(),
                      m.at("errors").get<std::uint64_t>(),
                      m.at("throughput_interval_s").get<double>(),
                      m.at("latency_interval_s").get<double>()};
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("report: ") + e.what());
    }
}

std::string emit_report(const BenchReport& report, ReportFormat format) {
    if (format == ReportFormat::Json) return report.to_json().dump(2) + "\n";
    std::string out = "metric,interval_index,value\n";
    out += fmt::format("throughput_sessions_per_s,,{}\n", report.throughput_sessions_per_s);
    out += fmt::format("latency_ms,,{}\n", report.latency_ms);
    if (report.f1) out += fmt::format("f1,,{}\n", *report.f1);
    for (const auto& i : report.throughput_intervals) out += fmt::format("throughput,{},{}\n", i.index, i.rate);
    for (const auto& i : report.latency_intervals) out += fmt::format("latency,{},{}\n", i.index, i.mean_ms);
    for (const auto& [k, v] : report.stage_busy_ratios) out += fmt::format("busy_ratio.{},,{}\n", k, v);
    return out;
}

AggregateReport aggregate(std::vector<BenchReport> runs) {
    if (runs.empty()) throw Error("aggregate: no runs");
    AggregateReport a;
    auto spread = [&](auto get) {
        Spread s{0.0, get(runs.front()), get(runs.front())};
        for (const auto& r : runs) {
            s.mean += get(r);
            s.min = std::min(s.min, get(r));
            s.max = std::max(s.max, get(r));
        }
        s.mean /= static_cast<double>(runs.size());
        return s;
    };
    a.throughput = spread([](const BenchReport& r) { return r.throughput_sessions_per_s; });
    a.latency = spread([](const BenchReport& r) { return r.latency_ms; });
    a.runs = std::move(runs);
    return a;
}

nlohmann::ordered_json AggregateReport::to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = BenchReport::kSchemaVersion;
    j["runs"] = runs.size();
    j["throughput_sessions_per_s"] = {{"mean", throughput.mean}, {"min", throughput.min}, {"max", throughput.max}};
    j["latency_ms"] = {{"mean", latency.mean}, {"min", latency.min}, {"max", latency.max}};
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : runs) arr.push_back(r.to_json());
    j["reports"] = std::move(arr);
    return j;
}

}  // namespace nids

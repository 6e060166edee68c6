#include "nids/pipeline.hpp"

#include <cerrno>
#include <cstring>
#include <exception>
#include <thread>

#include <fmt/format.h>

#include "nids/bounded_queue.hpp"
#include "nids/session_log.hpp"

namespace nids {

std::string_view to_string(SinkKind k) {
    switch (k) {
        case SinkKind::JsonlFile: return "jsonl-file";
        case SinkKind::EmbeddedStore: return "embedded-store";
        case SinkKind::Null: return "null";
    }
    return "?";
}

std::optional<SinkKind> parse_sink_kind(std::string_view s) {
    for (SinkKind k : {SinkKind::JsonlFile, SinkKind::EmbeddedStore, SinkKind::Null}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

void PipelineConfig::validate() const {
    if (queue_capacity < 1) throw ConfigError("queue_capacity must be >= 1");
    if (classifier_worker_count < 1) throw ConfigError("classifier_workers must be >= 1");
    if (replay_rate && !(*replay_rate > 0.0)) throw ConfigError("replay rate must be > 0");
    if (window_capacity < 1) throw ConfigError("window_capacity must be >= 1");
    if (sink == SinkKind::JsonlFile && sink_path.empty()) throw ConfigError("jsonl-file sink needs a path");
}

// --- sinks -------------------------------------------------------------------

std::string sink_record_to_json_line(const SinkRecord& r) {
    auto j = session_to_json(r.record.session);
    j["dst_host_count"] = r.record.host.dst_host_count;
    j["dst_host_same_src_port_count"] = r.record.host.dst_host_same_src_port_count;
    j["dst_host_serror_count"] = r.record.host.dst_host_serror_count;
    j["dst_host_srv_count"] = r.record.host.dst_host_srv_count;
    j["dst_host_srv_serror_count"] = r.record.host.dst_host_srv_serror_count;
    j["label"] = to_string(r.prediction.label);
    j["score"] = r.prediction.score;
    j["classifier_error"] = r.classifier_error;
    j["created_at"] = r.timeline.created_at;
    j["encoded_at"] = r.timeline.encoded_at;
    j["classified_at"] = r.timeline.classified_at;
    j["inserted_at"] = r.timeline.inserted_at;
    return j.dump();
}

SinkRecord sink_record_from_json_line(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
        SinkRecord r;
        r.record.session = session_from_json(j);
        r.record.host.dst_host_count = j.at("dst_host_count").get<std::uint32_t>();
        r.record.host.dst_host_same_src_port_count = j.at("dst_host_same_src_port_count").get<std::uint32_t>();
        r.record.host.dst_host_serror_count = j.at("dst_host_serror_count").get<std::uint32_t>();
        r.record.host.dst_host_srv_count = j.at("dst_host_srv_count").get<std::uint32_t>();
        r.record.host.dst_host_srv_serror_count = j.at("dst_host_srv_serror_count").get<std::uint32_t>();
        const auto label = parse_label(j.at("label").get<std::string>());
        if (!label) throw ParseError("bad label");
        r.prediction = {*label, j.at("score").get<double>()};
        r.classifier_error = j.at("classifier_error").get<bool>();
        r.timeline = {r.record.session.session_id, j.at("created_at").get<std::int64_t>(),
                      j.at("encoded_at").get<std::int64_t>(), j.at("classified_at").get<std::int64_t>(),
                      j.at("inserted_at").get<std::int64_t>()};
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("sink record: ") + e.what());
    }
}

JsonlFileSink::JsonlFileSink(const std::string& path) : path_(path) {
    file_ = std::fopen(path.c_str(), "wb");
    if (!file_) throw ConfigError(fmt::format("cannot open sink file {}: {}", path, std::strerror(errno)));
}

JsonlFileSink::~JsonlFileSink() {
    if (file_) std::fclose(file_);
}

void JsonlFileSink::write(const SinkRecord& r) {
    const std::string line = sink_record_to_json_line(r) + "\n";
    if (std::fwrite(line.data(), 1, line.size(), file_) != line.size()) {
        throw Error(fmt::format("write to {} failed", path_));
    }
}

void JsonlFileSink::flush() {
    if (std::fflush(file_) != 0) throw Error(fmt::format("flush of {} failed", path_));
}

std::unique_ptr<Sink> make_sink(const PipelineConfig& config) {
    switch (config.sink) {
        case SinkKind::JsonlFile: return std::make_unique<JsonlFileSink>(config.sink_path);
        case SinkKind::EmbeddedStore: return std::make_unique<MemorySink>();
        case SinkKind::Null: return std::make_unique<NullSink>();
    }
    throw ConfigError("unknown sink kind");
}

// --- replay ------------------------------------------------------------------

Replayer::Replayer(std::span<const SessionRecord> sessions, std::optional<double> rate)
    : sessions_(sessions), rate_(rate) {
    if (rate_ && !(*rate_ > 0.0)) throw ConfigError("replay rate must be > 0");
}

const SessionRecord* Replayer::next() {
    if (pos_ >= sessions_.size()) return nullptr;
    if (rate_) {
        const double rate = *rate_;
        const double capacity = std::max(rate, 1.0);
        if (last_ns_ == 0) last_ns_ = monotonic_ns();
        for (;;) {
            const std::int64_t now = monotonic_ns();
            tokens_ = std::min(capacity, tokens_ + static_cast<double>(now - last_ns_) * rate / 1e9);
            last_ns_ = now;
            if (tokens_ >= 1.0) break;
            const double wait_s = (1.0 - tokens_) / rate;
            std::this_thread::sleep_for(std::chrono::nanoseconds(static_cast<std::int64_t>(wait_s * 1e9) + 1));
        }
        tokens_ -= 1.0;
    }
    return &sessions_[pos_++];
}

void replay(std::span<const SessionRecord> sessions, std::optional<double> rate,
            const std::function<void(const SessionRecord&)>& emit) {
    Replayer r(sessions, rate);
    while (const SessionRecord* s = r.next()) emit(*s);
}

// --- pipeline ----------------------------------------------------------------

std::map<std::string, double> stage_busy_ratio(const RunSummary& summary) {
    std::map<std::string, double> out;
    const double wall = static_cast<double>(summary.wall_ns);
    double classifier = 0.0;
    for (const auto& s : summary.stages) {
        const double r = wall > 0 ? static_cast<double>(s.busy_ns) / wall : 0.0;
        out[s.name] = r;
        if (s.name.starts_with("classifier-")) classifier += r;
    }
    out["classifier"] = classifier;
    return out;
}

namespace {

struct Admitted {
    const SessionRecord* session;
    std::int64_t created_at;
};

struct Encoded {
    std::vector<std::uint8_t> bytes;
    std::int64_t created_at;
    std::int64_t encoded_at;
};

class FailureLatch {
public:
    void set(std::exception_ptr e) {
        std::lock_guard lock(mu_);
        if (!error_) error_ = e;
    }
    std::exception_ptr get() {
        std::lock_guard lock(mu_);
        return error_;
    }

private:
    std::mutex mu_;
    std::exception_ptr error_;
};

}  // namespace

RunSummary run_pipeline(const PipelineConfig& config, std::span<const SessionRecord> source,
                        const NormalizationSpec& spec, const Classifier& classifier, Sink& sink) {
    config.validate();
    if (const auto want = classifier.spec_version(); !want.empty() && want != spec.fingerprint()) {
        throw ConfigError(fmt::format("classifier expects normalization spec '{}' but the pipeline uses '{}'",
                                      want, spec.fingerprint()));
    }

    const std::size_t workers = config.classifier_worker_count;
    BoundedQueue<Admitted> admitted(config.queue_capacity);
    BoundedQueue<Encoded> encoded(config.queue_capacity);
    BoundedQueue<SinkRecord> classified(config.queue_capacity);
    FailureLatch failure;
    auto abort_all = [&](std::exception_ptr e) {
        failure.set(e);
        admitted.close();
        encoded.close();
        classified.close();
    };

    RunSummary summary;
    summary.stages.push_back({"feature", 0, 0});
    for (std::size_t w = 0; w < workers; ++w) summary.stages.push_back({fmt::format("classifier-{}", w), 0, 0});
    summary.stages.push_back({"sink", 0, 0});
    std::atomic<std::size_t> live_workers{workers};
    std::uint64_t admitted_count = 0;
    std::atomic<std::uint64_t> classifier_errors{0};

    const std::int64_t start = monotonic_ns();

    std::thread source_thread([&] {
        try {
            Replayer r(source, config.replay_rate);
            while (const SessionRecord* s = r.next()) {
                if (!admitted.push({s, monotonic_ns()})) break;
                ++admitted_count;
            }
        } catch (...) {
            abort_all(std::current_exception());
        }
        admitted.close();
    });

    std::thread feature_thread([&] {
        auto& stats = summary.stages.front();
        try {
            HostWindow window(config.window_capacity, config.window_include_current);
            while (auto item = admitted.pop()) {
                const std::int64_t t0 = monotonic_ns();
                FullFeatureRecord rec{*item->session, window.update_and_extract(*item->session)};
                Encoded e{encode_record(rec), item->created_at, 0};
                e.encoded_at = monotonic_ns();
                stats.busy_ns += e.encoded_at - t0;
                ++stats.items;
                if (!encoded.push(std::move(e))) break;
            }
        } catch (...) {
            abort_all(std::current_exception());
        }
        encoded.close();
    });

    std::vector<std::thread> worker_threads;
    for (std::size_t w = 0; w < workers; ++w) {
        worker_threads.emplace_back([&, w] {
            auto& stats = summary.stages[1 + w];
            try {
                std::vector<double> vec(spec.dimension());
                while (auto item = encoded.pop()) {
                    const std::int64_t t0 = monotonic_ns();
                    SinkRecord out;
                    out.record = decode_record(item->bytes);
                    strip_and_encode(out.record, spec, vec);
                    try {
                        out.prediction = classifier.classify(vec);
                    } catch (const std::exception&) {
                        out.classifier_error = true;
                        out.prediction = config.on_classifier_error == ClassifierFailurePolicy::FailOpen
                                             ? Prediction{Label::Normal, 0.0}
                                             : Prediction{Label::Abnormal, 1.0};
                        classifier_errors.fetch_add(1, std::memory_order_relaxed);
                    }
                    out.timeline = {out.record.session.session_id, item->created_at, item->encoded_at,
                                    monotonic_ns(), 0};
                    stats.busy_ns += out.timeline.classified_at - t0;
                    ++stats.items;
                    if (!classified.push(std::move(out))) break;
                }
            } catch (...) {
                abort_all(std::current_exception());
            }
            if (live_workers.fetch_sub(1) == 1) classified.close();
        });
    }

    std::thread sink_thread([&] {
        auto& stats = summary.stages.back();
        try {
            while (auto item = classified.pop()) {
                const std::int64_t t0 = monotonic_ns();
                bool written = false;
                for (std::size_t attempt = 0; attempt <= config.sink_retries && !written; ++attempt) {
                    item->timeline.inserted_at = monotonic_ns();
                    try {
                        sink.write(*item);
                        written = true;
                    } catch (const std::exception&) {
                    }
                }
                if (written) {
                    ++summary.sessions_out;
                    summary.timeline.push_back(item->timeline);
                } else {
                    ++summary.sink_errors;
                    summary.sink_error_session_ids.push_back(item->record.session.session_id);
                }
                stats.busy_ns += monotonic_ns() - t0;
                ++stats.items;
            }
            sink.flush();
        } catch (...) {
            abort_all(std::current_exception());
        }
    });

    source_thread.join();
    feature_thread.join();
    for (auto& t : worker_threads) t.join();
    sink_thread.join();
    summary.wall_ns = monotonic_ns() - start;
    summary.sessions_in = admitted_count;
    summary.classifier_errors = classifier_errors.load();
    if (auto e = failure.get()) std::rethrow_exception(e);
    return summary;
}

}  // namespace nids

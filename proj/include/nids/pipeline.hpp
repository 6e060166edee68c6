#pragma once

// Staged concurrent pipeline: source -> host-feature stage (single thread,
// stream order) -> binary codec -> classifier workers -> single sink writer.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "nids/codec.hpp"
#include "nids/model.hpp"
#include "nids/normalization.hpp"

namespace nids {

/// Monotonic clock in nanoseconds.
inline std::int64_t monotonic_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

enum class SinkKind : std::uint8_t { JsonlFile, EmbeddedStore, Null };
std::string_view to_string(SinkKind k);
std::optional<SinkKind> parse_sink_kind(std::string_view s);  // "jsonl-file", "embedded-store", "null"

enum class ClassifierFailurePolicy : std::uint8_t { FailOpen, FailClosed };

struct PipelineConfig {
    std::size_t queue_capacity = 10000;
    std::size_t classifier_worker_count = 2;
    SinkKind sink = SinkKind::EmbeddedStore;
    std::string sink_path;               // jsonl-file only
    std::optional<double> replay_rate;   // sessions/s; empty means unlimited
    std::size_t window_capacity = HostWindow::kDefaultCapacity;
    bool window_include_current = false;
    ClassifierFailurePolicy on_classifier_error = ClassifierFailurePolicy::FailOpen;
    std::size_t sink_retries = 3;

    /// Throws ConfigError.
    void validate() const;
};

struct TimelineEvent {
    std::uint64_t session_id = 0;
    std::int64_t created_at = 0;
    std::int64_t encoded_at = 0;
    std::int64_t classified_at = 0;
    std::int64_t inserted_at = 0;

    bool operator==(const TimelineEvent&) const = default;
};

struct SinkRecord {
    FullFeatureRecord record;
    Prediction prediction;
    bool classifier_error = false;
    TimelineEvent timeline;
};

/// Shared, read-only during a run; classify may be called concurrently.
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual Prediction classify(std::span<const double> x) const = 0;
    /// Normalization fingerprint the classifier expects; empty accepts any.
    virtual std::string spec_version() const { return {}; }
    virtual std::string id() const = 0;
};

class ModelClassifier final : public Classifier {
public:
    explicit ModelClassifier(TrainedModel model) : model_(std::move(model)) {}
    Prediction classify(std::span<const double> x) const override { return model_.predict(x); }
    std::string spec_version() const override { return model_.spec_version; }
    std::string id() const override { return std::string(to_string(model_.algorithm)); }
    const TrainedModel& model() const { return model_; }

private:
    TrainedModel model_;
};

/// Labels everything normal with score 0.
class NullClassifier final : public Classifier {
public:
    Prediction classify(std::span<const double>) const override { return {}; }
    std::string id() const override { return "null"; }
};

class FunctionClassifier final : public Classifier {
public:
    using Fn = std::function<Prediction(std::span<const double>)>;
    FunctionClassifier(std::string id, Fn fn) : id_(std::move(id)), fn_(std::move(fn)) {}
    Prediction classify(std::span<const double> x) const override { return fn_(x); }
    std::string id() const override { return id_; }

private:
    std::string id_;
    Fn fn_;
};

/// Written by exactly one thread. write may throw; the pipeline retries.
class Sink {
public:
    virtual ~Sink() = default;
    virtual void write(const SinkRecord& record) = 0;
    virtual void flush() {}
};

class MemorySink final : public Sink {
public:
    void write(const SinkRecord& r) override { records_.push_back(r); }
    const std::vector<SinkRecord>& records() const { return records_; }
    std::vector<SinkRecord> take() { return std::move(records_); }

private:
    std::vector<SinkRecord> records_;
};

class NullSink final : public Sink {
public:
    void write(const SinkRecord&) override { ++count_; }
    std::uint64_t count() const { return count_; }

private:
    std::uint64_t count_ = 0;
};

/// One JSON object per line. Opening truncates, so each run starts a new file.
class JsonlFileSink final : public Sink {
public:
    explicit JsonlFileSink(const std::string& path);
    ~JsonlFileSink() override;
    void write(const SinkRecord& r) override;
    void flush() override;

private:
    std::FILE* file_ = nullptr;
    std::string path_;
};

std::string sink_record_to_json_line(const SinkRecord& r);
SinkRecord sink_record_from_json_line(std::string_view line);

std::unique_ptr<Sink> make_sink(const PipelineConfig& config);

/// Token bucket pacing: capacity of one second of tokens, starting empty,
/// refilled continuously at rate. Unlimited when rate is empty.
class Replayer {
public:
    Replayer(std::span<const SessionRecord> sessions, std::optional<double> rate);
    /// Blocks until the next session may be emitted; empty at the end.
    const SessionRecord* next();

private:
    std::span<const SessionRecord> sessions_;
    std::optional<double> rate_;
    std::size_t pos_ = 0;
    double tokens_ = 0.0;
    std::int64_t last_ns_ = 0;
};

/// Calls emit for each session with the replay pacing.
void replay(std::span<const SessionRecord> sessions, std::optional<double> rate,
            const std::function<void(const SessionRecord&)>& emit);

struct StageStats {
    std::string name;  // "feature", "classifier-<i>", "sink"
    std::int64_t busy_ns = 0;
    std::uint64_t items = 0;
};

struct RunSummary {
    std::uint64_t sessions_in = 0;
    std::uint64_t sessions_out = 0;
    std::uint64_t classifier_errors = 0;
    std::uint64_t sink_errors = 0;
    std::vector<std::uint64_t> sink_error_session_ids;
    std::vector<TimelineEvent> timeline;  // one per written record, in sink order
    std::int64_t wall_ns = 0;
    std::vector<StageStats> stages;
};

/// busy time / wall time for "feature", each "classifier-<i>", the summed
/// "classifier" and "sink".
std::map<std::string, double> stage_busy_ratio(const RunSummary& summary);

/// Throws ConfigError when the classifier expects a different normalization.
RunSummary run_pipeline(const PipelineConfig& config, std::span<const SessionRecord> source,
                        const NormalizationSpec& spec, const Classifier& classifier, Sink& sink);

}  // namespace nids

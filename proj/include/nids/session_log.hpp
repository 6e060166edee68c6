#pragma once

// Session-log JSONL (one session per line, snake_case feature names) and the
// ground-truth CSV labeler.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nids/core_model.hpp"

namespace nids {

struct LabeledSession {
    SessionRecord session;
    std::optional<ClassLabel> label;

    bool operator==(const LabeledSession&) const = default;
};

nlohmann::ordered_json session_to_json(const SessionRecord& s);
/// Throws ParseError on missing or invalid fields.
SessionRecord session_from_json(const nlohmann::json& j);

std::string to_jsonl_line(const LabeledSession& s);
LabeledSession parse_session_line(std::string_view line);

/// Blank lines are ignored; a bad line throws ParseError naming its number.
std::vector<LabeledSession> read_session_log(std::istream& in);
std::vector<LabeledSession> read_session_log_file(const std::string& path);
void write_session_log(std::ostream& out, const std::vector<LabeledSession>& sessions);
void write_session_log_file(const std::string& path, const std::vector<LabeledSession>& sessions);

struct GroundTruthRow {
    FiveTuple five_tuple;
    double start_time = 0.0;  // epoch seconds
    double end_time = 0.0;
    std::string attack_cat;
};

struct GroundTruth {
    std::vector<GroundTruthRow> rows;
    std::size_t skipped_rows = 0;
};

/// Columns (any order, header required): src, sport, dst, dport, proto,
/// start_time, end_time, attack_cat. Malformed rows are skipped and counted.
GroundTruth read_ground_truth(std::istream& in);
GroundTruth read_ground_truth_file(const std::string& path);

struct LabelStats {
    std::size_t sessions = 0;
    std::size_t abnormal = 0;
    std::size_t truth_rows = 0;
    std::size_t skipped_rows = 0;
};

/// A session is abnormal when a row has its exact directional 5-tuple and
/// [start, start + duration] meets [start_time - 1 s, end_time + 1 s]
/// (edges inclusive). The first matching row supplies the attack category.
LabelStats apply_ground_truth(std::vector<LabeledSession>& sessions, const GroundTruth& truth);

}  // namespace nids

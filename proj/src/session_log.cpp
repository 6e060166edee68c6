#include "nids/session_log.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

namespace nids {

nlohmann::ordered_json session_to_json(const SessionRecord& s) {
    nlohmann::ordered_json j;
    j["session_id"] = s.session_id;
    j["timestamp"] = s.timestamp_ms;
    j["duration"] = s.duration_s;
    j["source_ip_address"] = s.five_tuple.src_addr.to_string();
    j["source_port_number"] = s.five_tuple.src_port;
    j["destination_ip_address"] = s.five_tuple.dst_addr.to_string();
    j["destination_port_number"] = s.five_tuple.dst_port;
    j["protocol"] = to_string(s.five_tuple.protocol);
    j["service_type"] = s.service.name();
    j["connection_state"] = to_string(s.conn_state);
    j["direction"] = to_string(s.direction);
    j["source_packets"] = s.src_packets;
    j["source_bytes"] = s.src_bytes;
    j["source_ip_bytes"] = s.src_ip_bytes;
    j["destination_packets"] = s.dst_packets;
    j["destination_bytes"] = s.dst_bytes;
    j["destination_ip_bytes"] = s.dst_ip_bytes;
    return j;
}

namespace {

template <typename T>
T require(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(fmt::format("missing field '{}'", key));
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ParseError(fmt::format("field '{}' has the wrong type", key));
    }
}

template <typename E>
E require_enum(const nlohmann::json& j, const char* key, std::optional<E> (*parse)(std::string_view)) {
    const auto text = require<std::string>(j, key);
    auto v = parse(text);
    if (!v) throw ParseError(fmt::format("field '{}' has unknown value '{}'", key, text));
    return *v;
}

std::uint16_t require_port(const nlohmann::json& j, const char* key) {
    const auto v = require<std::int64_t>(j, key);
    if (v < 0 || v > 65535) throw ParseError(fmt::format("field '{}' out of port range", key));
    return static_cast<std::uint16_t>(v);
}

std::uint64_t require_count(const nlohmann::json& j, const char* key) {
    const auto v = require<std::int64_t>(j, key);
    if (v < 0) throw ParseError(fmt::format("field '{}' is negative", key));
    return static_cast<std::uint64_t>(v);
}

}  // namespace

SessionRecord session_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("session is not a JSON object");
    SessionRecord s;
    s.session_id = require_count(j, "session_id");
    s.timestamp_ms = require<std::int64_t>(j, "timestamp");
    s.duration_s = require<double>(j, "duration");
    s.five_tuple.src_addr = IpAddress::parse(require<std::string>(j, "source_ip_address"));
    s.five_tuple.src_port = require_port(j, "source_port_number");
    s.five_tuple.dst_addr = IpAddress::parse(require<std::string>(j, "destination_ip_address"));
    s.five_tuple.dst_port = require_port(j, "destination_port_number");
    s.five_tuple.protocol = require_enum<Protocol>(j, "protocol", parse_protocol);
    s.service = ServiceType(require<std::string>(j, "service_type"));
    s.conn_state = require_enum<ConnState>(j, "connection_state", parse_conn_state);
    s.direction = require_enum<Direction>(j, "direction", parse_direction);
    s.src_packets = require_count(j, "source_packets");
    s.src_bytes = require_count(j, "source_bytes");
    s.src_ip_bytes = require_count(j, "source_ip_bytes");
    s.dst_packets = require_count(j, "destination_packets");
    s.dst_bytes = require_count(j, "destination_bytes");
    s.dst_ip_bytes = require_count(j, "destination_ip_bytes");
    try {
        validate(s);
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(e.what());
    }
    return s;
}

std::string to_jsonl_line(const LabeledSession& s) {
    auto j = session_to_json(s.session);
    if (s.label) {
        j["label"] = to_string(s.label->label);
        if (s.label->attack_category) j["attack_cat"] = *s.label->attack_category;
    }
    return j.dump();
}

LabeledSession parse_session_line(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    LabeledSession out;
    out.session = session_from_json(j);
    if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
        const auto l = require_enum<Label>(j, "label", parse_label);
        ClassLabel cl{l, std::nullopt};
        if (auto c = j.find("attack_cat"); c != j.end() && !c->is_null() && l == Label::Abnormal) {
            cl.attack_category = require<std::string>(j, "attack_cat");
        }
        out.label = std::move(cl);
    }
    return out;
}

std::vector<LabeledSession> read_session_log(std::istream& in) {
    std::vector<LabeledSession> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(parse_session_line(line));
        } catch (const Error& e) {
            throw ParseError(fmt::format("session log line {}: {}", n, e.what()));
        }
    }
    return out;
}

std::vector<LabeledSession> read_session_log_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read session log " + path);
    return read_session_log(f);
}

void write_session_log(std::ostream& out, const std::vector<LabeledSession>& sessions) {
    for (const auto& s : sessions) out << to_jsonl_line(s) << '\n';
}

void write_session_log_file(const std::string& path, const std::vector<LabeledSession>& sessions) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write session log " + path);
    write_session_log(f, sessions);
    if (!f) throw ConfigError("failed writing session log " + path);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    for (auto& f : out) {
        const auto b = f.find_first_not_of(' ');
        const auto e = f.find_last_not_of(' ');
        f = b == std::string::npos ? std::string{} : f.substr(b, e - b + 1);
    }
    return out;
}

std::optional<double> to_double(const std::string& s) {
    double v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<std::uint16_t> to_port(const std::string& s) {
    unsigned v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || v > 65535) return std::nullopt;
    return static_cast<std::uint16_t>(v);
}

}  // namespace

GroundTruth read_ground_truth(std::istream& in) {
    static constexpr std::array<std::string_view, 8> kColumns{"src", "sport", "dst", "dport",
                                                              "proto", "start_time", "end_time", "attack_cat"};
    GroundTruth gt;
    std::string line;
    if (!std::getline(in, line)) return gt;
    const auto header = split_csv(line);
    std::array<std::size_t, 8> col{};
    for (std::size_t c = 0; c < kColumns.size(); ++c) {
        auto it = std::find(header.begin(), header.end(), kColumns[c]);
        if (it == header.end()) throw ParseError(fmt::format("ground truth: missing column '{}'", kColumns[c]));
        col[c] = static_cast<std::size_t>(it - header.begin());
    }
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto f = split_csv(line);
        if (f.size() != header.size()) {
            ++gt.skipped_rows;
            continue;
        }
        const auto src = IpAddress::try_parse(f[col[0]]);
        const auto sport = to_port(f[col[1]]);
        const auto dst = IpAddress::try_parse(f[col[2]]);
        const auto dport = to_port(f[col[3]]);
        const auto proto = parse_protocol(f[col[4]]);
        const auto start = to_double(f[col[5]]);
        const auto end = to_double(f[col[6]]);
        if (!src || !sport || !dst || !dport || !proto || !start || !end || *end < *start) {
            ++gt.skipped_rows;
            continue;
        }
        gt.rows.push_back({{*src, *sport, *dst, *dport, *proto}, *start, *end, f[col[7]]});
    }
    return gt;
}

GroundTruth read_ground_truth_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read ground truth " + path);
    return read_ground_truth(f);
}

LabelStats apply_ground_truth(std::vector<LabeledSession>& sessions, const GroundTruth& truth) {
    std::unordered_map<FiveTuple, std::vector<const GroundTruthRow*>, FiveTupleHash> index;
    for (const auto& r : truth.rows) index[r.five_tuple].push_back(&r);

    LabelStats st;
    st.truth_rows = truth.rows.size();
    st.skipped_rows = truth.skipped_rows;
    for (auto& ls : sessions) {
        ++st.sessions;
        const auto& s = ls.session;
        const double s0 = static_cast<double>(s.timestamp_ms);
        const double s1 = s0 + s.duration_s * 1000.0;
        ls.label = ClassLabel::normal();
        auto it = index.find(s.five_tuple);
        if (it == index.end()) continue;
        for (const GroundTruthRow* r : it->second) {
            if (s0 <= r->end_time * 1000.0 + 1000.0 && s1 >= r->start_time * 1000.0 - 1000.0) {
                std::optional<std::string> cat;
                if (!r->attack_cat.empty()) cat = r->attack_cat;
                ls.label = ClassLabel::abnormal(std::move(cat));
                ++st.abnormal;
                break;
            }
        }
    }
    return st;
}

}  // namespace nids

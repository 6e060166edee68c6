#include "nids/normalization.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "nids/util.hpp"

namespace nids {

namespace {

constexpr double kPortMax = 65535.0;
constexpr double kHostCountMax = 100.0;

std::vector<std::string> with_unseen(std::set<std::string> seen) {
    std::vector<std::string> v(seen.begin(), seen.end());
    v.emplace_back(NormalizationSpec::kUnseen);
    return v;
}

std::size_t one_hot_index(const std::vector<std::string>& vocab, std::string_view value) {
    // vocab is sorted apart from the trailing unseen bucket.
    auto end = vocab.end() - 1;
    auto it = std::lower_bound(vocab.begin(), end, value,
                               [](const std::string& a, std::string_view b) { return a < b; });
    if (it != end && *it == value) return static_cast<std::size_t>(it - vocab.begin());
    return vocab.size() - 1;
}

double scale(double value, double max) {
    if (std::isnan(value)) return 0.0;
    const double v = value / max;
    if (v >= 1.0) return 1.0;
    if (v <= 0.0) return 0.0;
    return v;
}

}  // namespace

std::string_view to_string(NumericFeature f) {
    switch (f) {
        case NumericFeature::Duration: return "duration";
        case NumericFeature::SrcPort: return "source_port_number";
        case NumericFeature::DstPort: return "destination_port_number";
        case NumericFeature::SrcPackets: return "source_packets";
        case NumericFeature::SrcBytes: return "source_bytes";
        case NumericFeature::SrcIpBytes: return "source_ip_bytes";
        case NumericFeature::DstPackets: return "destination_packets";
        case NumericFeature::DstBytes: return "destination_bytes";
        case NumericFeature::DstIpBytes: return "destination_ip_bytes";
        case NumericFeature::DstHostCount: return "dst_host_count";
        case NumericFeature::DstHostSameSrcPortCount: return "dst_host_same_src_port_count";
        case NumericFeature::DstHostSerrorCount: return "dst_host_serror_count";
        case NumericFeature::DstHostSrvCount: return "dst_host_srv_count";
        case NumericFeature::DstHostSrvSerrorCount: return "dst_host_srv_serror_count";
    }
    return "?";
}

double numeric_value(const FullFeatureRecord& r, NumericFeature f) {
    const SessionRecord& s = r.session;
    switch (f) {
        case NumericFeature::Duration: return s.duration_s;
        case NumericFeature::SrcPort: return s.five_tuple.src_port;
        case NumericFeature::DstPort: return s.five_tuple.dst_port;
        case NumericFeature::SrcPackets: return static_cast<double>(s.src_packets);
        case NumericFeature::SrcBytes: return static_cast<double>(s.src_bytes);
        case NumericFeature::SrcIpBytes: return static_cast<double>(s.src_ip_bytes);
        case NumericFeature::DstPackets: return static_cast<double>(s.dst_packets);
        case NumericFeature::DstBytes: return static_cast<double>(s.dst_bytes);
        case NumericFeature::DstIpBytes: return static_cast<double>(s.dst_ip_bytes);
        case NumericFeature::DstHostCount: return r.host.dst_host_count;
        case NumericFeature::DstHostSameSrcPortCount: return r.host.dst_host_same_src_port_count;
        case NumericFeature::DstHostSerrorCount: return r.host.dst_host_serror_count;
        case NumericFeature::DstHostSrvCount: return r.host.dst_host_srv_count;
        case NumericFeature::DstHostSrvSerrorCount: return r.host.dst_host_srv_serror_count;
    }
    return 0.0;
}

bool has_fixed_maximum(NumericFeature f) {
    switch (f) {
        case NumericFeature::SrcPort:
        case NumericFeature::DstPort:
        case NumericFeature::DstHostCount:
        case NumericFeature::DstHostSameSrcPortCount:
        case NumericFeature::DstHostSerrorCount:
        case NumericFeature::DstHostSrvCount:
        case NumericFeature::DstHostSrvSerrorCount:
            return true;
        default:
            return false;
    }
}

std::size_t NormalizationSpec::dimension() const {
    return kNumericFeatureCount + protocols.size() + services.size() + conn_states.size() +
           directions.size();
}

std::vector<std::string> NormalizationSpec::layout() const {
    std::vector<std::string> names;
    names.reserve(dimension());
    for (std::size_t i = 0; i < kNumericFeatureCount; ++i) {
        names.emplace_back(to_string(static_cast<NumericFeature>(i)));
    }
    auto add = [&names](std::string_view group, const std::vector<std::string>& vocab) {
        for (const auto& v : vocab) names.push_back(std::string(group) + "=" + v);
    };
    add("protocol", protocols);
    add("service_type", services);
    add("connection_state", conn_states);
    add("direction", directions);
    return names;
}

nlohmann::ordered_json NormalizationSpec::to_json() const {
    nlohmann::ordered_json j;
    j["format"] = "nids-normalization";
    j["schema_version"] = schema_version;
    nlohmann::ordered_json m;
    for (std::size_t i = 0; i < kNumericFeatureCount; ++i) {
        m[std::string(to_string(static_cast<NumericFeature>(i)))] = maxima[i];
    }
    j["maxima"] = m;
    j["vocabularies"] = {{"protocol", protocols},
                         {"service_type", services},
                         {"connection_state", conn_states},
                         {"direction", directions}};
    j["layout"] = layout();
    return j;
}

std::string NormalizationSpec::fingerprint() const {
    return "spec-" + to_hex(fnv1a64(to_json().dump()));
}

NormalizationSpec NormalizationSpec::from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "nids-normalization") {
            throw ParseError("not a normalization document");
        }
        NormalizationSpec spec;
        spec.schema_version = j.at("schema_version").get<int>();
        if (spec.schema_version != kSchemaVersion) {
            throw ParseError("unsupported normalization schema version " +
                             std::to_string(spec.schema_version));
        }
        const auto& m = j.at("maxima");
        for (std::size_t i = 0; i < kNumericFeatureCount; ++i) {
            spec.maxima[i] = m.at(std::string(to_string(static_cast<NumericFeature>(i)))).get<double>();
            if (!(spec.maxima[i] > 0)) throw ParseError("normalization maximum must be > 0");
        }
        const auto& v = j.at("vocabularies");
        spec.protocols = v.at("protocol").get<std::vector<std::string>>();
        spec.services = v.at("service_type").get<std::vector<std::string>>();
        spec.conn_states = v.at("connection_state").get<std::vector<std::string>>();
        spec.directions = v.at("direction").get<std::vector<std::string>>();
        for (const auto* vocab : {&spec.protocols, &spec.services, &spec.conn_states, &spec.directions}) {
            if (vocab->empty() || vocab->back() != kUnseen) {
                throw ParseError("vocabulary must end with the unseen bucket");
            }
        }
        if (j.contains("layout") && j.at("layout").get<std::vector<std::string>>() != spec.layout()) {
            throw ParseError("normalization layout does not match its vocabularies");
        }
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("normalization document: ") + e.what());
    }
}

NormalizationSpec fit_normalization(std::span<const FullFeatureRecord> training) {
    if (training.empty()) throw Error("fit_normalization: empty training set");

    NormalizationSpec spec;
    std::set<std::string> protocols, services, states, directions;
    spec.maxima.fill(0.0);
    for (const auto& r : training) {
        for (std::size_t i = 0; i < kNumericFeatureCount; ++i) {
            const auto f = static_cast<NumericFeature>(i);
            if (!has_fixed_maximum(f)) spec.maxima[i] = std::max(spec.maxima[i], numeric_value(r, f));
        }
        protocols.emplace(to_string(r.session.five_tuple.protocol));
        services.insert(r.session.service.name());
        states.emplace(to_string(r.session.conn_state));
        directions.emplace(to_string(r.session.direction));
    }
    for (std::size_t i = 0; i < kNumericFeatureCount; ++i) {
        const auto f = static_cast<NumericFeature>(i);
        if (f == NumericFeature::SrcPort || f == NumericFeature::DstPort) {
            spec.maxima[i] = kPortMax;
        } else if (has_fixed_maximum(f)) {
            spec.maxima[i] = kHostCountMax;
        } else if (!(spec.maxima[i] > 0)) {
            spec.maxima[i] = 1.0;
        }
    }
    spec.protocols = with_unseen(std::move(protocols));
    spec.services = with_unseen(std::move(services));
    spec.conn_states = with_unseen(std::move(states));
    spec.directions = with_unseen(std::move(directions));
    return spec;
}

void strip_and_encode(const FullFeatureRecord& r, const NormalizationSpec& spec, std::span<double> out) {
    if (out.size() != spec.dimension()) throw Error("strip_and_encode: output span has wrong size");
    std::fill(out.begin(), out.end(), 0.0);
    std::size_t pos = 0;
    for (; pos < kNumericFeatureCount; ++pos) {
        out[pos] = scale(numeric_value(r, static_cast<NumericFeature>(pos)), spec.maxima[pos]);
    }
    auto hot = [&](const std::vector<std::string>& vocab, std::string_view value) {
        out[pos + one_hot_index(vocab, value)] = 1.0;
        pos += vocab.size();
    };
    hot(spec.protocols, to_string(r.session.five_tuple.protocol));
    hot(spec.services, r.session.service.name());
    hot(spec.conn_states, to_string(r.session.conn_state));
    hot(spec.directions, to_string(r.session.direction));
}

std::vector<double> strip_and_encode(const FullFeatureRecord& r, const NormalizationSpec& spec) {
    std::vector<double> v(spec.dimension());
    strip_and_encode(r, spec, v);
    return v;
}

NormalizationSpec load_normalization_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open normalization file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("normalization file '" + path + "': " + e.what());
    }
    return NormalizationSpec::from_json(j);
}

void save_normalization_file(const NormalizationSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write normalization file '" + path + "'");
    out << spec.to_json().dump(2) << '\n';
}

}  // namespace nids

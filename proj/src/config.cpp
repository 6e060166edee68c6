#include "nids/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace nids {

void RunConfig::validate() const {
    pipeline.validate();
    assembler.validate();
    if (bench.runs < 1) throw ConfigError("bench.runs must be >= 1");
    if (!(bench.throughput_interval_s > 0) || !(bench.latency_interval_s > 0)) {
        throw ConfigError("bench intervals must be > 0");
    }
}

namespace {

void check_keys(const YAML::Node& node, const std::string& where, std::set<std::string> allowed) {
    if (!node.IsMap()) throw ConfigError(fmt::format("{} must be a mapping", where.empty() ? "config" : where));
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.count(key)) {
            throw ConfigError(fmt::format("unknown config key '{}{}'", where.empty() ? "" : where + ".", key));
        }
    }
}

template <typename T>
void read(const YAML::Node& node, const char* key, const std::string& where, T& out) {
    if (!node[key]) return;
    try {
        out = node[key].as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(fmt::format("config key '{}.{}' has the wrong type", where, key));
    }
}

}  // namespace

RunConfig parse_config(const std::string& yaml_text) {
    RunConfig c;
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config is not valid YAML: ") + e.what());
    }
    if (root.IsNull()) return c;
    check_keys(root, "", {"seed", "pipeline", "assembler", "bench"});
    read(root, "seed", "", c.seed);

    if (const auto p = root["pipeline"]) {
        check_keys(p, "pipeline",
                   {"queue_capacity", "classifier_workers", "sink", "sink_path", "replay_rate", "window_capacity",
                    "window_include_current", "on_classifier_error", "sink_retries"});
        auto& pc = c.pipeline;
        read(p, "queue_capacity", "pipeline", pc.queue_capacity);
        read(p, "classifier_workers", "pipeline", pc.classifier_worker_count);
        read(p, "sink_path", "pipeline", pc.sink_path);
        read(p, "window_capacity", "pipeline", pc.window_capacity);
        read(p, "window_include_current", "pipeline", pc.window_include_current);
        read(p, "sink_retries", "pipeline", pc.sink_retries);
        if (p["sink"]) {
            std::string s;
            read(p, "sink", "pipeline", s);
            auto k = parse_sink_kind(s);
            if (!k) throw ConfigError(fmt::format("pipeline.sink: unknown sink '{}'", s));
            pc.sink = *k;
        }
        if (p["replay_rate"]) {
            std::string s;
            read(p, "replay_rate", "pipeline", s);
            if (s == "unlimited") {
                pc.replay_rate.reset();
            } else {
                double r = 0;
                read(p, "replay_rate", "pipeline", r);
                pc.replay_rate = r;
            }
        }
        if (p["on_classifier_error"]) {
            std::string s;
            read(p, "on_classifier_error", "pipeline", s);
            if (s == "fail-open") pc.on_classifier_error = ClassifierFailurePolicy::FailOpen;
            else if (s == "fail-closed") pc.on_classifier_error = ClassifierFailurePolicy::FailClosed;
            else throw ConfigError("pipeline.on_classifier_error must be fail-open or fail-closed");
        }
    }

    if (const auto a = root["assembler"]) {
        check_keys(a, "assembler",
                   {"tcp_timeout_s", "udp_timeout_s", "icmp_timeout_s", "reorder_tolerance_s", "local_prefixes",
                    "services"});
        auto& ac = c.assembler;
        read(a, "tcp_timeout_s", "assembler", ac.tcp_inactivity_timeout_s);
        read(a, "udp_timeout_s", "assembler", ac.udp_inactivity_timeout_s);
        read(a, "icmp_timeout_s", "assembler", ac.icmp_inactivity_timeout_s);
        read(a, "reorder_tolerance_s", "assembler", ac.reorder_tolerance_s);
        read(a, "local_prefixes", "assembler", ac.local_prefixes);
        if (const auto s = a["services"]) {
            if (!s.IsSequence()) throw ConfigError("assembler.services must be a list");
            for (const auto& e : s) {
                check_keys(e, "assembler.services[]", {"port", "protocol", "service"});
                int port = -1;
                std::string proto, name;
                read(e, "port", "assembler.services[]", port);
                read(e, "protocol", "assembler.services[]", proto);
                read(e, "service", "assembler.services[]", name);
                const auto pr = parse_protocol(proto);
                if (port < 0 || port > 65535 || !pr || name.empty()) {
                    throw ConfigError("assembler.services entries need port, protocol and service");
                }
                ac.services.set(static_cast<std::uint16_t>(port), *pr, ServiceType(name));
            }
        }
    }

    if (const auto b = root["bench"]) {
        check_keys(b, "bench", {"runs", "throughput_interval_s", "latency_interval_s"});
        read(b, "runs", "bench", c.bench.runs);
        read(b, "throughput_interval_s", "bench", c.bench.throughput_interval_s);
        read(b, "latency_interval_s", "bench", c.bench.latency_interval_s);
    }
    c.validate();
    return c;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string to_yaml(const RunConfig& c) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    out << YAML::Key << "seed" << YAML::Value << c.seed;
    out << YAML::Key << "pipeline" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "queue_capacity" << YAML::Value << c.pipeline.queue_capacity;
    out << YAML::Key << "classifier_workers" << YAML::Value << c.pipeline.classifier_worker_count;
    out << YAML::Key << "sink" << YAML::Value << std::string(to_string(c.pipeline.sink));
    out << YAML::Key << "sink_path" << YAML::Value << c.pipeline.sink_path;
    out << YAML::Key << "replay_rate" << YAML::Value;
    if (c.pipeline.replay_rate) out << *c.pipeline.replay_rate;
    else out << "unlimited";
    out << YAML::Key << "window_capacity" << YAML::Value << c.pipeline.window_capacity;
    out << YAML::Key << "window_include_current" << YAML::Value << c.pipeline.window_include_current;
    out << YAML::Key << "on_classifier_error" << YAML::Value
        << (c.pipeline.on_classifier_error == ClassifierFailurePolicy::FailOpen ? "fail-open" : "fail-closed");
    out << YAML::Key << "sink_retries" << YAML::Value << c.pipeline.sink_retries;
    out << YAML::EndMap;

    out << YAML::Key << "assembler" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "tcp_timeout_s" << YAML::Value << c.assembler.tcp_inactivity_timeout_s;
    out << YAML::Key << "udp_timeout_s" << YAML::Value << c.assembler.udp_inactivity_timeout_s;
    out << YAML::Key << "icmp_timeout_s" << YAML::Value << c.assembler.icmp_inactivity_timeout_s;
    out << YAML::Key << "reorder_tolerance_s" << YAML::Value << c.assembler.reorder_tolerance_s;
    out << YAML::Key << "local_prefixes" << YAML::Value << c.assembler.local_prefixes;
    out << YAML::Key << "services" << YAML::Value << YAML::BeginSeq;
    for (const auto& [port, proto, svc] : c.assembler.services.entries()) {
        out << YAML::Flow << YAML::BeginMap << YAML::Key << "port" << YAML::Value << port << YAML::Key << "protocol"
            << YAML::Value << std::string(to_string(proto)) << YAML::Key << "service" << YAML::Value << svc.name()
            << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;

    out << YAML::Key << "bench" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "runs" << YAML::Value << c.bench.runs;
    out << YAML::Key << "throughput_interval_s" << YAML::Value << c.bench.throughput_interval_s;
    out << YAML::Key << "latency_interval_s" << YAML::Value << c.bench.latency_interval_s;
    out << YAML::EndMap << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

}  // namespace nids

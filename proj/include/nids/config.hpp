#pragma once

// Run configuration, read from one YAML document. Omitted keys keep their
// defaults; unknown keys are rejected.

#include <cstdint>
#include <string>

#include "nids/flow_assembler.hpp"
#include "nids/pipeline.hpp"

namespace nids {

struct BenchConfig {
    std::size_t runs = 3;
    double throughput_interval_s = 30.0;
    double latency_interval_s = 10.0;
};

struct RunConfig {
    std::uint64_t seed = 1;
    PipelineConfig pipeline;
    AssemblerConfig assembler;
    BenchConfig bench;

    void validate() const;
};

/// Throws ConfigError with the offending key.
RunConfig parse_config(const std::string& yaml_text);
RunConfig load_config_file(const std::string& path);

/// Fully resolved configuration as YAML; parse_config(to_yaml(c)) == c.
std::string to_yaml(const RunConfig& config);

}  // namespace nids

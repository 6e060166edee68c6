#pragma once

// Seeded synthetic traffic: labeled sessions with normal client/server
// traffic and bursts of scans, floods, exploits and fuzzing, plus feature-space
// fixtures with a known separating rule.

#include <cstdint>
#include <vector>

#include "nids/dataset.hpp"
#include "nids/session_log.hpp"

namespace nids {

struct SynthConfig {
    std::size_t sessions = 10000;
    double abnormal_fraction = 0.1;
    /// Probability that a session borrows the other class's traffic shape.
    double overlap = 0.1;
    std::size_t destinations = 20;
    std::size_t clients = 200;
    double sessions_per_s = 500.0;  // spacing of start timestamps
    std::int64_t start_ms = 1421884800000;
    std::uint64_t seed = 1;
};

/// Sessions in nondecreasing timestamp order with ids 1..n, every one labeled.
std::vector<LabeledSession> synth_sessions(const SynthConfig& config);

/// dim-dimensional points in [0, 1]. Feature 0 alone decides the class:
/// normal ~ N(0.25, sigma), abnormal ~ N(0.75, sigma); the other features are
/// uniform noise. Requires 0.5 >= 10 sigma for the stated margin.
Dataset synth_separable(std::size_t per_class, std::size_t dim, double sigma, std::uint64_t seed);

}  // namespace nids

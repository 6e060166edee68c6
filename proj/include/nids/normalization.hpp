#pragma once

// Preprocessing that turns a FullFeatureRecord into a classifier-ready vector:
// the timestamp and both IP addresses are dropped, numeric features are
// divided by a fixed or training-derived maximum and clamped to [0, 1], and
// categorical features are one-hot encoded.

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "nids/host_window.hpp"

namespace nids {

enum class NumericFeature : std::uint8_t {
    Duration,
    SrcPort,
    DstPort,
    SrcPackets,
    SrcBytes,
    SrcIpBytes,
    DstPackets,
    DstBytes,
    DstIpBytes,
    DstHostCount,
    DstHostSameSrcPortCount,
    DstHostSerrorCount,
    DstHostSrvCount,
    DstHostSrvSerrorCount,
};

inline constexpr std::size_t kNumericFeatureCount = 14;

std::string_view to_string(NumericFeature f);
double numeric_value(const FullFeatureRecord& r, NumericFeature f);

/// True for features normalized by a fixed maximum (ports, host counts)
/// rather than the training maximum.
bool has_fixed_maximum(NumericFeature f);

/// Fitted scaling and vocabulary metadata. Immutable once fitted.
struct NormalizationSpec {
    static constexpr int kSchemaVersion = 1;
    /// Vocabulary bucket for categorical values unseen during fitting.
    static constexpr std::string_view kUnseen = "<other>";

    int schema_version = kSchemaVersion;
    std::array<double, kNumericFeatureCount> maxima{};
    std::vector<std::string> protocols;
    std::vector<std::string> services;
    std::vector<std::string> conn_states;
    std::vector<std::string> directions;

    std::size_t dimension() const;
    /// Component names in output order.
    std::vector<std::string> layout() const;

    /// Stable content hash; models record it as their spec_version.
    std::string fingerprint() const;

    nlohmann::ordered_json to_json() const;
    /// Throws ParseError on schema mismatch or broken invariants.
    static NormalizationSpec from_json(const nlohmann::json& j);

    bool operator==(const NormalizationSpec&) const = default;
};

/// Throws Error on an empty training set.
NormalizationSpec fit_normalization(std::span<const FullFeatureRecord> training);

/// Writes spec.dimension() components into out.
void strip_and_encode(const FullFeatureRecord& record, const NormalizationSpec& spec,
                      std::span<double> out);
std::vector<double> strip_and_encode(const FullFeatureRecord& record, const NormalizationSpec& spec);

NormalizationSpec load_normalization_file(const std::string& path);
void save_normalization_file(const NormalizationSpec& spec, const std::string& path);

}  // namespace nids

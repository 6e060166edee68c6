#pragma once

// Turning labeled session logs into classifier datasets.

#include <vector>

#include "nids/dataset.hpp"
#include "nids/normalization.hpp"
#include "nids/session_log.hpp"

namespace nids {

/// Runs the host window over sessions in the given order.
std::vector<FullFeatureRecord> extract_host_features(std::span<const SessionRecord> sessions,
                                                     std::size_t window_capacity = HostWindow::kDefaultCapacity,
                                                     bool include_current = false);

Dataset encode_dataset(std::span<const FullFeatureRecord> records, std::span<const Label> labels,
                       const NormalizationSpec& spec);

struct PreparedData {
    std::vector<FullFeatureRecord> records;
    NormalizationSpec spec;
    Dataset data;  // every session, in stream order
};

/// Extracts host features, fits normalization and encodes. Throws Error when
/// a session has no label.
PreparedData prepare_training(const std::vector<LabeledSession>& sessions,
                              std::size_t window_capacity = HostWindow::kDefaultCapacity,
                              bool include_current = false);

std::vector<SessionRecord> sessions_of(const std::vector<LabeledSession>& labeled);

}  // namespace nids

#pragma once

#include <span>
#include <string>
#include <vector>

#include "nids/core_model.hpp"

namespace nids {

/// Kernels that have an OpenMP path also keep a serial reference path.
enum class Exec { Serial, Parallel };

/// Encoded vectors (row-major, uniform dimension) with binary labels.
struct Dataset {
    std::size_t dim = 0;
    std::vector<double> values;
    std::vector<Label> labels;
    std::string spec_version;

    Dataset() = default;
    explicit Dataset(std::size_t dimension, std::string spec = {})
        : dim(dimension), spec_version(std::move(spec)) {}

    std::size_t size() const { return labels.size(); }
    bool empty() const { return labels.empty(); }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }

    /// Throws Error on dimension mismatch.
    void add(std::span<const double> row, Label label);

    std::size_t count(Label l) const;
    Dataset subset(std::span<const std::size_t> indices) const;

    /// Throws Error when empty, ragged, or non-finite.
    void validate() const;
};

struct Prediction {
    Label label = Label::Normal;
    double score = 0.0;  // confidence for abnormal, in [0, 1]

    bool operator==(const Prediction&) const = default;
};

/// The single tie rule shared by every classifier: abnormal iff score > 0.5.
inline Prediction from_score(double score) {
    return {score > 0.5 ? Label::Abnormal : Label::Normal, score};
}

inline int label_index(Label l) { return l == Label::Abnormal ? 1 : 0; }

}  // namespace nids

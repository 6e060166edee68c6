#pragma once

// Naive Bayes with either Gaussian per-feature likelihoods or supervised
// (Fayyad-Irani MDL) discretization into bins with Laplace smoothing.

#include <array>
#include <vector>

#include "json.hpp"
#include "nids/dataset.hpp"

namespace nids {

struct NBParams {
    bool supervised_discretization_d = false;

    bool operator==(const NBParams&) const = default;
};

inline constexpr double kNbVarianceFloor = 1e-9;

struct NaiveBayesModel {
    struct Gaussian {
        std::array<double, 2> mean{};
        std::array<double, 2> variance{};
        bool operator==(const Gaussian&) const = default;
    };
    struct Bins {
        std::vector<double> cuts;  // ascending; x <= cuts[b] falls in bin b
        std::array<std::vector<double>, 2> counts;  // per class, cuts.size() + 1 bins
        bool operator==(const Bins&) const = default;
    };

    NBParams params;
    std::array<double, 2> class_counts{};
    std::vector<Gaussian> gaussians;  // Gaussian mode
    std::vector<Bins> bins;           // discretized mode

    std::size_t dim() const;
    static std::size_t bin_of(const std::vector<double>& cuts, double x);

    /// log P(c) + sum_f log p(x_f | c), per class index (0 normal, 1 abnormal).
    std::array<double, 2> log_joint(std::span<const double> x) const;
    std::array<double, 2> log_posterior(std::span<const double> x) const;
    Prediction predict(std::span<const double> x) const;

    nlohmann::json to_json() const;
    static NaiveBayesModel from_json(const nlohmann::json& j);
    bool operator==(const NaiveBayesModel&) const = default;
};

NaiveBayesModel train_naive_bayes(const Dataset& data, const NBParams& params);

/// Recursive minimum-entropy binary cuts with the MDL stopping rule, over
/// (value, class index) pairs.
std::vector<double> mdl_cuts(std::vector<std::pair<double, int>> points);

}  // namespace nids

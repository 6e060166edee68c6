#pragma once

// Brute-force k-nearest-neighbour classifier over Euclidean distance.

#include <vector>

#include "json.hpp"
#include "nids/dataset.hpp"

namespace nids {

struct KNNParams {
    std::size_t neighbors_k = 1;
    bool inverse_distance_weighting_i = false;

    void validate() const;
    bool operator==(const KNNParams&) const = default;
};

inline constexpr double kKnnDistanceEpsilon = 1e-12;

struct Neighbor {
    double distance = 0.0;
    std::size_t index = 0;

    auto operator<=>(const Neighbor&) const = default;
};

struct KNNModel {
    KNNParams params;
    Dataset data;

    /// k nearest rows ordered by (distance, index). The parallel path splits
    /// the distance scan across threads; both paths return the same list.
    std::vector<Neighbor> neighbors(std::span<const double> x, Exec exec = Exec::Serial) const;

    /// Abnormal fraction of the neighbours, weighted by 1/(d + 1e-12) when
    /// inverse-distance weighting is on.
    Prediction predict(std::span<const double> x, Exec exec = Exec::Serial) const;

    nlohmann::json to_json() const;
    static KNNModel from_json(const nlohmann::json& j, std::size_t dim);
};

double euclidean(std::span<const double> a, std::span<const double> b);

/// Throws Error when the data is empty or k exceeds its size.
KNNModel train_knn(const Dataset& data, const KNNParams& params);

}  // namespace nids

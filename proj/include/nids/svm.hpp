#pragma once

// Soft-margin C-SVC trained by SMO with second-order working-set selection.
// Labels map to -1 (normal) and +1 (abnormal).

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "nids/dataset.hpp"

namespace nids {

enum class KernelType : int { Linear = 0, Polynomial = 1, Rbf = 2, Sigmoid = 3 };

struct SVMParams {
    int kernel_k = 2;
    int degree_d = 3;
    double complexity_c = 1.0;
    double smo_tolerance = 1e-3;
    std::uint64_t rng_seed = 1;
    std::size_t max_passes = 10000;  // iteration cap is max_passes * n
    std::size_t cache_mb = 200;

    void validate() const;
    bool operator==(const SVMParams&) const = default;
};

/// Kernel evaluation; gamma is 1/d for RBF and sigmoid.
/// Polynomial: (x.y + 1)^degree; sigmoid: tanh(gamma x.y).
struct Kernel {
    KernelType type = KernelType::Rbf;
    int degree = 3;
    double gamma = 1.0;

    double operator()(std::span<const double> a, std::span<const double> b) const;
};

struct SVMModel {
    SVMParams params;
    Kernel kernel;
    std::size_t dim = 0;
    std::vector<double> support_vectors;  // row-major, dim columns
    std::vector<double> coef;             // alpha_i * y_i
    double rho = 0.0;
    bool converged = true;
    std::uint64_t iterations = 0;

    std::size_t support_count() const { return coef.size(); }
    std::span<const double> support_vector(std::size_t i) const {
        return {support_vectors.data() + i * dim, dim};
    }

    /// sum_i coef_i K(sv_i, x) - rho.
    double decision_value(std::span<const double> x) const;
    /// Score is the logistic of the decision value.
    Prediction predict(std::span<const double> x) const;

    nlohmann::json to_json() const;
    static SVMModel from_json(const nlohmann::json& j);
};

/// Throws Error when only one class is present.
SVMModel train_svm(const Dataset& data, const SVMParams& params);

}  // namespace nids

#pragma once

// The five classifiers behind one interface, plus the versioned model file.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "nids/decision_tree.hpp"
#include "nids/knn.hpp"
#include "nids/naive_bayes.hpp"
#include "nids/svm.hpp"

namespace nids {

enum class Algorithm : std::uint8_t { DT, RF, NB, SVM, KNN };

inline constexpr std::array kAllAlgorithms{Algorithm::DT, Algorithm::RF, Algorithm::NB, Algorithm::SVM,
                                           Algorithm::KNN};

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view s);  // "dt", "rf", "nb", "svm", "knn"

/// Grid-level parameters keyed by their table letter, in table order:
/// DT {C, M}; RF {I, N, V}; NB {D}; SVM {K, D, C}; kNN {K, I}. Flags are 0/1.
using ParamPoint = std::vector<std::pair<std::string, double>>;

std::vector<std::string> param_names(Algorithm a);
ParamPoint default_params(Algorithm a);
/// Fills omitted letters from the defaults; throws ConfigError on unknown letters.
ParamPoint complete_params(Algorithm a, const ParamPoint& given);
nlohmann::json params_to_json(const ParamPoint& p);
ParamPoint params_from_json(const nlohmann::json& j);
std::string params_to_string(const ParamPoint& p);

using ModelVariant = std::variant<DecisionTreeModel, RandomForestModel, NaiveBayesModel, SVMModel, KNNModel>;

struct TrainedModel {
    Algorithm algorithm = Algorithm::DT;
    ParamPoint params;
    std::string spec_version;
    std::size_t dim = 0;
    ModelVariant model;

    /// Throws Error on dimension mismatch.
    Prediction predict(std::span<const double> x) const;
    /// Training-time warnings, e.g. SVM convergence.
    std::vector<std::string> warnings() const;
};

/// Seeds for the randomized trainers come from derive_seed(seed, "bootstrap").
TrainedModel train_model(Algorithm algo, const Dataset& data, const ParamPoint& params, std::uint64_t seed,
                         Exec exec = Exec::Parallel);

/// Predictions for every row; the parallel path splits rows across threads.
std::vector<Prediction> predict_batch(const TrainedModel& model, const Dataset& data,
                                      Exec exec = Exec::Parallel);

inline constexpr std::string_view kModelFormat = "nids-model";
inline constexpr int kModelFormatVersion = 1;

std::string save_model(const TrainedModel& model);
/// Throws ParseError on corrupt input or unknown version, ConfigError when
/// expected_spec_version is given and differs.
TrainedModel load_model(std::string_view bytes, const std::optional<std::string>& expected_spec_version = {});

void save_model_file(const TrainedModel& model, const std::string& path);
TrainedModel load_model_file(const std::string& path,
                             const std::optional<std::string>& expected_spec_version = {});

}  // namespace nids

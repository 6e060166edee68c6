#pragma once

// Class balancing, parameter grids, grid search and F1 evaluation.

#include <string>
#include <vector>

#include "json.hpp"
#include "nids/model.hpp"

namespace nids {

struct GridParam {
    std::string name;
    double first = 0.0;
    double last = 0.0;
    std::size_t count = 1;
    bool integer = false;

    bool operator==(const GridParam&) const = default;
};

struct GridSpec {
    Algorithm algorithm = Algorithm::DT;
    std::vector<GridParam> params;

    void validate() const;
    std::size_t size() const;  // number of grid points after integer dedup
    nlohmann::json to_json() const;
    static GridSpec from_json(const nlohmann::json& j);
};

/// count evenly spaced values from first to last inclusive. Real values are
/// rounded to 15 significant digits so lattice points such as 0.47 are the
/// same double as the literal; integer values are rounded and deduplicated.
std::vector<double> expand(const GridParam& p);

/// Cartesian product, row-major in parameter order (last parameter fastest).
std::vector<ParamPoint> make_grid(const GridSpec& spec);

/// Default search ranges. Flags without a range search {0, 1}.
GridSpec default_grid(Algorithm a);
/// Reference hyperparameters; every default grid contains them.
ParamPoint reference_params(Algorithm a);

struct EvalMetrics {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0;

    static EvalMetrics from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);
    nlohmann::json to_json() const;
};

/// Abnormal is the positive class. Throws Error on empty or mismatched input.
EvalMetrics evaluate(const std::vector<Label>& predictions, const std::vector<Label>& truth);
EvalMetrics evaluate(const std::vector<Prediction>& predictions, const std::vector<Label>& truth);

/// Majority class subsampled without replacement to the minority count, then
/// the union shuffled. Throws Error when a class is missing.
Dataset downsample(const Dataset& data, std::uint64_t seed);

/// Per-class seeded split; train_fraction of each class goes to the first set.
std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double train_fraction, std::uint64_t seed);

struct GridPointResult {
    ParamPoint params;
    EvalMetrics metrics;
};

struct SearchResult {
    Algorithm algorithm = Algorithm::DT;
    std::vector<GridPointResult> table;  // grid order
    std::size_t best_index = 0;
    std::string protocol;

    const ParamPoint& best_params() const { return table.at(best_index).params; }
    double best_f1() const { return table.at(best_index).metrics.f1; }

    std::string to_csv() const;
    nlohmann::json summary_json() const;
};

/// Trains one model per grid point and scores F1 on validation. Ties keep the
/// earliest grid point. The parallel path distributes grid points across
/// threads and yields the same table as the serial path.
SearchResult grid_search(const GridSpec& grid, const Dataset& train, const Dataset& validation,
                         std::uint64_t seed, Exec exec = Exec::Parallel);

}  // namespace nids

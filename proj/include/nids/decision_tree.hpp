#pragma once

// C4.5-style decision trees and a random forest built from the same grower.

#include <array>
#include <cstdint>
#include <vector>

#include "json.hpp"
#include "nids/dataset.hpp"

namespace nids {

struct DTParams {
    double confidence_c = 0.25;    // pruning confidence, (0, 1); higher prunes less
    std::size_t min_instances_m = 2;
    bool unpruned = false;

    void validate() const;
    bool operator==(const DTParams&) const = default;
};

struct RFParams {
    std::size_t tree_count_i = 100;
    std::size_t min_leaf_n = 1;     // searched over the grid's N column
    double min_variance_v = 1.0e-3;
    std::size_t features_per_split = 0;  // 0 means ceil(sqrt(d))
    std::uint64_t rng_seed = 1;
    bool bootstrap = true;

    void validate() const;
    bool operator==(const RFParams&) const = default;
};

/// Flat binary tree. A node is a leaf when feature < 0; otherwise rows with
/// x[feature] <= threshold go left.
struct DecisionTree {
    struct Node {
        std::int32_t feature = -1;
        double threshold = 0.0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::array<double, 2> counts{};  // training rows per class reaching the node

        bool is_leaf() const { return feature < 0; }
        bool operator==(const Node&) const = default;
    };

    /// Inference copy: 16-byte nodes, siblings adjacent. A leaf has
    /// feature < 0 and value = abnormal fraction; otherwise value is the
    /// threshold and the children sit at left and left + 1.
    struct FlatNode {
        double value;
        std::int32_t feature;
        std::int32_t left;
    };

    std::vector<Node> nodes;  // nodes[0] is the root
    std::vector<FlatNode> flat;

    const Node& leaf_for(std::span<const double> x) const;
    std::size_t depth() const;
    std::size_t leaf_count() const;

    /// Rebuilds flat from nodes; trainers and from_json call it.
    void compile();
    /// Abnormal fraction of the leaf reached by x.
    double score(std::span<const double> x) const {
        const FlatNode* n = flat.data();
        while (n->feature >= 0) {
            n = flat.data() + n->left + (x[static_cast<std::size_t>(n->feature)] <= n->value ? 0 : 1);
        }
        return n->value;
    }

    nlohmann::json to_json() const;
    static DecisionTree from_json(const nlohmann::json& j);
    bool operator==(const DecisionTree& o) const { return nodes == o.nodes; }
};

struct DecisionTreeModel {
    DTParams params;
    DecisionTree tree;

    /// Leaf abnormal fraction.
    Prediction predict(std::span<const double> x) const;
};

struct RandomForestModel {
    RFParams params;
    std::vector<DecisionTree> trees;

    /// Fraction of trees voting abnormal.
    Prediction predict(std::span<const double> x) const;
};

DecisionTreeModel train_decision_tree(const Dataset& data, const DTParams& params);

/// Trees are independent: tree t draws from its own stream seeded by
/// rng_seed + t, so the parallel and serial paths build identical forests.
RandomForestModel train_random_forest(const Dataset& data, const RFParams& params,
                                      Exec exec = Exec::Parallel);

/// Accuracy over rows that at least one tree left out of its bootstrap
/// sample, voting only those trees. data must be the training set. NaN when
/// no row is out of bag (e.g. bootstrap disabled).
double out_of_bag_accuracy(const RandomForestModel& model, const Dataset& data);

/// Extra pessimistic errors for a leaf with n rows and e misclassified at
/// confidence cf (upper confidence limit of the binomial, normal approx.).
double pessimistic_extra_errors(double n, double e, double cf);

}  // namespace nids

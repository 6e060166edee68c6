#include "nids/decision_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "nids/util.hpp"

namespace nids {

void DTParams::validate() const {
    if (!(confidence_c > 0.0 && confidence_c < 1.0)) throw Error("DT: C must be in (0, 1)");
    if (min_instances_m < 1) throw Error("DT: M must be >= 1");
}

void RFParams::validate() const {
    if (tree_count_i < 1) throw Error("RF: I must be >= 1");
    if (min_leaf_n < 1) throw Error("RF: N must be >= 1");
    if (!(min_variance_v > 0.0)) throw Error("RF: V must be > 0");
}

namespace {

constexpr double kGainEpsilon = 1e-12;

double entropy(double a, double b) {
    const double n = a + b;
    if (n <= 0) return 0.0;
    double h = 0.0;
    if (a > 0) h -= a / n * std::log2(a / n);
    if (b > 0) h -= b / n * std::log2(b / n);
    return h;
}

struct Candidate {
    std::int32_t feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    double ratio = 0.0;
};

struct GrowConfig {
    std::size_t min_leaf = 1;
    std::size_t features_per_split = 0;
    double min_variance = -1.0;  // < 0 disables the variance filter
    Rng* rng = nullptr;          // null: evaluate every feature in order
};

class Grower {
public:
    Grower(const Dataset& data, GrowConfig cfg) : data_(data), cfg_(cfg) {}

    DecisionTree grow(std::vector<std::size_t> rows) {
        build(rows);
        return std::move(tree_);
    }

private:
    // Best threshold on one feature by information gain; gain <= 0 if none.
    Candidate best_on_feature(const std::vector<std::size_t>& rows, std::int32_t f,
                              const std::array<double, 2>& total) {
        pairs_.clear();
        for (std::size_t r : rows) {
            pairs_.emplace_back(data_.row(r)[static_cast<std::size_t>(f)], label_index(data_.labels[r]));
        }
        std::sort(pairs_.begin(), pairs_.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        const double n = static_cast<double>(rows.size());
        const double base = entropy(total[0], total[1]);
        Candidate best;
        best.feature = f;
        best.gain = 0.0;
        std::array<double, 2> left{};
        for (std::size_t i = 0; i + 1 < pairs_.size(); ++i) {
            left[static_cast<std::size_t>(pairs_[i].second)] += 1.0;
            if (pairs_[i].first == pairs_[i + 1].first) continue;
            const double nl = static_cast<double>(i + 1);
            const double nr = n - nl;
            if (nl < static_cast<double>(cfg_.min_leaf) || nr < static_cast<double>(cfg_.min_leaf)) {
                continue;
            }
            const double hl = entropy(left[0], left[1]);
            const double hr = entropy(total[0] - left[0], total[1] - left[1]);
            const double gain = base - (nl / n * hl + nr / n * hr);
            if (gain > best.gain + kGainEpsilon) {
                const double lo = pairs_[i].first;
                const double hi = pairs_[i + 1].first;
                double t = lo + (hi - lo) / 2.0;
                if (!(t < hi)) t = lo;
                best.threshold = t;
                best.gain = gain;
                best.ratio = gain / entropy(nl, nr);
            }
        }
        return best;
    }

    double variance(const std::vector<std::size_t>& rows, std::int32_t f) const {
        double mean = 0.0;
        for (std::size_t r : rows) mean += data_.row(r)[static_cast<std::size_t>(f)];
        mean /= static_cast<double>(rows.size());
        double ss = 0.0;
        for (std::size_t r : rows) {
            const double d = data_.row(r)[static_cast<std::size_t>(f)] - mean;
            ss += d * d;
        }
        return ss / static_cast<double>(rows.size());
    }

    std::optional<Candidate> choose_split(const std::vector<std::size_t>& rows,
                                          const std::array<double, 2>& total) {
        const auto d = static_cast<std::int32_t>(data_.dim);
        std::vector<std::int32_t> order(static_cast<std::size_t>(d));
        std::iota(order.begin(), order.end(), 0);
        if (cfg_.rng) stable_shuffle(order.begin(), order.end(), *cfg_.rng);

        std::vector<Candidate> found;
        std::size_t tried = 0;
        for (std::int32_t f : order) {
            if (cfg_.rng && tried >= cfg_.features_per_split && !found.empty()) break;
            ++tried;
            if (cfg_.min_variance >= 0.0 && variance(rows, f) < cfg_.min_variance) continue;
            Candidate c = best_on_feature(rows, f, total);
            if (c.gain > kGainEpsilon) found.push_back(c);
        }
        if (found.empty()) return std::nullopt;

        // Highest gain ratio among splits with at least average gain.
        std::sort(found.begin(), found.end(),
                  [](const Candidate& a, const Candidate& b) { return a.feature < b.feature; });
        double avg = 0.0;
        for (const auto& c : found) avg += c.gain;
        avg /= static_cast<double>(found.size());
        const Candidate* best = nullptr;
        for (const auto& c : found) {
            if (c.gain + kGainEpsilon < avg) continue;
            if (!best || c.ratio > best->ratio) best = &c;
        }
        return *best;
    }

    std::int32_t build(const std::vector<std::size_t>& rows) {
        const auto id = static_cast<std::int32_t>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        std::array<double, 2> total{};
        for (std::size_t r : rows) total[static_cast<std::size_t>(label_index(data_.labels[r]))] += 1.0;
        tree_.nodes[static_cast<std::size_t>(id)].counts = total;

        const bool pure = total[0] == 0.0 || total[1] == 0.0;
        if (pure || rows.size() < 2 * cfg_.min_leaf) return id;
        auto split = choose_split(rows, total);
        if (!split) return id;

        std::vector<std::size_t> left, right;
        for (std::size_t r : rows) {
            (data_.row(r)[static_cast<std::size_t>(split->feature)] <= split->threshold ? left : right)
                .push_back(r);
        }
        const std::int32_t l = build(left);
        const std::int32_t rr = build(right);
        auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.feature = split->feature;
        node.threshold = split->threshold;
        node.left = l;
        node.right = rr;
        return id;
    }

    const Dataset& data_;
    GrowConfig cfg_;
    DecisionTree tree_;
    std::vector<std::pair<double, int>> pairs_;
};

double prune_node(DecisionTree& tree, std::int32_t id, double cf) {
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    const double n = node.counts[0] + node.counts[1];
    const double e = n - std::max(node.counts[0], node.counts[1]);
    const double as_leaf = e + pessimistic_extra_errors(n, e, cf);
    if (node.is_leaf()) return as_leaf;
    const std::int32_t l = node.left;
    const std::int32_t r = node.right;
    const double subtree = prune_node(tree, l, cf) + prune_node(tree, r, cf);
    auto& self = tree.nodes[static_cast<std::size_t>(id)];
    if (as_leaf <= subtree + 0.1) {
        self.feature = -1;
        self.threshold = 0.0;
        self.left = self.right = -1;
        return as_leaf;
    }
    return subtree;
}

// Drops nodes orphaned by pruning, renumbering in preorder.
DecisionTree compact(const DecisionTree& in) {
    DecisionTree out;
    auto copy = [&](auto&& self, std::int32_t id) -> std::int32_t {
        const auto& src = in.nodes[static_cast<std::size_t>(id)];
        const auto nid = static_cast<std::int32_t>(out.nodes.size());
        out.nodes.push_back(src);
        if (!src.is_leaf()) {
            const std::int32_t l = self(self, src.left);
            const std::int32_t r = self(self, src.right);
            out.nodes[static_cast<std::size_t>(nid)].left = l;
            out.nodes[static_cast<std::size_t>(nid)].right = r;
        }
        return nid;
    };
    copy(copy, 0);
    return out;
}

DecisionTree grow_tree(const Dataset& data, std::vector<std::size_t> rows, const GrowConfig& cfg) {
    return Grower(data, cfg).grow(std::move(rows));
}

}  // namespace

double pessimistic_extra_errors(double n, double e, double cf) {
    if (n <= 0) return 0.0;
    if (e < 1.0) {
        const double base = n * (1.0 - std::pow(cf, 1.0 / n));
        if (e == 0.0) return base;
        return base + e * (pessimistic_extra_errors(n, 1.0, cf) - base);
    }
    if (e + 0.5 >= n) return std::max(n - e, 0.0);
    const double z = boost::math::quantile(boost::math::normal(), 1.0 - cf);
    const double f = (e + 0.5) / n;
    const double r = (f + z * z / (2 * n) + z * std::sqrt(f / n - f * f / n + z * z / (4 * n * n))) /
                     (1 + z * z / n);
    return std::max(r * n - e, 0.0);
}

const DecisionTree::Node& DecisionTree::leaf_for(std::span<const double> x) const {
    const Node* node = &nodes.front();
    while (!node->is_leaf()) {
        node = &nodes[static_cast<std::size_t>(
            x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left : node->right)];
    }
    return *node;
}

void DecisionTree::compile() {
    flat.assign(nodes.size(), FlatNode{});
    std::int32_t next = 1;
    auto place = [&](auto&& self, std::int32_t id, std::int32_t slot) -> void {
        const auto& n = nodes[static_cast<std::size_t>(id)];
        auto& f = flat[static_cast<std::size_t>(slot)];
        if (n.is_leaf()) {
            f = {n.counts[1] / (n.counts[0] + n.counts[1]), -1, -1};
            return;
        }
        const std::int32_t children = next;
        next += 2;
        f = {n.threshold, n.feature, children};
        self(self, n.left, children);
        self(self, n.right, children + 1);
    };
    if (!nodes.empty()) place(place, 0, 0);
}

std::size_t DecisionTree::depth() const {
    auto rec = [&](auto&& self, std::int32_t id) -> std::size_t {
        const auto& n = nodes[static_cast<std::size_t>(id)];
        if (n.is_leaf()) return 0;
        return 1 + std::max(self(self, n.left), self(self, n.right));
    };
    return nodes.empty() ? 0 : rec(rec, 0);
}

std::size_t DecisionTree::leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.is_leaf(); }));
}

nlohmann::json DecisionTree::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& n : nodes) {
        arr.push_back({n.feature, n.threshold, n.left, n.right, n.counts[0], n.counts[1]});
    }
    return arr;
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j) {
    DecisionTree t;
    for (const auto& e : j) {
        Node n;
        n.feature = e.at(0).get<std::int32_t>();
        n.threshold = e.at(1).get<double>();
        n.left = e.at(2).get<std::int32_t>();
        n.right = e.at(3).get<std::int32_t>();
        n.counts = {e.at(4).get<double>(), e.at(5).get<double>()};
        t.nodes.push_back(n);
    }
    const auto size = static_cast<std::int32_t>(t.nodes.size());
    if (size == 0) throw ParseError("tree has no nodes");
    std::int32_t id = 0;
    for (const auto& n : t.nodes) {
        // Children always follow their parent, which also rules out cycles.
        if (!n.is_leaf() && (n.left <= id || n.left >= size || n.right <= id || n.right >= size ||
                             !std::isfinite(n.threshold))) {
            throw ParseError("tree node has invalid children or threshold");
        }
        if (n.is_leaf() && !(n.counts[0] + n.counts[1] > 0)) throw ParseError("tree leaf is empty");
        ++id;
    }
    t.compile();
    return t;
}

Prediction DecisionTreeModel::predict(std::span<const double> x) const { return from_score(tree.score(x)); }

Prediction RandomForestModel::predict(std::span<const double> x) const {
    std::size_t abnormal = 0;
    for (const auto& t : trees) {
        if (t.score(x) > 0.5) ++abnormal;
    }
    return from_score(static_cast<double>(abnormal) / static_cast<double>(trees.size()));
}

DecisionTreeModel train_decision_tree(const Dataset& data, const DTParams& params) {
    data.validate();
    params.validate();
    std::vector<std::size_t> rows(data.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    GrowConfig cfg;
    cfg.min_leaf = params.min_instances_m;
    DecisionTreeModel model{params, grow_tree(data, std::move(rows), cfg)};
    if (!params.unpruned) {
        prune_node(model.tree, 0, params.confidence_c);
        model.tree = compact(model.tree);
    }
    model.tree.compile();
    return model;
}

RandomForestModel train_random_forest(const Dataset& data, const RFParams& params, Exec exec) {
    data.validate();
    params.validate();
    RandomForestModel model;
    model.params = params;
    if (model.params.features_per_split == 0) {
        model.params.features_per_split =
            static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(data.dim))));
    }
    model.params.features_per_split = std::clamp<std::size_t>(model.params.features_per_split, 1, data.dim);
    model.trees.resize(params.tree_count_i);

    const auto n = data.size();
    auto build_one = [&](std::size_t t) {
        Rng rng(splitmix64(params.rng_seed + t));
        std::vector<std::size_t> rows(n);
        if (params.bootstrap) {
            for (auto& r : rows) r = uniform_index(rng, n);
        } else {
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        GrowConfig cfg;
        cfg.min_leaf = params.min_leaf_n;
        cfg.features_per_split = model.params.features_per_split;
        cfg.min_variance = params.min_variance_v;
        cfg.rng = &rng;
        model.trees[t] = grow_tree(data, std::move(rows), cfg);
        model.trees[t].compile();
    };

    const auto count = static_cast<std::int64_t>(params.tree_count_i);
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t t = 0; t < count; ++t) build_one(static_cast<std::size_t>(t));
    } else {
        for (std::int64_t t = 0; t < count; ++t) build_one(static_cast<std::size_t>(t));
    }
    return model;
}

double out_of_bag_accuracy(const RandomForestModel& model, const Dataset& data) {
    const auto n = data.size();
    std::vector<std::size_t> votes(n, 0), abnormal(n, 0);
    std::vector<char> in_bag(n);
    if (model.params.bootstrap) {
        for (std::size_t t = 0; t < model.trees.size(); ++t) {
            // Same draws as training.
            Rng rng(splitmix64(model.params.rng_seed + t));
            std::fill(in_bag.begin(), in_bag.end(), 0);
            for (std::size_t i = 0; i < n; ++i) in_bag[uniform_index(rng, n)] = 1;
            for (std::size_t i = 0; i < n; ++i) {
                if (in_bag[i]) continue;
                ++votes[i];
                if (model.trees[t].score(data.row(i)) > 0.5) ++abnormal[i];
            }
        }
    }
    std::size_t scored = 0, correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (votes[i] == 0) continue;
        ++scored;
        const Label predicted = 2 * abnormal[i] > votes[i] ? Label::Abnormal : Label::Normal;
        if (predicted == data.labels[i]) ++correct;
    }
    if (scored == 0) return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(correct) / static_cast<double>(scored);
}

}  // namespace nids

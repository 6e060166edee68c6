#include "nids/naive_bayes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nids {

namespace {

double entropy(const std::array<double, 2>& c) {
    const double n = c[0] + c[1];
    double h = 0.0;
    for (double v : c) {
        if (v > 0) h -= v / n * std::log2(v / n);
    }
    return h;
}

int distinct_classes(const std::array<double, 2>& c) { return (c[0] > 0) + (c[1] > 0); }

using Points = std::vector<std::pair<double, int>>;

void split_range(const Points& pts, std::size_t lo, std::size_t hi, std::vector<double>& cuts) {
    std::array<double, 2> total{};
    for (std::size_t i = lo; i < hi; ++i) total[static_cast<std::size_t>(pts[i].second)] += 1.0;
    const double n = static_cast<double>(hi - lo);
    if (hi - lo < 2 || distinct_classes(total) < 2) return;

    double best_e = std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    std::array<double, 2> best_left{};
    std::array<double, 2> left{};
    for (std::size_t i = lo; i + 1 < hi; ++i) {
        left[static_cast<std::size_t>(pts[i].second)] += 1.0;
        if (pts[i].first == pts[i + 1].first) continue;
        const std::array<double, 2> right{total[0] - left[0], total[1] - left[1]};
        const double nl = static_cast<double>(i + 1 - lo);
        const double e = nl / n * entropy(left) + (n - nl) / n * entropy(right);
        if (e < best_e) {
            best_e = e;
            best_i = i;
            best_left = left;
        }
    }
    if (!std::isfinite(best_e)) return;

    const std::array<double, 2> best_right{total[0] - best_left[0], total[1] - best_left[1]};
    const double ent = entropy(total);
    const double gain = ent - best_e;
    const double k = distinct_classes(total);
    const double k1 = distinct_classes(best_left);
    const double k2 = distinct_classes(best_right);
    const double delta =
        std::log2(std::pow(3.0, k) - 2.0) - (k * ent - k1 * entropy(best_left) - k2 * entropy(best_right));
    if (gain <= (std::log2(n - 1.0) + delta) / n) return;

    const double a = pts[best_i].first;
    const double b = pts[best_i + 1].first;
    double cut = a + (b - a) / 2.0;
    if (!(cut < b)) cut = a;
    split_range(pts, lo, best_i + 1, cuts);
    cuts.push_back(cut);
    split_range(pts, best_i + 1, hi, cuts);
}

double log_gaussian(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * std::log(2.0 * std::numbers::pi * var) - d * d / (2.0 * var);
}

}  // namespace

std::vector<double> mdl_cuts(std::vector<std::pair<double, int>> points) {
    std::sort(points.begin(), points.end());
    std::vector<double> cuts;
    split_range(points, 0, points.size(), cuts);
    return cuts;
}

std::size_t NaiveBayesModel::dim() const {
    return params.supervised_discretization_d ? bins.size() : gaussians.size();
}

std::size_t NaiveBayesModel::bin_of(const std::vector<double>& cuts, double x) {
    return static_cast<std::size_t>(std::lower_bound(cuts.begin(), cuts.end(), x) - cuts.begin());
}

std::array<double, 2> NaiveBayesModel::log_joint(std::span<const double> x) const {
    const double n = class_counts[0] + class_counts[1];
    std::array<double, 2> out{};
    for (std::size_t c = 0; c < 2; ++c) {
        if (class_counts[c] == 0) {
            out[c] = -std::numeric_limits<double>::infinity();
            continue;
        }
        double s = std::log(class_counts[c] / n);
        if (params.supervised_discretization_d) {
            for (std::size_t f = 0; f < bins.size(); ++f) {
                const auto& b = bins[f];
                const double nb = static_cast<double>(b.cuts.size() + 1);
                s += std::log((b.counts[c][bin_of(b.cuts, x[f])] + 1.0) / (class_counts[c] + nb));
            }
        } else {
            for (std::size_t f = 0; f < gaussians.size(); ++f) {
                s += log_gaussian(x[f], gaussians[f].mean[c], gaussians[f].variance[c]);
            }
        }
        out[c] = s;
    }
    return out;
}

std::array<double, 2> NaiveBayesModel::log_posterior(std::span<const double> x) const {
    const auto j = log_joint(x);
    const double m = std::max(j[0], j[1]);
    const double lse = m + std::log(std::exp(j[0] - m) + std::exp(j[1] - m));
    return {j[0] - lse, j[1] - lse};
}

Prediction NaiveBayesModel::predict(std::span<const double> x) const {
    const auto j = log_joint(x);
    // Equal joints give exactly 0.5, which the tie rule maps to normal.
    return from_score(1.0 / (1.0 + std::exp(j[0] - j[1])));
}

nlohmann::json NaiveBayesModel::to_json() const {
    nlohmann::json j;
    j["class_counts"] = class_counts;
    if (params.supervised_discretization_d) {
        auto arr = nlohmann::json::array();
        for (const auto& b : bins) arr.push_back({{"cuts", b.cuts}, {"counts", b.counts}});
        j["bins"] = std::move(arr);
    } else {
        auto arr = nlohmann::json::array();
        for (const auto& g : gaussians) arr.push_back({{"mean", g.mean}, {"variance", g.variance}});
        j["gaussians"] = std::move(arr);
    }
    return j;
}

NaiveBayesModel NaiveBayesModel::from_json(const nlohmann::json& j) {
    NaiveBayesModel m;
    m.class_counts = j.at("class_counts").get<std::array<double, 2>>();
    if (j.contains("bins")) {
        m.params.supervised_discretization_d = true;
        for (const auto& e : j.at("bins")) {
            Bins b;
            b.cuts = e.at("cuts").get<std::vector<double>>();
            b.counts = e.at("counts").get<std::array<std::vector<double>, 2>>();
            if (!std::is_sorted(b.cuts.begin(), b.cuts.end()) || b.counts[0].size() != b.cuts.size() + 1 ||
                b.counts[1].size() != b.cuts.size() + 1) {
                throw ParseError("naive bayes: inconsistent bins");
            }
            m.bins.push_back(std::move(b));
        }
    } else {
        for (const auto& e : j.at("gaussians")) {
            Gaussian g{e.at("mean").get<std::array<double, 2>>(), e.at("variance").get<std::array<double, 2>>()};
            if (g.variance[0] < kNbVarianceFloor || g.variance[1] < kNbVarianceFloor) {
                throw ParseError("naive bayes: variance below floor");
            }
            m.gaussians.push_back(g);
        }
    }
    return m;
}

NaiveBayesModel train_naive_bayes(const Dataset& data, const NBParams& params) {
    data.validate();
    NaiveBayesModel m;
    m.params = params;
    for (Label l : data.labels) m.class_counts[static_cast<std::size_t>(label_index(l))] += 1.0;
    const std::size_t n = data.size();

    if (params.supervised_discretization_d) {
        m.bins.resize(data.dim);
        Points pts(n);
        for (std::size_t f = 0; f < data.dim; ++f) {
            for (std::size_t i = 0; i < n; ++i) pts[i] = {data.row(i)[f], label_index(data.labels[i])};
            auto& b = m.bins[f];
            b.cuts = mdl_cuts(pts);
            b.counts[0].assign(b.cuts.size() + 1, 0.0);
            b.counts[1].assign(b.cuts.size() + 1, 0.0);
            for (const auto& [v, c] : pts) b.counts[static_cast<std::size_t>(c)][NaiveBayesModel::bin_of(b.cuts, v)] += 1.0;
        }
        return m;
    }

    m.gaussians.resize(data.dim);
    for (std::size_t f = 0; f < data.dim; ++f) {
        auto& g = m.gaussians[f];
        for (std::size_t i = 0; i < n; ++i) g.mean[static_cast<std::size_t>(label_index(data.labels[i]))] += data.row(i)[f];
        for (std::size_t c = 0; c < 2; ++c) {
            if (m.class_counts[c] > 0) g.mean[c] /= m.class_counts[c];
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(label_index(data.labels[i]));
            const double d = data.row(i)[f] - g.mean[c];
            g.variance[c] += d * d;
        }
        for (std::size_t c = 0; c < 2; ++c) {
            if (m.class_counts[c] > 0) g.variance[c] /= m.class_counts[c];
            g.variance[c] = std::max(g.variance[c], kNbVarianceFloor);
        }
    }
    return m;
}

}  // namespace nids

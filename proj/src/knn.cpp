#include "nids/knn.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace nids {

void KNNParams::validate() const {
    if (neighbors_k < 1) throw Error("kNN: K must be >= 1");
}

double euclidean(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

std::vector<Neighbor> KNNModel::neighbors(std::span<const double> x, Exec exec) const {
    if (x.size() != data.dim) throw Error("kNN: query dimension mismatch");
    const std::size_t n = data.size();
    const std::size_t k = params.neighbors_k;

    std::vector<Neighbor> out;
    if (exec == Exec::Parallel) {
        std::vector<Neighbor> all(n);
        const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < count; ++i) {
            const auto u = static_cast<std::size_t>(i);
            all[u] = {euclidean(data.row(u), x), u};
        }
        std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
        out.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
        return out;
    }

    // Max-heap of the best k seen so far.
    std::priority_queue<Neighbor> heap;
    for (std::size_t i = 0; i < n; ++i) {
        const Neighbor c{euclidean(data.row(i), x), i};
        if (heap.size() < k) {
            heap.push(c);
        } else if (c < heap.top()) {
            heap.pop();
            heap.push(c);
        }
    }
    out.resize(heap.size());
    for (auto it = out.rbegin(); it != out.rend(); ++it) {
        *it = heap.top();
        heap.pop();
    }
    return out;
}

Prediction KNNModel::predict(std::span<const double> x, Exec exec) const {
    const auto nb = neighbors(x, exec);
    double total = 0.0;
    double abnormal = 0.0;
    for (const auto& e : nb) {
        const double w = params.inverse_distance_weighting_i ? 1.0 / (e.distance + kKnnDistanceEpsilon) : 1.0;
        total += w;
        if (data.labels[e.index] == Label::Abnormal) abnormal += w;
    }
    return from_score(abnormal / total);
}

nlohmann::json KNNModel::to_json() const {
    std::vector<int> labels;
    labels.reserve(data.size());
    for (Label l : data.labels) labels.push_back(label_index(l));
    return {{"values", data.values}, {"labels", labels}};
}

KNNModel KNNModel::from_json(const nlohmann::json& j, std::size_t dim) {
    KNNModel m;
    m.data = Dataset(dim);
    m.data.values = j.at("values").get<std::vector<double>>();
    for (int l : j.at("labels").get<std::vector<int>>()) {
        if (l != 0 && l != 1) throw ParseError("kNN: label out of range");
        m.data.labels.push_back(l == 1 ? Label::Abnormal : Label::Normal);
    }
    try {
        m.data.validate();
    } catch (const Error& e) {
        throw ParseError(std::string("kNN: ") + e.what());
    }
    return m;
}

KNNModel train_knn(const Dataset& data, const KNNParams& params) {
    params.validate();
    data.validate();
    if (params.neighbors_k > data.size()) {
        throw Error("kNN: K = " + std::to_string(params.neighbors_k) + " exceeds dataset size " +
                    std::to_string(data.size()));
    }
    return KNNModel{params, data};
}

}  // namespace nids

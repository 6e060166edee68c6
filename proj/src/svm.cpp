#include "nids/svm.hpp"

#include <cmath>
#include <limits>
#include <list>
#include <unordered_map>

namespace nids {

void SVMParams::validate() const {
    if (kernel_k < 0 || kernel_k > 3) throw Error("SVM: K must be in 0..3");
    if (degree_d < 1) throw Error("SVM: D must be >= 1");
    if (!(complexity_c > 0.0)) throw Error("SVM: C must be > 0");
    if (!(smo_tolerance > 0.0)) throw Error("SVM: tolerance must be > 0");
    if (max_passes < 1) throw Error("SVM: max_passes must be >= 1");
}

double Kernel::operator()(std::span<const double> a, std::span<const double> b) const {
    switch (type) {
        case KernelType::Linear: {
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
            return s;
        }
        case KernelType::Polynomial: {
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
            return std::pow(s + 1.0, degree);
        }
        case KernelType::Rbf: {
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double d = a[i] - b[i];
                s += d * d;
            }
            return std::exp(-gamma * s);
        }
        case KernelType::Sigmoid: {
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
            return std::tanh(gamma * s);
        }
    }
    return 0.0;
}

namespace {

constexpr double kTau = 1e-12;

// Rows of Q_ij = y_i y_j K(x_i, x_j), least recently used rows evicted.
class QCache {
public:
    QCache(const Dataset& data, const std::vector<double>& y, const Kernel& k, std::size_t bytes)
        : data_(data), y_(y), kernel_(k) {
        const std::size_t row_bytes = std::max<std::size_t>(1, data.size() * sizeof(double));
        capacity_ = std::max<std::size_t>(2, bytes / row_bytes);
    }

    const std::vector<double>& row(std::size_t i) {
        if (auto it = index_.find(i); it != index_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second);
            return it->second->second;
        }
        std::vector<double> r;
        if (lru_.size() >= capacity_) {
            r = std::move(lru_.back().second);
            index_.erase(lru_.back().first);
            lru_.pop_back();
        }
        const std::size_t n = data_.size();
        r.resize(n);
        const auto xi = data_.row(i);
        for (std::size_t j = 0; j < n; ++j) r[j] = y_[i] * y_[j] * kernel_(xi, data_.row(j));
        lru_.emplace_front(i, std::move(r));
        index_[i] = lru_.begin();
        return lru_.front().second;
    }

private:
    using Entry = std::pair<std::size_t, std::vector<double>>;
    const Dataset& data_;
    const std::vector<double>& y_;
    Kernel kernel_;
    std::size_t capacity_;
    std::list<Entry> lru_;
    std::unordered_map<std::size_t, std::list<Entry>::iterator> index_;
};

}  // namespace

SVMModel train_svm(const Dataset& data, const SVMParams& params) {
    data.validate();
    params.validate();
    if (data.count(Label::Normal) == 0 || data.count(Label::Abnormal) == 0) {
        throw Error("SVM: training data must contain both classes");
    }
    const std::size_t n = data.size();
    const double C = params.complexity_c;

    SVMModel model;
    model.params = params;
    model.dim = data.dim;
    model.kernel = Kernel{static_cast<KernelType>(params.kernel_k), params.degree_d,
                          1.0 / static_cast<double>(data.dim)};

    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = data.labels[i] == Label::Abnormal ? 1.0 : -1.0;
    std::vector<double> qd(n);
    for (std::size_t i = 0; i < n; ++i) qd[i] = model.kernel(data.row(i), data.row(i));
    std::vector<double> alpha(n, 0.0);
    std::vector<double> grad(n, -1.0);
    QCache cache(data, y, model.kernel, params.cache_mb << 20);

    auto upper = [&](std::size_t t) { return alpha[t] >= C; };
    auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

    const std::uint64_t cap = static_cast<std::uint64_t>(params.max_passes) * n;
    std::uint64_t iter = 0;
    bool converged = false;
    while (iter < cap) {
        // Second-order working set selection.
        double gmax = -std::numeric_limits<double>::infinity();
        double gmax2 = -std::numeric_limits<double>::infinity();
        std::ptrdiff_t gi = -1;
        std::ptrdiff_t gj = -1;
        double obj_min = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            if (y[t] > 0) {
                if (!upper(t) && -grad[t] >= gmax) {
                    gmax = -grad[t];
                    gi = static_cast<std::ptrdiff_t>(t);
                }
            } else if (!lower(t) && grad[t] >= gmax) {
                gmax = grad[t];
                gi = static_cast<std::ptrdiff_t>(t);
            }
        }
        if (gi < 0) {
            converged = true;
            break;
        }
        const auto i = static_cast<std::size_t>(gi);
        const std::vector<double>& qi = cache.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            if (y[j] > 0) {
                if (lower(j)) continue;
                const double diff = gmax + grad[j];
                if (grad[j] >= gmax2) gmax2 = grad[j];
                if (diff > 0) {
                    const double quad = qd[i] + qd[j] - 2.0 * y[i] * qi[j];
                    const double obj = -(diff * diff) / (quad > 0 ? quad : kTau);
                    if (obj <= obj_min) {
                        gj = static_cast<std::ptrdiff_t>(j);
                        obj_min = obj;
                    }
                }
            } else {
                if (upper(j)) continue;
                const double diff = gmax - grad[j];
                if (-grad[j] >= gmax2) gmax2 = -grad[j];
                if (diff > 0) {
                    const double quad = qd[i] + qd[j] + 2.0 * y[i] * qi[j];
                    const double obj = -(diff * diff) / (quad > 0 ? quad : kTau);
                    if (obj <= obj_min) {
                        gj = static_cast<std::ptrdiff_t>(j);
                        obj_min = obj;
                    }
                }
            }
        }
        if (gmax + gmax2 < params.smo_tolerance || gj < 0) {
            converged = true;
            break;
        }
        ++iter;
        const auto j = static_cast<std::size_t>(gj);
        // qi may be evicted by fetching row j; copy the one entry needed.
        const double qij = qi[j];
        const double old_i = alpha[i];
        const double old_j = alpha[j];

        if (y[i] != y[j]) {
            double quad = qd[i] + qd[j] + 2.0 * qij;
            if (quad <= 0) quad = kTau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0) {
                if (alpha[j] < 0) {
                    alpha[j] = 0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0) {
                alpha[i] = 0;
                alpha[j] = -diff;
            }
            if (diff > 0) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = C - diff;
                }
            } else if (alpha[j] > C) {
                alpha[j] = C;
                alpha[i] = C + diff;
            }
        } else {
            double quad = qd[i] + qd[j] - 2.0 * qij;
            if (quad <= 0) quad = kTau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > C) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = sum - C;
                }
            } else if (alpha[j] < 0) {
                alpha[j] = 0;
                alpha[i] = sum;
            }
            if (sum > C) {
                if (alpha[j] > C) {
                    alpha[j] = C;
                    alpha[i] = sum - C;
                }
            } else if (alpha[i] < 0) {
                alpha[i] = 0;
                alpha[j] = sum;
            }
        }

        const double dai = alpha[i] - old_i;
        const double daj = alpha[j] - old_j;
        {
            const std::vector<double>& ri = cache.row(i);
            for (std::size_t k = 0; k < n; ++k) grad[k] += ri[k] * dai;
        }
        {
            const std::vector<double>& rj = cache.row(j);
            for (std::size_t k = 0; k < n; ++k) grad[k] += rj[k] * daj;
        }
    }

    // Bias from free vectors, or the midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t nr_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * grad[t];
        if (upper(t)) {
            if (y[t] < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (lower(t)) {
            if (y[t] > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++nr_free;
            sum_free += yg;
        }
    }
    model.rho = nr_free > 0 ? sum_free / static_cast<double>(nr_free) : (ub + lb) / 2.0;
    model.converged = converged;
    model.iterations = iter;

    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] > 0) {
            const auto r = data.row(t);
            model.support_vectors.insert(model.support_vectors.end(), r.begin(), r.end());
            model.coef.push_back(alpha[t] * y[t]);
        }
    }
    return model;
}

double SVMModel::decision_value(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < coef.size(); ++i) s += coef[i] * kernel(support_vector(i), x);
    return s - rho;
}

Prediction SVMModel::predict(std::span<const double> x) const {
    return from_score(1.0 / (1.0 + std::exp(-decision_value(x))));
}

nlohmann::json SVMModel::to_json() const {
    return {{"kernel", static_cast<int>(kernel.type)},
            {"degree", kernel.degree},
            {"gamma", kernel.gamma},
            {"rho", rho},
            {"converged", converged},
            {"iterations", iterations},
            {"coef", coef},
            {"support_vectors", support_vectors}};
}

SVMModel SVMModel::from_json(const nlohmann::json& j) {
    SVMModel m;
    m.kernel.type = static_cast<KernelType>(j.at("kernel").get<int>());
    m.kernel.degree = j.at("degree").get<int>();
    m.kernel.gamma = j.at("gamma").get<double>();
    m.rho = j.at("rho").get<double>();
    m.converged = j.at("converged").get<bool>();
    m.iterations = j.at("iterations").get<std::uint64_t>();
    m.coef = j.at("coef").get<std::vector<double>>();
    m.support_vectors = j.at("support_vectors").get<std::vector<double>>();
    if (m.coef.empty()) throw ParseError("svm: model has no support vectors");
    if (m.support_vectors.size() % m.coef.size() != 0) throw ParseError("svm: ragged support vectors");
    m.dim = m.support_vectors.size() / m.coef.size();
    return m;
}

}  // namespace nids

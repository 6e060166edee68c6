#include "nids/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <optional>

#include <fmt/format.h>

#include "nids/util.hpp"

namespace nids {

void GridSpec::validate() const {
    const auto names = param_names(algorithm);
    for (const auto& p : params) {
        if (std::find(names.begin(), names.end(), p.name) == names.end()) {
            throw ConfigError(fmt::format("grid: unknown parameter '{}' for {}", p.name, to_string(algorithm)));
        }
        if (p.count < 1) throw ConfigError(fmt::format("grid: '{}' count must be >= 1", p.name));
        if (!(p.first <= p.last) || !std::isfinite(p.first) || !std::isfinite(p.last)) {
            throw ConfigError(fmt::format("grid: '{}' needs finite first <= last", p.name));
        }
    }
}

std::size_t GridSpec::size() const {
    std::size_t n = 1;
    for (const auto& p : params) n *= expand(p).size();
    return n;
}

nlohmann::json GridSpec::to_json() const {
    auto arr = nlohmann::json::array();
    for (const auto& p : params) {
        arr.push_back({{"name", p.name}, {"first", p.first}, {"last", p.last}, {"count", p.count},
                       {"integer", p.integer}});
    }
    return {{"algorithm", to_string(algorithm)}, {"params", arr}};
}

GridSpec GridSpec::from_json(const nlohmann::json& j) {
    GridSpec g;
    try {
        g.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
        for (const auto& e : j.at("params")) {
            GridParam p;
            p.name = e.at("name").get<std::string>();
            p.first = e.at("first").get<double>();
            p.last = e.at("last").get<double>();
            p.count = e.at("count").get<std::size_t>();
            p.integer = e.value("integer", false);
            g.params.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("grid file: ") + e.what());
    }
    g.validate();
    return g;
}

namespace {

double snap15(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return std::strtod(buf, nullptr);
}

}  // namespace

std::vector<double> expand(const GridParam& p) {
    std::vector<double> out;
    for (std::size_t i = 0; i < p.count; ++i) {
        double v = p.count == 1 ? p.first
                                : p.first + static_cast<double>(i) * (p.last - p.first) /
                                                static_cast<double>(p.count - 1);
        if (i + 1 == p.count) v = p.last;
        v = p.integer ? std::round(v) : snap15(v);
        if (p.integer && !out.empty() && out.back() == v) continue;
        out.push_back(v);
    }
    return out;
}

std::vector<ParamPoint> make_grid(const GridSpec& spec) {
    std::vector<ParamPoint> out{ParamPoint{}};
    for (const auto& p : spec.params) {
        const auto values = expand(p);
        std::vector<ParamPoint> next;
        next.reserve(out.size() * values.size());
        for (const auto& prefix : out) {
            for (double v : values) {
                auto pt = prefix;
                pt.emplace_back(p.name, v);
                next.push_back(std::move(pt));
            }
        }
        out = std::move(next);
    }
    return out;
}

GridSpec default_grid(Algorithm a) {
    switch (a) {
        case Algorithm::DT: return {a, {{"C", 0.01, 0.99, 99, false}, {"M", 1, 100, 10, true}}};
        case Algorithm::RF:
            return {a, {{"I", 50, 500, 10, true}, {"N", 2, 5, 4, true}, {"V", 1e-5, 0.01, 5, false}}};
        case Algorithm::NB: return {a, {{"D", 0, 1, 2, true}}};
        case Algorithm::SVM:
            return {a, {{"K", 0, 3, 4, true}, {"D", 1, 5, 5, true}, {"C", 0.1, 10, 100, false}}};
        case Algorithm::KNN: return {a, {{"K", 2, 100, 99, true}, {"I", 0, 1, 2, true}}};
    }
    return {};
}

ParamPoint reference_params(Algorithm a) {
    switch (a) {
        case Algorithm::DT: return {{"C", 0.47}, {"M", 1}};
        case Algorithm::RF: return {{"I", 100}, {"N", 2}, {"V", 1e-5}};
        case Algorithm::NB: return {{"D", 1}};
        case Algorithm::SVM: return {{"K", 0}, {"D", 1}, {"C", 8.9}};
        case Algorithm::KNN: return {{"K", 4}, {"I", 1}};
    }
    return {};
}

EvalMetrics EvalMetrics::from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
    EvalMetrics m;
    m.tp = tp;
    m.fp = fp;
    m.fn = fn;
    m.tn = tn;
    m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

nlohmann::json EvalMetrics::to_json() const {
    return {{"tp", tp}, {"fp", fp}, {"fn", fn}, {"tn", tn},
            {"precision", precision}, {"recall", recall}, {"f1", f1}};
}

EvalMetrics evaluate(const std::vector<Label>& predictions, const std::vector<Label>& truth) {
    if (predictions.empty()) throw Error("evaluate: no predictions");
    if (predictions.size() != truth.size()) {
        throw Error(fmt::format("evaluate: {} predictions for {} labels", predictions.size(), truth.size()));
    }
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool p = predictions[i] == Label::Abnormal;
        const bool t = truth[i] == Label::Abnormal;
        if (p && t) ++tp;
        else if (p) ++fp;
        else if (t) ++fn;
        else ++tn;
    }
    return EvalMetrics::from_counts(tp, fp, fn, tn);
}

EvalMetrics evaluate(const std::vector<Prediction>& predictions, const std::vector<Label>& truth) {
    std::vector<Label> labels;
    labels.reserve(predictions.size());
    for (const auto& p : predictions) labels.push_back(p.label);
    return evaluate(labels, truth);
}

namespace {

std::array<std::vector<std::size_t>, 2> by_class(const Dataset& data) {
    std::array<std::vector<std::size_t>, 2> idx;
    for (std::size_t i = 0; i < data.size(); ++i) {
        idx[static_cast<std::size_t>(label_index(data.labels[i]))].push_back(i);
    }
    return idx;
}

}  // namespace

Dataset downsample(const Dataset& data, std::uint64_t seed) {
    auto idx = by_class(data);
    if (idx[0].empty() || idx[1].empty()) throw Error("downsample: both classes must be present");
    Rng rng(seed);
    const std::size_t keep = std::min(idx[0].size(), idx[1].size());
    auto& major = idx[0].size() >= idx[1].size() ? idx[0] : idx[1];
    stable_shuffle(major.begin(), major.end(), rng);
    major.resize(keep);
    std::vector<std::size_t> all;
    all.reserve(2 * keep);
    all.insert(all.end(), idx[0].begin(), idx[0].end());
    all.insert(all.end(), idx[1].begin(), idx[1].end());
    stable_shuffle(all.begin(), all.end(), rng);
    return data.subset(all);
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error("split: fraction must be in (0, 1)");
    auto idx = by_class(data);
    Rng rng(seed);
    std::vector<std::size_t> a, b;
    for (auto& cls : idx) {
        stable_shuffle(cls.begin(), cls.end(), rng);
        auto take = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(cls.size())));
        if (cls.size() >= 2) take = std::clamp<std::size_t>(take, 1, cls.size() - 1);
        a.insert(a.end(), cls.begin(), cls.begin() + static_cast<std::ptrdiff_t>(take));
        b.insert(b.end(), cls.begin() + static_cast<std::ptrdiff_t>(take), cls.end());
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return {data.subset(a), data.subset(b)};
}

std::string SearchResult::to_csv() const {
    std::string out;
    if (table.empty()) return out;
    for (const auto& [k, v] : table.front().params) out += k + ",";
    out += "f1\n";
    for (const auto& row : table) {
        for (const auto& [k, v] : row.params) out += fmt::format("{},", v);
        out += fmt::format("{}\n", row.metrics.f1);
    }
    return out;
}

nlohmann::json SearchResult::summary_json() const {
    nlohmann::ordered_json j;
    j["algorithm"] = to_string(algorithm);
    j["protocol"] = protocol;
    j["points"] = table.size();
    j["best_index"] = best_index;
    j["best_params"] = params_to_json(best_params());
    j["best_f1"] = best_f1();
    j["best_metrics"] = table.at(best_index).metrics.to_json();
    return j;
}

SearchResult grid_search(const GridSpec& grid, const Dataset& train, const Dataset& validation,
                         std::uint64_t seed, Exec exec) {
    grid.validate();
    train.validate();
    validation.validate();
    if (train.spec_version != validation.spec_version || train.dim != validation.dim) {
        throw Error("grid search: train and validation use different normalization specs");
    }
    const auto points = make_grid(grid);
    SearchResult result;
    result.algorithm = grid.algorithm;
    result.table.resize(points.size());
    std::vector<std::optional<std::string>> errors(points.size());

    auto run = [&](std::size_t i) {
        try {
            const auto model = train_model(grid.algorithm, train, points[i], seed, Exec::Serial);
            result.table[i] = {model.params, evaluate(predict_batch(model, validation, Exec::Serial),
                                                      validation.labels)};
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    };
    const auto n = static_cast<std::int64_t>(points.size());
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t i = 0; i < n; ++i) run(static_cast<std::size_t>(i));
    } else {
        for (std::int64_t i = 0; i < n; ++i) run(static_cast<std::size_t>(i));
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (errors[i]) {
            throw Error(fmt::format("grid point {} ({}) failed: {}", i, params_to_string(points[i]), *errors[i]));
        }
    }
    for (std::size_t i = 1; i < result.table.size(); ++i) {
        if (result.table[i].metrics.f1 > result.table[result.best_index].metrics.f1) result.best_index = i;
    }
    return result;
}

}  // namespace nids

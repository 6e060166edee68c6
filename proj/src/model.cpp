#include "nids/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "nids/util.hpp"

namespace nids {

std::string_view to_string(Algorithm a) {
    switch (a) {
        case Algorithm::DT: return "dt";
        case Algorithm::RF: return "rf";
        case Algorithm::NB: return "nb";
        case Algorithm::SVM: return "svm";
        case Algorithm::KNN: return "knn";
    }
    return "?";
}

Algorithm parse_algorithm(std::string_view s) {
    for (Algorithm a : kAllAlgorithms) {
        if (to_string(a) == s) return a;
    }
    throw ConfigError("unknown algorithm '" + std::string(s) + "' (expected dt, rf, nb, svm, knn)");
}

ParamPoint default_params(Algorithm a) {
    switch (a) {
        case Algorithm::DT: return {{"C", 0.25}, {"M", 2}};
        case Algorithm::RF: return {{"I", 100}, {"N", 1}, {"V", 1e-3}};
        case Algorithm::NB: return {{"D", 0}};
        case Algorithm::SVM: return {{"K", 2}, {"D", 3}, {"C", 1.0}};
        case Algorithm::KNN: return {{"K", 1}, {"I", 0}};
    }
    return {};
}

std::vector<std::string> param_names(Algorithm a) {
    std::vector<std::string> out;
    for (const auto& [k, v] : default_params(a)) out.push_back(k);
    return out;
}

ParamPoint complete_params(Algorithm a, const ParamPoint& given) {
    ParamPoint out = default_params(a);
    for (const auto& [k, v] : given) {
        auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == k; });
        if (it == out.end()) {
            throw ConfigError(fmt::format("unknown parameter '{}' for {}", k, to_string(a)));
        }
        if (!std::isfinite(v)) throw ConfigError(fmt::format("parameter '{}' is not finite", k));
        it->second = v;
    }
    return out;
}

nlohmann::json params_to_json(const ParamPoint& p) {
    auto j = nlohmann::json::array();
    for (const auto& [k, v] : p) j.push_back({k, v});
    return j;
}

ParamPoint params_from_json(const nlohmann::json& j) {
    ParamPoint out;
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) out.emplace_back(k, v.is_boolean() ? (v.get<bool>() ? 1.0 : 0.0) : v.get<double>());
    } else {
        for (const auto& e : j) out.emplace_back(e.at(0).get<std::string>(), e.at(1).get<double>());
    }
    return out;
}

std::string params_to_string(const ParamPoint& p) {
    std::string s;
    for (const auto& [k, v] : p) {
        if (!s.empty()) s += ' ';
        s += fmt::format("{}={}", k, v);
    }
    return s;
}

namespace {

double get(const ParamPoint& p, std::string_view k) {
    for (const auto& [name, v] : p) {
        if (name == k) return v;
    }
    throw Error(fmt::format("missing parameter '{}'", k));
}

std::size_t get_count(const ParamPoint& p, std::string_view k) {
    const double v = std::llround(get(p, k));
    if (v < 0) throw ConfigError(fmt::format("parameter '{}' must be nonnegative", k));
    return static_cast<std::size_t>(v);
}

bool get_flag(const ParamPoint& p, std::string_view k) { return get(p, k) != 0.0; }

}  // namespace

TrainedModel train_model(Algorithm algo, const Dataset& data, const ParamPoint& given, std::uint64_t seed,
                         Exec exec) {
    data.validate();
    TrainedModel out;
    out.algorithm = algo;
    out.params = complete_params(algo, given);
    out.spec_version = data.spec_version;
    out.dim = data.dim;
    const auto& p = out.params;
    switch (algo) {
        case Algorithm::DT: {
            DTParams dp;
            dp.confidence_c = get(p, "C");
            dp.min_instances_m = get_count(p, "M");
            out.model = train_decision_tree(data, dp);
            break;
        }
        case Algorithm::RF: {
            RFParams rp;
            rp.tree_count_i = get_count(p, "I");
            rp.min_leaf_n = get_count(p, "N");
            rp.min_variance_v = get(p, "V");
            rp.rng_seed = derive_seed(seed, "bootstrap");
            out.model = train_random_forest(data, rp, exec);
            break;
        }
        case Algorithm::NB: {
            NBParams np;
            np.supervised_discretization_d = get_flag(p, "D");
            out.model = train_naive_bayes(data, np);
            break;
        }
        case Algorithm::SVM: {
            SVMParams sp;
            sp.kernel_k = static_cast<int>(std::llround(get(p, "K")));
            sp.degree_d = static_cast<int>(std::llround(get(p, "D")));
            sp.complexity_c = get(p, "C");
            sp.rng_seed = derive_seed(seed, "bootstrap");
            out.model = train_svm(data, sp);
            break;
        }
        case Algorithm::KNN: {
            KNNParams kp;
            kp.neighbors_k = get_count(p, "K");
            kp.inverse_distance_weighting_i = get_flag(p, "I");
            out.model = train_knn(data, kp);
            break;
        }
    }
    return out;
}

Prediction TrainedModel::predict(std::span<const double> x) const {
    if (x.size() != dim) {
        throw Error(fmt::format("vector dimension {} does not match model dimension {}", x.size(), dim));
    }
    return std::visit([&](const auto& m) { return m.predict(x); }, model);
}

std::vector<std::string> TrainedModel::warnings() const {
    std::vector<std::string> out;
    if (const auto* s = std::get_if<SVMModel>(&model); s && !s->converged) {
        out.push_back(fmt::format("svm: iteration cap reached after {} iterations", s->iterations));
    }
    return out;
}

std::vector<Prediction> predict_batch(const TrainedModel& model, const Dataset& data, Exec exec) {
    if (data.dim != model.dim) {
        throw Error(fmt::format("dataset dimension {} does not match model dimension {}", data.dim, model.dim));
    }
    std::vector<Prediction> out(data.size());
    const auto n = static_cast<std::int64_t>(data.size());
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 64)
        for (std::int64_t i = 0; i < n; ++i) {
            out[static_cast<std::size_t>(i)] = model.predict(data.row(static_cast<std::size_t>(i)));
        }
    } else {
        for (std::int64_t i = 0; i < n; ++i) {
            out[static_cast<std::size_t>(i)] = model.predict(data.row(static_cast<std::size_t>(i)));
        }
    }
    return out;
}

namespace {

nlohmann::json resolved_params(const ModelVariant& v) {
    return std::visit(
        [](const auto& m) -> nlohmann::json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, DecisionTreeModel>) {
                return {{"confidence_c", m.params.confidence_c},
                        {"min_instances_m", m.params.min_instances_m},
                        {"unpruned", m.params.unpruned}};
            } else if constexpr (std::is_same_v<T, RandomForestModel>) {
                return {{"tree_count_i", m.params.tree_count_i},
                        {"min_leaf_n", m.params.min_leaf_n},
                        {"min_variance_v", m.params.min_variance_v},
                        {"features_per_split", m.params.features_per_split},
                        {"rng_seed", m.params.rng_seed},
                        {"bootstrap", m.params.bootstrap},
                        {"note", "grid column N is mapped to min_leaf_n"}};
            } else if constexpr (std::is_same_v<T, NaiveBayesModel>) {
                return {{"supervised_discretization_d", m.params.supervised_discretization_d}};
            } else if constexpr (std::is_same_v<T, SVMModel>) {
                return {{"kernel_k", m.params.kernel_k},     {"degree_d", m.params.degree_d},
                        {"complexity_c", m.params.complexity_c}, {"smo_tolerance", m.params.smo_tolerance},
                        {"rng_seed", m.params.rng_seed},     {"max_passes", m.params.max_passes}};
            } else {
                return {{"neighbors_k", m.params.neighbors_k},
                        {"inverse_distance_weighting_i", m.params.inverse_distance_weighting_i}};
            }
        },
        v);
}

ModelVariant variant_from_json(Algorithm algo, const nlohmann::json& rp, const nlohmann::json& body,
                               std::size_t dim) {
    switch (algo) {
        case Algorithm::DT: {
            DecisionTreeModel m;
            m.params.confidence_c = rp.at("confidence_c").get<double>();
            m.params.min_instances_m = rp.at("min_instances_m").get<std::size_t>();
            m.params.unpruned = rp.at("unpruned").get<bool>();
            m.tree = DecisionTree::from_json(body.at("tree"));
            return m;
        }
        case Algorithm::RF: {
            RandomForestModel m;
            m.params.tree_count_i = rp.at("tree_count_i").get<std::size_t>();
            m.params.min_leaf_n = rp.at("min_leaf_n").get<std::size_t>();
            m.params.min_variance_v = rp.at("min_variance_v").get<double>();
            m.params.features_per_split = rp.at("features_per_split").get<std::size_t>();
            m.params.rng_seed = rp.at("rng_seed").get<std::uint64_t>();
            m.params.bootstrap = rp.at("bootstrap").get<bool>();
            for (const auto& t : body.at("trees")) m.trees.push_back(DecisionTree::from_json(t));
            if (m.trees.size() != m.params.tree_count_i) throw ParseError("forest tree count mismatch");
            return m;
        }
        case Algorithm::NB: {
            NaiveBayesModel m = NaiveBayesModel::from_json(body);
            if (m.params.supervised_discretization_d != rp.at("supervised_discretization_d").get<bool>()) {
                throw ParseError("naive bayes mode mismatch");
            }
            if (m.dim() != dim) throw ParseError("naive bayes dimension mismatch");
            return m;
        }
        case Algorithm::SVM: {
            SVMModel m = SVMModel::from_json(body);
            m.params.kernel_k = rp.at("kernel_k").get<int>();
            m.params.degree_d = rp.at("degree_d").get<int>();
            m.params.complexity_c = rp.at("complexity_c").get<double>();
            m.params.smo_tolerance = rp.at("smo_tolerance").get<double>();
            m.params.rng_seed = rp.at("rng_seed").get<std::uint64_t>();
            m.params.max_passes = rp.at("max_passes").get<std::size_t>();
            if (m.dim != dim) throw ParseError("svm dimension mismatch");
            return m;
        }
        case Algorithm::KNN: {
            KNNModel m = KNNModel::from_json(body, dim);
            m.params.neighbors_k = rp.at("neighbors_k").get<std::size_t>();
            m.params.inverse_distance_weighting_i = rp.at("inverse_distance_weighting_i").get<bool>();
            if (m.params.neighbors_k < 1 || m.params.neighbors_k > m.data.size()) {
                throw ParseError("kNN: K out of range");
            }
            return m;
        }
    }
    throw ParseError("unknown algorithm");
}

nlohmann::json body_json(const ModelVariant& v) {
    return std::visit(
        [](const auto& m) -> nlohmann::json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, DecisionTreeModel>) {
                return {{"tree", m.tree.to_json()}};
            } else if constexpr (std::is_same_v<T, RandomForestModel>) {
                auto arr = nlohmann::json::array();
                for (const auto& t : m.trees) arr.push_back(t.to_json());
                return {{"trees", std::move(arr)}};
            } else {
                return m.to_json();
            }
        },
        v);
}

void check_tree_dims(const DecisionTree& t, std::size_t dim) {
    for (const auto& n : t.nodes) {
        if (!n.is_leaf() && static_cast<std::size_t>(n.feature) >= dim) {
            throw ParseError("tree split feature out of range");
        }
    }
}

}  // namespace

std::string save_model(const TrainedModel& model) {
    nlohmann::ordered_json j;
    j["format"] = kModelFormat;
    j["version"] = kModelFormatVersion;
    j["algorithm"] = to_string(model.algorithm);
    j["spec_version"] = model.spec_version;
    j["dim"] = model.dim;
    j["params"] = params_to_json(model.params);
    j["resolved_params"] = resolved_params(model.model);
    j["warnings"] = model.warnings();
    j["model"] = body_json(model.model);
    return j.dump() + "\n";
}

TrainedModel load_model(std::string_view bytes, const std::optional<std::string>& expected_spec_version) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model file is not valid JSON: ") + e.what());
    }
    TrainedModel m;
    try {
        if (!j.is_object() || j.value("format", "") != kModelFormat) throw ParseError("not a model file");
        const int version = j.at("version").get<int>();
        if (version != kModelFormatVersion) {
            throw ParseError(fmt::format("unsupported model format version {}", version));
        }
        m.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
        m.spec_version = j.at("spec_version").get<std::string>();
        m.dim = j.at("dim").get<std::size_t>();
        if (m.dim == 0) throw ParseError("model dimension is zero");
        m.params = params_from_json(j.at("params"));
        m.model = variant_from_json(m.algorithm, j.at("resolved_params"), j.at("model"), m.dim);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed model file: ") + e.what());
    } catch (const ConfigError& e) {
        throw ParseError(std::string("malformed model file: ") + e.what());
    }
    if (const auto* d = std::get_if<DecisionTreeModel>(&m.model)) check_tree_dims(d->tree, m.dim);
    if (const auto* r = std::get_if<RandomForestModel>(&m.model)) {
        for (const auto& t : r->trees) check_tree_dims(t, m.dim);
    }
    if (expected_spec_version && *expected_spec_version != m.spec_version) {
        throw ConfigError(fmt::format("model was trained for normalization spec '{}' but '{}' is in use",
                                      m.spec_version, *expected_spec_version));
    }
    return m;
}

void save_model_file(const TrainedModel& model, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write model file " + path);
    f << save_model(model);
    if (!f) throw ConfigError("failed writing model file " + path);
}

TrainedModel load_model_file(const std::string& path, const std::optional<std::string>& expected_spec_version) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read model file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return load_model(ss.str(), expected_spec_version);
}

}  // namespace nids

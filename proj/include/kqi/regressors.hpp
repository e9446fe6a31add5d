#ifndef KQI_REGRESSORS_HPP
#define KQI_REGRESSORS_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kqi/common.hpp"
#include "kqi/regressors/adaboost.hpp"
#include "kqi/regressors/forest.hpp"
#include "kqi/regressors/knn.hpp"
#include "kqi/regressors/mlp.hpp"
#include "kqi/regressors/ridge.hpp"
#include "kqi/regressors/svr.hpp"
#include "kqi/regressors/tree.hpp"

namespace kqi {

using json = nlohmann::json;

inline constexpr int kModelFormatVersion = 1;

// ---------------------------------------------------------------------------
// One estimator contract over the six algorithm families.
// ---------------------------------------------------------------------------

enum class Family { RF, RR, SVR, KNR, NN, ABR };

inline const char* to_string(Family f) {
    switch (f) {
        case Family::RF: return "RF";
        case Family::RR: return "RR";
        case Family::SVR: return "SVR";
        case Family::KNR: return "KNR";
        case Family::NN: return "NN";
        case Family::ABR: return "ABR";
    }
    return "?";
}

inline std::optional<Family> family_from_string(std::string_view s) {
    if (s == "RF" || s == "rf") return Family::RF;
    if (s == "RR" || s == "rr") return Family::RR;
    if (s == "SVR" || s == "svr") return Family::SVR;
    if (s == "KNR" || s == "knr") return Family::KNR;
    if (s == "NN" || s == "nn") return Family::NN;
    if (s == "ABR" || s == "abr") return Family::ABR;
    return std::nullopt;
}

inline const std::vector<Family>& all_families() {
    static const std::vector<Family> fams = {Family::RF,  Family::RR, Family::SVR,
                                             Family::KNR, Family::NN, Family::ABR};
    return fams;
}

struct EstimatorSpec {
    Family family = Family::RR;
    json hyperparameters = json::object();
    uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Hyperparameter validation: known names, sane types/ranges. Values outside
// the published grids are allowed (the grids are value lists, not hard
// domains), but ABR's learning_rate 0.0 is substituted with 1e-3 and the
// substitution is reported.
// ---------------------------------------------------------------------------

struct ValidatedSpec {
    EstimatorSpec spec;
    std::vector<std::string> notes;
};

namespace detail {

inline void require_names(const json& hp, const std::vector<std::string>& allowed,
                          Family family) {
    for (const auto& [key, value] : hp.items()) {
        (void)value;
        bool ok = false;
        for (const auto& a : allowed)
            if (a == key) { ok = true; break; }
        if (!ok)
            throw ValidationError(std::string("unknown hyperparameter '") + key + "' for " +
                                  to_string(family));
    }
}

inline long long int_hp(const json& hp, const char* name, long long fallback,
                        long long min_value) {
    if (!hp.contains(name)) return fallback;
    const json& v = hp.at(name);
    if (!v.is_number_integer() && !v.is_number_unsigned())
        throw ValidationError(std::string("hyperparameter '") + name + "' must be an integer");
    const long long x = v.get<long long>();
    if (x < min_value)
        throw ValidationError(std::string("hyperparameter '") + name + "' must be >= " +
                              std::to_string(min_value));
    return x;
}

inline double num_hp(const json& hp, const char* name, double fallback) {
    if (!hp.contains(name)) return fallback;
    const json& v = hp.at(name);
    if (!v.is_number())
        throw ValidationError(std::string("hyperparameter '") + name + "' must be a number");
    return v.get<double>();
}

inline bool bool_hp(const json& hp, const char* name, bool fallback) {
    if (!hp.contains(name)) return fallback;
    const json& v = hp.at(name);
    if (!v.is_boolean())
        throw ValidationError(std::string("hyperparameter '") + name + "' must be a boolean");
    return v.get<bool>();
}

}  // namespace detail

inline ValidatedSpec validate_spec(const EstimatorSpec& spec) {
    ValidatedSpec out{spec, {}};
    json& hp = out.spec.hyperparameters;
    switch (spec.family) {
        case Family::RF:
            detail::require_names(hp, {"n_estimators", "max_depth"}, spec.family);
            detail::int_hp(hp, "n_estimators", 6, 1);
            detail::int_hp(hp, "max_depth", 10, 1);
            break;
        case Family::RR: {
            detail::require_names(hp, {"alpha", "fit_intercept"}, spec.family);
            const double alpha = detail::num_hp(hp, "alpha", 1.0);
            if (alpha < 0.0) throw ValidationError("ridge alpha must be >= 0");
            detail::bool_hp(hp, "fit_intercept", true);
            break;
        }
        case Family::SVR: {
            detail::require_names(hp, {"kernel", "degree", "epsilon", "C"}, spec.family);
            if (hp.contains("kernel")) {
                if (!hp.at("kernel").is_string() ||
                    !svr_kernel_from_string(hp.at("kernel").get<std::string>()))
                    throw ValidationError("SVR kernel must be one of poly/rbf/sigmoid");
            }
            detail::int_hp(hp, "degree", 3, 1);
            if (detail::num_hp(hp, "epsilon", 0.1) < 0.0)
                throw ValidationError("SVR epsilon must be >= 0");
            if (detail::num_hp(hp, "C", 1.0) <= 0.0)
                throw ValidationError("SVR C must be > 0");
            break;
        }
        case Family::KNR:
            detail::require_names(hp, {"leaf_size", "n_neighbors", "p"}, spec.family);
            detail::int_hp(hp, "leaf_size", 30, 1);
            detail::int_hp(hp, "n_neighbors", 4, 1);
            detail::int_hp(hp, "p", 2, 1);
            break;
        case Family::NN: {
            detail::require_names(hp, {"alpha", "hidden_layer_sizes"}, spec.family);
            if (detail::num_hp(hp, "alpha", 1e-4) < 0.0)
                throw ValidationError("NN alpha must be >= 0");
            if (hp.contains("hidden_layer_sizes")) {
                const json& h = hp.at("hidden_layer_sizes");
                if (!h.is_array() || h.empty())
                    throw ValidationError("hidden_layer_sizes must be a non-empty array");
                for (const auto& v : h)
                    if (!v.is_number_integer() || v.get<long long>() < 1)
                        throw ValidationError("hidden layer sizes must be integers >= 1");
            }
            break;
        }
        case Family::ABR: {
            detail::require_names(hp, {"n_estimators", "learning_rate"}, spec.family);
            detail::int_hp(hp, "n_estimators", 50, 1);
            const double lr = detail::num_hp(hp, "learning_rate", 1.0);
            if (lr < 0.0) throw ValidationError("ABR learning_rate must be >= 0");
            if (lr == 0.0) {
                hp["learning_rate"] = 1e-3;
                out.notes.push_back("ABR learning_rate 0.0 substituted with 1e-3");
            }
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fitted model wrapper
// ---------------------------------------------------------------------------

class Regressor {
public:
    virtual ~Regressor() = default;
    virtual Vector predict(const Matrix& X) const = 0;
    virtual bool converged() const { return true; }
    virtual json fitted_params() const = 0;
};

namespace detail {

inline json vector_to_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline Vector vector_from_json(const json& a) {
    Vector v(static_cast<Eigen::Index>(a.size()));
    for (size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    return v;
}

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const json& rows, Eigen::Index cols_hint = 0) {
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    if (n == 0) return Matrix(0, cols_hint);
    const Eigen::Index d = static_cast<Eigen::Index>(rows[0].size());
    Matrix m(n, d);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < d; ++c)
            m(r, c) = rows[static_cast<size_t>(r)][static_cast<size_t>(c)].get<double>();
    return m;
}

inline json tree_to_json(const RegressionTree& t) {
    json nodes = json::array();
    for (const auto& nd : t.nodes())
        nodes.push_back(json::array({nd.feature, nd.threshold, nd.value, nd.left, nd.right}));
    return json{{"nodes", std::move(nodes)}, {"d", t.n_features()}};
}

inline RegressionTree tree_from_json(const json& j) {
    std::vector<RegressionTree::Node> nodes;
    for (const auto& nj : j.at("nodes")) {
        RegressionTree::Node nd;
        nd.feature = nj[0].get<int>();
        nd.threshold = nj[1].get<double>();
        nd.value = nj[2].get<double>();
        nd.left = nj[3].get<int>();
        nd.right = nj[4].get<int>();
        nodes.push_back(nd);
    }
    RegressionTree t;
    t.restore(std::move(nodes), j.at("d").get<Eigen::Index>());
    return t;
}

struct RidgeRegressor : Regressor {
    RidgeModel model;
    Vector predict(const Matrix& X) const override { return model.predict(X); }
    json fitted_params() const override {
        return json{{"weights", vector_to_json(model.weights())},
                    {"intercept", model.intercept()}};
    }
};

struct KnnRegressor : Regressor {
    KnnModel model;
    Vector predict(const Matrix& X) const override { return model.predict(X); }
    json fitted_params() const override {
        return json{{"train_X", matrix_to_json(model.train_X())},
                    {"train_y", vector_to_json(model.train_y())}};
    }
};

struct SvrRegressor : Regressor {
    SvrModel model;
    Vector predict(const Matrix& X) const override { return model.predict(X); }
    bool converged() const override { return model.converged(); }
    json fitted_params() const override {
        return json{{"support_vectors", matrix_to_json(model.support_vectors())},
                    {"coefficients", vector_to_json(model.coefficients())},
                    {"offset", model.offset()},
                    {"gamma", model.gamma()},
                    {"converged", model.converged()}};
    }
};

struct ForestRegressor : Regressor {
    RandomForestModel model;
    Vector predict(const Matrix& X) const override { return model.predict(X); }
    json fitted_params() const override {
        json trees = json::array();
        for (const auto& t : model.trees()) trees.push_back(tree_to_json(t));
        return json{{"trees", std::move(trees)}};
    }
};

struct MlpRegressor : Regressor {
    MlpModel model;
    Vector predict(const Matrix& X) const override { return model.predict(X); }
    json fitted_params() const override {
        json ws = json::array(), bs = json::array();
        for (const auto& W : model.weights()) ws.push_back(matrix_to_json(W.cast<double>()));
        for (const auto& b : model.biases()) {
            json row = json::array();
            for (Eigen::Index j = 0; j < b.cols(); ++j)
                row.push_back(static_cast<double>(b(0, j)));
            bs.push_back(std::move(row));
        }
        return json{{"weights", std::move(ws)}, {"biases", std::move(bs)}};
    }
};

struct AdaBoostRegressor : Regressor {
    AdaBoostModel model;
    Vector predict(const Matrix& X) const override { return model.predict(X); }
    json fitted_params() const override {
        json trees = json::array();
        for (const auto& t : model.trees()) trees.push_back(tree_to_json(t));
        return json{{"trees", std::move(trees)}, {"round_weights", model.round_weights()}};
    }
};

}  // namespace detail

struct TrainedModel {
    EstimatorSpec spec;
    std::vector<std::string> notes;
    Eigen::Index n_features = 0;
    std::shared_ptr<const Regressor> impl;

    Vector predict(const Matrix& X) const {
        if (!impl) throw PipelineError("predict on an unfitted model");
        if (X.cols() != n_features)
            throw ValidationError("predict: expected " + std::to_string(n_features) +
                                  " feature columns, got " + std::to_string(X.cols()));
        return impl->predict(X);
    }
    bool converged() const { return impl && impl->converged(); }

    json to_json() const {
        return json{{"format_version", kModelFormatVersion},
                    {"family", to_string(spec.family)},
                    {"hyperparameters", spec.hyperparameters},
                    {"seed", spec.seed},
                    {"notes", notes},
                    {"n_features", n_features},
                    {"parameters", impl->fitted_params()}};
    }

    static TrainedModel from_json(const json& j);
};

inline TrainedModel fit_estimator(const EstimatorSpec& raw_spec, const Matrix& X,
                                  const Vector& y) {
    if (X.rows() < 2) throw ValidationError("fit: need at least 2 samples");
    if (X.rows() != y.size()) throw ValidationError("fit: X/y row mismatch");
    if (!X.allFinite() || !y.allFinite()) throw ValidationError("fit: non-finite inputs");

    ValidatedSpec v = validate_spec(raw_spec);
    const json& hp = v.spec.hyperparameters;

    TrainedModel out;
    out.spec = v.spec;
    out.notes = v.notes;
    out.n_features = X.cols();

    switch (v.spec.family) {
        case Family::RF: {
            auto r = std::make_shared<detail::ForestRegressor>();
            r->model.n_estimators =
                static_cast<int>(detail::int_hp(hp, "n_estimators", 6, 1));
            r->model.max_depth = static_cast<int>(detail::int_hp(hp, "max_depth", 10, 1));
            r->model.seed = v.spec.seed;
            r->model.fit(X, y);
            out.impl = std::move(r);
            break;
        }
        case Family::RR: {
            auto r = std::make_shared<detail::RidgeRegressor>();
            r->model.alpha = detail::num_hp(hp, "alpha", 1.0);
            r->model.fit_intercept = detail::bool_hp(hp, "fit_intercept", true);
            r->model.fit(X, y);
            out.impl = std::move(r);
            break;
        }
        case Family::SVR: {
            auto r = std::make_shared<detail::SvrRegressor>();
            if (hp.contains("kernel"))
                r->model.kernel = *svr_kernel_from_string(hp.at("kernel").get<std::string>());
            r->model.degree = static_cast<int>(detail::int_hp(hp, "degree", 3, 1));
            r->model.epsilon = detail::num_hp(hp, "epsilon", 0.1);
            r->model.C = detail::num_hp(hp, "C", 1.0);
            r->model.fit(X, y);
            out.impl = std::move(r);
            break;
        }
        case Family::KNR: {
            auto r = std::make_shared<detail::KnnRegressor>();
            r->model.leaf_size = static_cast<int>(detail::int_hp(hp, "leaf_size", 30, 1));
            r->model.n_neighbors =
                static_cast<int>(detail::int_hp(hp, "n_neighbors", 4, 1));
            r->model.p = static_cast<int>(detail::int_hp(hp, "p", 2, 1));
            r->model.fit(X, y);
            out.impl = std::move(r);
            break;
        }
        case Family::NN: {
            auto r = std::make_shared<detail::MlpRegressor>();
            r->model.alpha = detail::num_hp(hp, "alpha", 1e-4);
            if (hp.contains("hidden_layer_sizes")) {
                r->model.hidden_layer_sizes.clear();
                for (const auto& h : hp.at("hidden_layer_sizes"))
                    r->model.hidden_layer_sizes.push_back(h.get<int>());
            }
            r->model.seed = v.spec.seed;
            r->model.fit(X, y);
            out.impl = std::move(r);
            break;
        }
        case Family::ABR: {
            auto r = std::make_shared<detail::AdaBoostRegressor>();
            r->model.n_estimators =
                static_cast<int>(detail::int_hp(hp, "n_estimators", 50, 1));
            r->model.learning_rate = detail::num_hp(hp, "learning_rate", 1.0);
            r->model.seed = v.spec.seed;
            r->model.fit(X, y);
            out.impl = std::move(r);
            break;
        }
    }
    return out;
}

inline TrainedModel TrainedModel::from_json(const json& j) {
    if (j.at("format_version").get<int>() != kModelFormatVersion)
        throw ValidationError("unsupported model format version");
    TrainedModel out;
    const auto family = family_from_string(j.at("family").get<std::string>());
    if (!family) throw ValidationError("unknown model family in file");
    out.spec.family = *family;
    out.spec.hyperparameters = j.at("hyperparameters");
    out.spec.seed = j.at("seed").get<uint64_t>();
    out.notes = j.at("notes").get<std::vector<std::string>>();
    out.n_features = j.at("n_features").get<Eigen::Index>();
    const json& p = j.at("parameters");
    const json& hp = out.spec.hyperparameters;

    switch (out.spec.family) {
        case Family::RR: {
            auto r = std::make_shared<detail::RidgeRegressor>();
            r->model.alpha = detail::num_hp(hp, "alpha", 1.0);
            r->model.fit_intercept = detail::bool_hp(hp, "fit_intercept", true);
            r->model.set_parameters(detail::vector_from_json(p.at("weights")),
                                    p.at("intercept").get<double>());
            out.impl = std::move(r);
            break;
        }
        case Family::KNR: {
            auto r = std::make_shared<detail::KnnRegressor>();
            r->model.leaf_size = static_cast<int>(detail::int_hp(hp, "leaf_size", 30, 1));
            r->model.n_neighbors =
                static_cast<int>(detail::int_hp(hp, "n_neighbors", 4, 1));
            r->model.p = static_cast<int>(detail::int_hp(hp, "p", 2, 1));
            r->model.restore(detail::matrix_from_json(p.at("train_X"), out.n_features),
                             detail::vector_from_json(p.at("train_y")));
            out.impl = std::move(r);
            break;
        }
        case Family::SVR: {
            auto r = std::make_shared<detail::SvrRegressor>();
            if (hp.contains("kernel"))
                r->model.kernel = *svr_kernel_from_string(hp.at("kernel").get<std::string>());
            r->model.degree = static_cast<int>(detail::int_hp(hp, "degree", 3, 1));
            r->model.epsilon = detail::num_hp(hp, "epsilon", 0.1);
            r->model.C = detail::num_hp(hp, "C", 1.0);
            r->model.restore(detail::matrix_from_json(p.at("support_vectors"), out.n_features),
                             detail::vector_from_json(p.at("coefficients")),
                             p.at("offset").get<double>(), p.at("gamma").get<double>(),
                             p.at("converged").get<bool>());
            out.impl = std::move(r);
            break;
        }
        case Family::RF: {
            auto r = std::make_shared<detail::ForestRegressor>();
            for (const auto& tj : p.at("trees"))
                r->model.trees().push_back(detail::tree_from_json(tj));
            out.impl = std::move(r);
            break;
        }
        case Family::NN: {
            auto r = std::make_shared<detail::MlpRegressor>();
            const json& ws = p.at("weights");
            const json& bs = p.at("biases");
            for (size_t l = 0; l < ws.size(); ++l) {
                const Matrix W = detail::matrix_from_json(ws[l]);
                r->model.weights().push_back(W.cast<float>());
                MlpModel::RowVec b(static_cast<Eigen::Index>(bs[l].size()));
                for (Eigen::Index j2 = 0; j2 < b.cols(); ++j2)
                    b(j2) = static_cast<float>(bs[l][static_cast<size_t>(j2)].get<double>());
                r->model.biases().push_back(std::move(b));
            }
            out.impl = std::move(r);
            break;
        }
        case Family::ABR: {
            auto r = std::make_shared<detail::AdaBoostRegressor>();
            for (const auto& tj : p.at("trees"))
                r->model.trees().push_back(detail::tree_from_json(tj));
            r->model.round_weights() = p.at("round_weights").get<std::vector<double>>();
            out.impl = std::move(r);
            break;
        }
    }
    return out;
}

}  // namespace kqi

#endif  // KQI_REGRESSORS_HPP

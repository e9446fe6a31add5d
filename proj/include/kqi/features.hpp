#ifndef KQI_FEATURES_HPP
#define KQI_FEATURES_HPP

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kqi/common.hpp"
#include "kqi/data_model.hpp"
#include "kqi/regressors/tree.hpp"

namespace kqi {

// ---------------------------------------------------------------------------
// Feature selection: mean-decrease-in-impurity importances from a fixed
// reference forest (100 trees, unlimited depth, seeded), threshold at the mean
// importance.
//
// The reference forest scans candidate features in sorted-name order and
// splits tie credit equally, so importances are a function of (named column,
// data) rather than column position: permuting columns permutes importances.
// ---------------------------------------------------------------------------

struct SelectorModel {
    std::vector<std::string> feature_names;
    std::vector<double> importances;  // sums to 1 when any split occurred
    double threshold = 0.0;
    std::vector<int> selected_indices;  // ascending original order

    Matrix apply(const Matrix& X) const {
        if (X.cols() != static_cast<Eigen::Index>(feature_names.size()))
            throw ValidationError("selector: column count does not match fit");
        Matrix out(X.rows(), static_cast<Eigen::Index>(selected_indices.size()));
        for (size_t i = 0; i < selected_indices.size(); ++i)
            out.col(static_cast<Eigen::Index>(i)) = X.col(selected_indices[i]);
        return out;
    }

    std::vector<std::string> selected_names() const {
        std::vector<std::string> names;
        for (int i : selected_indices) names.push_back(feature_names[static_cast<size_t>(i)]);
        return names;
    }

    nlohmann::json to_json() const {
        return nlohmann::json{{"feature_names", feature_names},
                              {"importances", importances},
                              {"threshold", threshold},
                              {"selected_indices", selected_indices}};
    }
    static SelectorModel from_json(const nlohmann::json& j) {
        SelectorModel m;
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        m.importances = j.at("importances").get<std::vector<double>>();
        m.threshold = j.at("threshold").get<double>();
        m.selected_indices = j.at("selected_indices").get<std::vector<int>>();
        return m;
    }
};

inline constexpr int kSelectorForestTrees = 100;

inline SelectorModel fit_selector_raw(const Matrix& X, const Vector& y,
                                      const std::vector<std::string>& feature_names,
                                      uint64_t seed) {
    const Eigen::Index d = X.cols();
    if (d == 0) throw ValidationError("fit_selector: no features");
    const int n = static_cast<int>(X.rows());
    if (n < 2) throw ValidationError("fit_selector: need at least 2 rows");

    // Canonical scan order: sorted by feature name.
    std::vector<int> order(static_cast<size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return feature_names[static_cast<size_t>(a)] < feature_names[static_cast<size_t>(b)];
    });

    std::vector<double> total(static_cast<size_t>(d), 0.0);
    std::vector<double> per_tree(static_cast<size_t>(d));
    std::vector<int> rows(static_cast<size_t>(n));
    for (int t = 0; t < kSelectorForestTrees; ++t) {
        Rng rng(mix_seed(seed, 0x53u, static_cast<uint64_t>(t)));
        for (int i = 0; i < n; ++i)
            rows[static_cast<size_t>(i)] = static_cast<int>(rng.uniform_int(n));
        std::fill(per_tree.begin(), per_tree.end(), 0.0);
        RegressionTree tree;
        RegressionTree::FitOptions opt;
        opt.scan_order = order;
        opt.importance_out = &per_tree;
        tree.fit(X, y, rows, opt);
        const double sum = std::accumulate(per_tree.begin(), per_tree.end(), 0.0);
        if (sum > 0.0)
            for (Eigen::Index f = 0; f < d; ++f)
                total[static_cast<size_t>(f)] += per_tree[static_cast<size_t>(f)] / sum;
    }

    SelectorModel model;
    model.feature_names = feature_names;
    model.importances.assign(static_cast<size_t>(d), 0.0);
    const double grand = std::accumulate(total.begin(), total.end(), 0.0);
    if (grand > 0.0)
        for (Eigen::Index f = 0; f < d; ++f)
            model.importances[static_cast<size_t>(f)] = total[static_cast<size_t>(f)] / grand;

    model.threshold =
        std::accumulate(model.importances.begin(), model.importances.end(), 0.0) /
        static_cast<double>(d);
    for (Eigen::Index f = 0; f < d; ++f)
        if (model.importances[static_cast<size_t>(f)] >= model.threshold)
            model.selected_indices.push_back(static_cast<int>(f));
    if (model.selected_indices.empty()) {
        const auto top = std::max_element(model.importances.begin(), model.importances.end());
        model.selected_indices.push_back(
            static_cast<int>(top - model.importances.begin()));
    }
    return model;
}

inline SelectorModel fit_selector(const DatasetMatrix& train, const std::string& kqi,
                                  uint64_t seed) {
    if (train.split_tag == SplitTag::test)
        throw LeakageError("fit_selector: refusing a test-tagged matrix");
    return fit_selector_raw(train.X, train.target(kqi), train.feature_names, seed);
}

inline Matrix apply_selector(const SelectorModel& model, const Matrix& X) {
    return model.apply(X);
}

// ---------------------------------------------------------------------------
// Feature extraction: PCA by eigendecomposition of the training covariance,
// keeping the smallest component count whose cumulative explained-variance
// ratio reaches the retention level (0.95). Each component is oriented so its
// largest-magnitude loading is positive.
// ---------------------------------------------------------------------------

struct PcaModel {
    Vector mean;                       // training column means
    Matrix components;                 // k x d, row-orthonormal
    Vector explained_variance_ratio;   // length d, descending
    int k = 0;
    double retention = 0.95;

    Matrix transform(const Matrix& X) const {
        if (X.cols() != mean.size())
            throw ValidationError("pca: column count does not match fit");
        return (X.rowwise() - mean.transpose()) * components.transpose();
    }

    Matrix reconstruct(const Matrix& scores) const {
        return (scores * components).rowwise() + mean.transpose();
    }

    nlohmann::json to_json() const {
        nlohmann::json comp = nlohmann::json::array();
        for (Eigen::Index r = 0; r < components.rows(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index c = 0; c < components.cols(); ++c)
                row.push_back(components(r, c));
            comp.push_back(std::move(row));
        }
        nlohmann::json mean_j = nlohmann::json::array();
        for (Eigen::Index i = 0; i < mean.size(); ++i) mean_j.push_back(mean(i));
        nlohmann::json ratios = nlohmann::json::array();
        for (Eigen::Index i = 0; i < explained_variance_ratio.size(); ++i)
            ratios.push_back(explained_variance_ratio(i));
        return nlohmann::json{{"mean", std::move(mean_j)},
                              {"components", std::move(comp)},
                              {"explained_variance_ratio", std::move(ratios)},
                              {"k", k},
                              {"retention", retention}};
    }

    static PcaModel from_json(const nlohmann::json& j) {
        PcaModel m;
        const auto& mean_j = j.at("mean");
        m.mean = Vector(static_cast<Eigen::Index>(mean_j.size()));
        for (size_t i = 0; i < mean_j.size(); ++i)
            m.mean(static_cast<Eigen::Index>(i)) = mean_j[i].get<double>();
        const auto& comp = j.at("components");
        const Eigen::Index k = static_cast<Eigen::Index>(comp.size());
        m.components = Matrix(k, m.mean.size());
        for (Eigen::Index r = 0; r < k; ++r)
            for (Eigen::Index c = 0; c < m.mean.size(); ++c)
                m.components(r, c) =
                    comp[static_cast<size_t>(r)][static_cast<size_t>(c)].get<double>();
        const auto& ratios = j.at("explained_variance_ratio");
        m.explained_variance_ratio = Vector(static_cast<Eigen::Index>(ratios.size()));
        for (size_t i = 0; i < ratios.size(); ++i)
            m.explained_variance_ratio(static_cast<Eigen::Index>(i)) = ratios[i].get<double>();
        m.k = j.at("k").get<int>();
        m.retention = j.at("retention").get<double>();
        return m;
    }
};

inline PcaModel fit_pca_raw(const Matrix& X, double retention = 0.95) {
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    if (n < 2) throw ValidationError("fit_pca: need at least 2 rows");
    if (d == 0) throw ValidationError("fit_pca: no features");

    PcaModel m;
    m.retention = retention;
    m.mean = X.colwise().mean();
    const Matrix Xc = X.rowwise() - m.mean.transpose();
    const Matrix cov = (Xc.transpose() * Xc) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
    if (solver.info() != Eigen::Success) throw PipelineError("fit_pca: eigensolver failed");
    // Ascending from Eigen; flip to descending and clamp tiny negatives.
    Vector eig = solver.eigenvalues().reverse();
    Matrix vecs(d, d);
    for (Eigen::Index i = 0; i < d; ++i) vecs.col(i) = solver.eigenvectors().col(d - 1 - i);
    for (Eigen::Index i = 0; i < d; ++i) eig(i) = std::max(eig(i), 0.0);

    const double total = eig.sum();
    if (total <= 0.0) throw ValidationError("fit_pca: zero total variance");
    m.explained_variance_ratio = eig / total;

    // Smallest k reaching the retention level; zero-eigenvalue directions can
    // never be needed because the positive ratios already sum to 1.
    double cum = 0.0;
    Eigen::Index k = 0;
    const double eig_floor = 1e-12 * std::max(eig(0), 1.0);
    while (k < d) {
        if (eig(k) <= eig_floor) break;
        cum += m.explained_variance_ratio(k);
        ++k;
        if (cum >= retention) break;
    }
    if (k == 0) throw ValidationError("fit_pca: rank-deficient covariance with no usable axis");
    m.k = static_cast<int>(k);

    m.components = Matrix(k, d);
    for (Eigen::Index i = 0; i < k; ++i) {
        Vector v = vecs.col(i);
        Eigen::Index arg = 0;
        double best = std::abs(v(0));
        for (Eigen::Index c = 1; c < d; ++c)
            if (std::abs(v(c)) > best) {
                best = std::abs(v(c));
                arg = c;
            }
        if (v(arg) < 0.0) v = -v;
        m.components.row(i) = v.transpose();
    }
    return m;
}

inline PcaModel fit_pca(const DatasetMatrix& train, double retention = 0.95) {
    if (train.split_tag == SplitTag::test)
        throw LeakageError("fit_pca: refusing a test-tagged matrix");
    return fit_pca_raw(train.X, retention);
}

inline Matrix apply_pca(const PcaModel& model, const Matrix& X) {
    return model.transform(X);
}

// ---------------------------------------------------------------------------
// The three feature strategies behind one transform interface.
// ---------------------------------------------------------------------------

enum class Strategy { none, fs, fe };

inline const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::none: return "No_FE";
        case Strategy::fs: return "FS";
        case Strategy::fe: return "FE";
    }
    return "?";
}

inline const char* strategy_token(Strategy s) {
    switch (s) {
        case Strategy::none: return "none";
        case Strategy::fs: return "fs";
        case Strategy::fe: return "fe";
    }
    return "?";
}

inline std::optional<Strategy> strategy_from_token(std::string_view s) {
    if (s == "none" || s == "No_FE" || s == "no_fe") return Strategy::none;
    if (s == "fs" || s == "FS") return Strategy::fs;
    if (s == "fe" || s == "FE") return Strategy::fe;
    return std::nullopt;
}

inline const std::vector<Strategy>& all_strategies() {
    static const std::vector<Strategy> all = {Strategy::none, Strategy::fs, Strategy::fe};
    return all;
}

struct StrategyTransform {
    Strategy strategy = Strategy::none;
    std::optional<SelectorModel> selector;
    std::optional<PcaModel> pca;

    Matrix apply(const Matrix& X) const {
        switch (strategy) {
            case Strategy::none: return X;
            case Strategy::fs: return selector->apply(X);
            case Strategy::fe: return pca->transform(X);
        }
        throw PipelineError("unknown strategy");
    }

    Eigen::Index output_dim(Eigen::Index input_dim) const {
        switch (strategy) {
            case Strategy::none: return input_dim;
            case Strategy::fs: return static_cast<Eigen::Index>(selector->selected_indices.size());
            case Strategy::fe: return pca->k;
        }
        return input_dim;
    }

    nlohmann::json to_json() const {
        nlohmann::json j{{"strategy", to_string(strategy)}};
        if (selector) j["selector"] = selector->to_json();
        if (pca) j["pca"] = pca->to_json();
        return j;
    }

    static StrategyTransform from_json(const nlohmann::json& j) {
        StrategyTransform t;
        const auto s = strategy_from_token(j.at("strategy").get<std::string>());
        if (!s) throw ValidationError("unknown strategy in transform file");
        t.strategy = *s;
        if (j.contains("selector")) t.selector = SelectorModel::from_json(j.at("selector"));
        if (j.contains("pca")) t.pca = PcaModel::from_json(j.at("pca"));
        return t;
    }
};

inline StrategyTransform fit_strategy(Strategy strategy, const DatasetMatrix& train,
                                      const std::string& kqi, uint64_t seed,
                                      double pca_retention = 0.95) {
    if (train.split_tag == SplitTag::test)
        throw LeakageError("fit_strategy: refusing a test-tagged matrix");
    StrategyTransform t;
    t.strategy = strategy;
    if (strategy == Strategy::fs) t.selector = fit_selector(train, kqi, seed);
    if (strategy == Strategy::fe) t.pca = fit_pca(train, pca_retention);
    return t;
}

}  // namespace kqi

#endif  // KQI_FEATURES_HPP

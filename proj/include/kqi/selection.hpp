#ifndef KQI_SELECTION_HPP
#define KQI_SELECTION_HPP

#include <chrono>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "kqi/common.hpp"
#include "kqi/data_model.hpp"
#include "kqi/regressors.hpp"

namespace kqi {

// ---------------------------------------------------------------------------
// Deterministic 5-fold cross-validation plan.
// ---------------------------------------------------------------------------

struct CvPlan {
    int n_folds = 5;
    std::vector<int> assignment;  // length n, fold id per row
    uint64_t seed = 0;
};

inline CvPlan make_folds(Eigen::Index n, uint64_t seed, int n_folds = 5) {
    if (n < n_folds)
        throw ValidationError("make_folds: need at least " + std::to_string(n_folds) +
                              " rows, got " + std::to_string(n));
    CvPlan plan;
    plan.n_folds = n_folds;
    plan.seed = seed;
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(seed, 0xf01d5u));
    rng.shuffle(order);

    plan.assignment.assign(static_cast<size_t>(n), 0);
    const Eigen::Index base = n / n_folds;
    const Eigen::Index extra = n % n_folds;
    size_t pos = 0;
    for (int f = 0; f < n_folds; ++f) {
        const Eigen::Index size = base + (f < extra ? 1 : 0);
        for (Eigen::Index i = 0; i < size; ++i)
            plan.assignment[static_cast<size_t>(order[pos++])] = f;
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Published hyperparameter grids, one cell per Cartesian combination,
// enumerated row-major in the listed value order.
// ---------------------------------------------------------------------------

inline std::vector<json> family_grid(Family family) {
    std::vector<json> cells;
    switch (family) {
        case Family::RF:
            for (int n_estimators : {1, 2, 3, 4, 5, 6})
                for (int max_depth : {5, 6, 7, 8, 9, 10})
                    cells.push_back(
                        {{"n_estimators", n_estimators}, {"max_depth", max_depth}});
            break;
        case Family::RR:
            for (double alpha : {1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4, 1e5})
                for (bool fit_intercept : {false, true})
                    cells.push_back({{"alpha", alpha}, {"fit_intercept", fit_intercept}});
            break;
        case Family::SVR:
            for (const char* kernel : {"poly", "rbf", "sigmoid"})
                for (int degree : {1, 2, 3, 4, 5, 6, 7})
                    for (double epsilon : {0.01, 0.1, 0.5, 1.0})
                        for (double C : {0.1, 1.0, 10.0, 100.0})
                            cells.push_back({{"kernel", kernel},
                                             {"degree", degree},
                                             {"epsilon", epsilon},
                                             {"C", C}});
            break;
        case Family::KNR:
            for (int leaf_size : {10, 20, 30})
                for (int n_neighbors : {2, 4, 6})
                    for (int p : {1, 2, 3})
                        cells.push_back({{"leaf_size", leaf_size},
                                         {"n_neighbors", n_neighbors},
                                         {"p", p}});
            break;
        case Family::NN:
            for (double alpha : {0.0001, 0.0003, 0.001, 0.003, 0.01})
                for (const auto& sizes : std::vector<std::vector<int>>{
                         {80}, {100}, {80, 80}, {100, 100}, {80, 80, 80},
                         {100, 100, 100}, {200, 200, 200}})
                    cells.push_back({{"alpha", alpha}, {"hidden_layer_sizes", sizes}});
            break;
        case Family::ABR:
            for (int n_estimators : {50, 75, 100, 125, 150})
                for (double learning_rate : {0.0, 0.333, 0.666, 1.0})
                    cells.push_back(
                        {{"n_estimators", n_estimators}, {"learning_rate", learning_rate}});
            break;
    }
    return cells;
}

// ---------------------------------------------------------------------------
// Exhaustive grid search scored by held-out-fold MAE.
// ---------------------------------------------------------------------------

struct CellResult {
    size_t cell_index = 0;
    json hyperparameters;
    std::vector<double> fold_mae;
    double mean_mae = std::numeric_limits<double>::infinity();
    double mean_fit_time_ms = 0.0;
    std::vector<std::string> notes;
};

struct GridResult {
    Family family;
    std::string kqi;
    std::vector<CellResult> cells;
    size_t best_index = 0;
    TrainedModel best_model;
};

namespace detail {

inline double fold_mae_score(const Vector& y_true, const Vector& y_pred) {
    return (y_true - y_pred).cwiseAbs().mean();
}

}  // namespace detail

// Evaluates every cell with 5-fold CV, refits the best cell on the full
// training split. A cell whose fit throws, or whose SVR solve fails to
// converge, is scored +inf and recorded rather than aborting the search.
// Per-cell seeds derive from (master_seed, cell index), so worker count and
// schedule never change the outcome.
inline GridResult grid_search(Family family, const std::vector<json>& grid,
                              const DatasetMatrix& train, const std::string& kqi,
                              const CvPlan& plan, uint64_t master_seed, int workers = 1) {
    if (train.split_tag == SplitTag::test)
        throw LeakageError("grid_search: refusing a test-tagged matrix");
    if (grid.empty()) throw ValidationError("grid_search: empty grid");
    const Eigen::Index n = train.rows();
    if (static_cast<size_t>(n) != plan.assignment.size())
        throw ValidationError("grid_search: fold plan does not match matrix rows");

    const Vector& y = train.target(kqi);

    // Precompute per-fold index sets.
    std::vector<std::vector<int>> fold_rows(static_cast<size_t>(plan.n_folds));
    for (Eigen::Index i = 0; i < n; ++i)
        fold_rows[static_cast<size_t>(plan.assignment[static_cast<size_t>(i)])].push_back(
            static_cast<int>(i));

    struct FoldData {
        Matrix X_fit, X_val;
        Vector y_fit, y_val;
    };
    std::vector<FoldData> folds(static_cast<size_t>(plan.n_folds));
    for (int f = 0; f < plan.n_folds; ++f) {
        const auto& val_rows = fold_rows[static_cast<size_t>(f)];
        const Eigen::Index n_val = static_cast<Eigen::Index>(val_rows.size());
        const Eigen::Index n_fit = n - n_val;
        FoldData& fd = folds[static_cast<size_t>(f)];
        fd.X_fit.resize(n_fit, train.cols());
        fd.y_fit.resize(n_fit);
        fd.X_val.resize(n_val, train.cols());
        fd.y_val.resize(n_val);
        Eigen::Index fit_at = 0, val_at = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (plan.assignment[static_cast<size_t>(i)] == f) {
                fd.X_val.row(val_at) = train.X.row(i);
                fd.y_val(val_at++) = y(i);
            } else {
                fd.X_fit.row(fit_at) = train.X.row(i);
                fd.y_fit(fit_at++) = y(i);
            }
        }
    }

    GridResult result;
    result.family = family;
    result.kqi = kqi;
    result.cells.resize(grid.size());

    parallel_for_indexed(grid.size(), workers, [&](size_t c) {
        CellResult& cell = result.cells[c];
        cell.cell_index = c;
        cell.hyperparameters = grid[c];
        EstimatorSpec spec{family, grid[c], mix_seed(master_seed, c)};

        double time_sum = 0.0;
        bool poisoned = false;
        for (int f = 0; f < plan.n_folds; ++f) {
            const FoldData& fd = folds[static_cast<size_t>(f)];
            try {
                const auto t0 = std::chrono::steady_clock::now();
                TrainedModel model = fit_estimator(spec, fd.X_fit, fd.y_fit);
                const auto t1 = std::chrono::steady_clock::now();
                time_sum += std::chrono::duration<double, std::milli>(t1 - t0).count();
                if (!model.converged()) {
                    poisoned = true;
                    cell.notes.push_back("fold " + std::to_string(f) +
                                         ": solver did not converge");
                    cell.fold_mae.push_back(std::numeric_limits<double>::infinity());
                    continue;
                }
                cell.fold_mae.push_back(
                    detail::fold_mae_score(fd.y_val, model.predict(fd.X_val)));
            } catch (const std::exception& e) {
                poisoned = true;
                cell.notes.push_back("fold " + std::to_string(f) + ": " + e.what());
                cell.fold_mae.push_back(std::numeric_limits<double>::infinity());
            }
        }
        cell.mean_fit_time_ms = time_sum / plan.n_folds;
        if (poisoned) {
            cell.mean_mae = std::numeric_limits<double>::infinity();
        } else {
            cell.mean_mae =
                std::accumulate(cell.fold_mae.begin(), cell.fold_mae.end(), 0.0) /
                static_cast<double>(cell.fold_mae.size());
        }
    });

    result.best_index = 0;
    for (size_t c = 1; c < result.cells.size(); ++c)
        if (result.cells[c].mean_mae < result.cells[result.best_index].mean_mae)
            result.best_index = c;

    EstimatorSpec best_spec{family, grid[result.best_index],
                            mix_seed(master_seed, result.best_index)};
    result.best_model = fit_estimator(best_spec, train.X, y);
    return result;
}

}  // namespace kqi

#endif  // KQI_SELECTION_HPP

#ifndef KQI_REGRESSORS_ADABOOST_HPP
#define KQI_REGRESSORS_ADABOOST_HPP

#include <algorithm>
#include <numeric>
#include <vector>

#include "kqi/common.hpp"
#include "kqi/regressors/tree.hpp"

namespace kqi {

// ---------------------------------------------------------------------------
// AdaBoost.R2 with a depth-3 regression tree base learner.
//
// Per round: weighted-bootstrap resample, fit a tree, linear loss normalized
// by the max error, average loss Lbar, beta = Lbar/(1-Lbar), sample weights
// scaled by beta^((1-loss)*learning_rate), round weight = lr*log(1/beta).
// Prediction is the weighted median over rounds. A perfect round stops
// boosting with weight 1; a round with Lbar >= 0.5 is discarded (kept with
// weight 1 when it would otherwise be the only round).
// ---------------------------------------------------------------------------

class AdaBoostModel {
public:
    int n_estimators = 50;
    double learning_rate = 1.0;
    uint64_t seed = 0;
    int base_max_depth = 3;

    void fit(const Matrix& X, const Vector& y) {
        if (n_estimators < 1) throw ValidationError("AdaBoostModel: n_estimators >= 1");
        if (learning_rate <= 0.0)
            throw ValidationError("AdaBoostModel: learning_rate must be > 0");
        const int n = static_cast<int>(X.rows());
        trees_.clear();
        round_weights_.clear();
        weight_sums_.clear();

        Vector w = Vector::Constant(n, 1.0 / n);
        std::vector<double> cdf(static_cast<size_t>(n));
        std::vector<int> rows(static_cast<size_t>(n));

        for (int round = 0; round < n_estimators; ++round) {
            // Weighted bootstrap by inverse-CDF sampling.
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                acc += w(i);
                cdf[static_cast<size_t>(i)] = acc;
            }
            Rng rng(mix_seed(seed, 0x6du, static_cast<uint64_t>(round)));
            for (int i = 0; i < n; ++i) {
                const double u = rng.uniform() * acc;
                const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
                rows[static_cast<size_t>(i)] =
                    static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), n - 1));
            }

            RegressionTree tree;
            RegressionTree::FitOptions opt;
            opt.max_depth = base_max_depth;
            tree.fit(X, y, rows, opt);

            const Vector pred = tree.predict(X);
            Vector err = (pred - y).cwiseAbs();
            const double err_max = err.maxCoeff();
            if (err_max <= 0.0) {
                trees_.push_back(std::move(tree));
                round_weights_.push_back(1.0);
                break;
            }
            err /= err_max;
            const double avg_loss = w.dot(err);
            if (avg_loss >= 0.5) {
                if (trees_.empty()) {
                    trees_.push_back(std::move(tree));
                    round_weights_.push_back(1.0);
                }
                break;
            }

            const double beta = avg_loss / (1.0 - avg_loss);
            trees_.push_back(std::move(tree));
            round_weights_.push_back(learning_rate * std::log(1.0 / beta));

            for (int i = 0; i < n; ++i)
                w(i) *= std::pow(beta, (1.0 - err(i)) * learning_rate);
            const double total = w.sum();
            if (total <= 0.0) break;
            w /= total;
            weight_sums_.push_back(w.sum());
        }
    }

    Vector predict(const Matrix& X) const {
        const size_t R = trees_.size();
        Matrix per_round(X.rows(), static_cast<Eigen::Index>(R));
        for (size_t r = 0; r < R; ++r)
            per_round.col(static_cast<Eigen::Index>(r)) = trees_[r].predict(X);

        Vector out(X.rows());
        std::vector<std::pair<double, size_t>> order(R);
        const double total =
            std::accumulate(round_weights_.begin(), round_weights_.end(), 0.0);
        for (Eigen::Index q = 0; q < X.rows(); ++q) {
            for (size_t r = 0; r < R; ++r)
                order[r] = {per_round(q, static_cast<Eigen::Index>(r)), r};
            std::sort(order.begin(), order.end());
            double cum = 0.0;
            double value = order.back().first;
            for (const auto& [pred, r] : order) {
                cum += round_weights_[r];
                if (cum >= 0.5 * total) {
                    value = pred;
                    break;
                }
            }
            out(q) = value;
        }
        return out;
    }

    const std::vector<RegressionTree>& trees() const { return trees_; }
    std::vector<RegressionTree>& trees() { return trees_; }
    const std::vector<double>& round_weights() const { return round_weights_; }
    std::vector<double>& round_weights() { return round_weights_; }
    // Sample-weight totals after each round's renormalization.
    const std::vector<double>& weight_sums() const { return weight_sums_; }

private:
    std::vector<RegressionTree> trees_;
    std::vector<double> round_weights_;
    std::vector<double> weight_sums_;
};

}  // namespace kqi

#endif  // KQI_REGRESSORS_ADABOOST_HPP

#ifndef KQI_REGRESSORS_TREE_HPP
#define KQI_REGRESSORS_TREE_HPP

#include <algorithm>
#include <vector>

#include "kqi/common.hpp"

namespace kqi {

// ---------------------------------------------------------------------------
// CART regression tree with variance-reduction splits. Used by the random
// forest, the AdaBoost base learner, and the importance forest behind feature
// selection.
//
// Split thresholds sit on observed values with a `<=` predicate, and ties in
// impurity decrease resolve to the earliest feature in scan order, so fits are
// exactly reproducible. When an importance accumulator is supplied, exact ties
// share the split credit equally; identical feature columns therefore receive
// identical importance.
// ---------------------------------------------------------------------------

class RegressionTree {
public:
    struct FitOptions {
        int max_depth = -1;  // -1 = unlimited
        int min_samples_split = 2;
        // Feature scan order (ties go to the earliest entry). Empty = 0..d-1.
        std::vector<int> scan_order;
        // Optional per-feature impurity-decrease accumulator (size d).
        std::vector<double>* importance_out = nullptr;
    };

    // `rows` may contain duplicates (bootstrap samples).
    void fit(const Matrix& X, const Vector& y, const std::vector<int>& rows,
             const FitOptions& opt = {}) {
        if (rows.empty()) throw ValidationError("RegressionTree: no rows to fit");
        d_ = X.cols();
        nodes_.clear();

        std::vector<int> order = opt.scan_order;
        if (order.empty()) {
            order.resize(static_cast<size_t>(d_));
            for (int i = 0; i < d_; ++i) order[static_cast<size_t>(i)] = i;
        }
        const double n_root = static_cast<double>(rows.size());

        struct Work {
            std::vector<int> rows;
            int node;
            int depth;
        };
        std::vector<Work> stack;
        nodes_.push_back({});
        stack.push_back({rows, 0, 0});

        std::vector<std::pair<double, double>> sorted;  // (feature value, target)
        std::vector<int> tied;

        while (!stack.empty()) {
            Work w = std::move(stack.back());
            stack.pop_back();
            Node& node = nodes_[static_cast<size_t>(w.node)];

            const size_t n = w.rows.size();
            double sum = 0.0;
            for (int r : w.rows) sum += y(r);
            node.value = sum / static_cast<double>(n);

            if (static_cast<int>(n) < opt.min_samples_split ||
                (opt.max_depth >= 0 && w.depth >= opt.max_depth)) {
                continue;
            }

            // Parent sum-of-squares term is constant across candidate splits,
            // so maximize sumL^2/nL + sumR^2/nR.
            const double parent_score = sum * sum / static_cast<double>(n);
            double best_gain = 0.0;
            int best_feature = -1;
            double best_threshold = 0.0;
            tied.clear();

            for (int f : order) {
                sorted.clear();
                sorted.reserve(n);
                for (int r : w.rows) sorted.emplace_back(X(r, f), y(r));
                std::stable_sort(sorted.begin(), sorted.end(),
                                 [](const auto& a, const auto& b) { return a.first < b.first; });
                if (sorted.front().first == sorted.back().first) continue;

                double left_sum = 0.0;
                double feat_best_gain = 0.0;
                double feat_best_threshold = 0.0;
                bool feat_has_split = false;
                for (size_t i = 0; i + 1 < n; ++i) {
                    left_sum += sorted[i].second;
                    if (sorted[i].first == sorted[i + 1].first) continue;
                    const double nl = static_cast<double>(i + 1);
                    const double nr = static_cast<double>(n - i - 1);
                    const double right_sum = sum - left_sum;
                    const double gain =
                        left_sum * left_sum / nl + right_sum * right_sum / nr - parent_score;
                    if (!feat_has_split || gain > feat_best_gain) {
                        feat_has_split = true;
                        feat_best_gain = gain;
                        feat_best_threshold = sorted[i].first;
                    }
                }
                if (!feat_has_split || feat_best_gain <= 0.0) continue;
                if (best_feature < 0 || feat_best_gain > best_gain) {
                    best_gain = feat_best_gain;
                    best_feature = f;
                    best_threshold = feat_best_threshold;
                    tied.clear();
                    tied.push_back(f);
                } else if (feat_best_gain == best_gain) {
                    tied.push_back(f);
                }
            }
            if (best_feature < 0) continue;

            if (opt.importance_out) {
                const double credit = best_gain / n_root / static_cast<double>(tied.size());
                for (int f : tied) (*opt.importance_out)[static_cast<size_t>(f)] += credit;
            }

            std::vector<int> left_rows, right_rows;
            left_rows.reserve(n);
            right_rows.reserve(n);
            for (int r : w.rows)
                (X(r, best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);

            const int left_id = static_cast<int>(nodes_.size());
            const int right_id = left_id + 1;
            nodes_.push_back({});
            nodes_.push_back({});
            // Re-reference: the two push_backs may have reallocated.
            Node& parent = nodes_[static_cast<size_t>(w.node)];
            parent.feature = best_feature;
            parent.threshold = best_threshold;
            parent.left = left_id;
            parent.right = right_id;
            stack.push_back({std::move(right_rows), right_id, w.depth + 1});
            stack.push_back({std::move(left_rows), left_id, w.depth + 1});
        }
    }

    template <typename RowExpr>
    double predict_row(const RowExpr& x) const {
        int i = 0;
        while (nodes_[static_cast<size_t>(i)].feature >= 0) {
            const Node& nd = nodes_[static_cast<size_t>(i)];
            i = x(nd.feature) <= nd.threshold ? nd.left : nd.right;
        }
        return nodes_[static_cast<size_t>(i)].value;
    }

    Vector predict(const Matrix& X) const {
        Vector out(X.rows());
        for (Eigen::Index r = 0; r < X.rows(); ++r) out(r) = predict_row(X.row(r));
        return out;
    }

    struct Node {
        int feature = -1;  // -1 => leaf
        double threshold = 0.0;
        double value = 0.0;
        int left = -1;
        int right = -1;
    };

    const std::vector<Node>& nodes() const { return nodes_; }
    Eigen::Index n_features() const { return d_; }

    void restore(std::vector<Node> nodes, Eigen::Index d) {
        nodes_ = std::move(nodes);
        d_ = d;
    }

private:
    std::vector<Node> nodes_;
    Eigen::Index d_ = 0;
};

}  // namespace kqi

#endif  // KQI_REGRESSORS_TREE_HPP

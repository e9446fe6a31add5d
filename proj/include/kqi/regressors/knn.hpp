#ifndef KQI_REGRESSORS_KNN_HPP
#define KQI_REGRESSORS_KNN_HPP

#include <algorithm>
#include <vector>

#include "kqi/common.hpp"

namespace kqi {

// Minkowski distance raised to the p-th power, accumulated in fixed index
// order. Monotone in the true distance, so neighbor ranking is unaffected.
template <typename RowA, typename RowB>
inline double minkowski_pow(const RowA& a, const RowB& b, int p, Eigen::Index d) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        const double diff = std::abs(a(i) - b(i));
        if (p == 1)
            acc += diff;
        else if (p == 2)
            acc += diff * diff;
        else
            acc += std::pow(diff, p);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// k-nearest-neighbors regression with a kd-tree. Uniform weights; distance
// ties break toward the lower training index. leaf_size only shapes the tree,
// never the answer.
// ---------------------------------------------------------------------------

class KnnModel {
public:
    int n_neighbors = 4;
    int p = 2;
    int leaf_size = 30;

    void fit(const Matrix& X, const Vector& y) {
        if (X.rows() < n_neighbors)
            throw ValidationError("KnnModel: n_neighbors exceeds training size");
        if (n_neighbors < 1) throw ValidationError("KnnModel: n_neighbors must be >= 1");
        if (p < 1) throw ValidationError("KnnModel: p must be >= 1");
        if (leaf_size < 1) throw ValidationError("KnnModel: leaf_size must be >= 1");
        X_ = X;
        y_ = y;
        build_tree();
    }

    Vector predict(const Matrix& Q) const {
        Vector out(Q.rows());
        std::vector<Neighbor> heap;
        for (Eigen::Index r = 0; r < Q.rows(); ++r) {
            heap.clear();
            search(0, Q.row(r), heap);
            std::sort(heap.begin(), heap.end());
            double sum = 0.0;
            for (const Neighbor& nb : heap) sum += y_(nb.index);
            out(r) = sum / static_cast<double>(heap.size());
        }
        return out;
    }

    const Matrix& train_X() const { return X_; }
    const Vector& train_y() const { return y_; }

    // Restores a serialized model (training set + hyperparameters).
    void restore(Matrix X, Vector y) {
        X_ = std::move(X);
        y_ = std::move(y);
        build_tree();
    }

private:
    struct Neighbor {
        double dist;
        int index;
        bool operator<(const Neighbor& o) const {
            return dist < o.dist || (dist == o.dist && index < o.index);
        }
    };

    struct TreeNode {
        int left = -1;
        int right = -1;
        int axis = -1;
        double split_value = 0.0;
        int begin = 0;  // leaf: range into indices_
        int end = 0;
    };

    void build_tree() {
        indices_.resize(static_cast<size_t>(X_.rows()));
        for (size_t i = 0; i < indices_.size(); ++i) indices_[i] = static_cast<int>(i);
        nodes_.clear();
        build_node(0, static_cast<int>(indices_.size()));
    }

    int build_node(int begin, int end) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back({});
        const int n = end - begin;
        if (n <= leaf_size) {
            nodes_[static_cast<size_t>(id)].begin = begin;
            nodes_[static_cast<size_t>(id)].end = end;
            return id;
        }
        // Split on the axis with the widest spread; ties to the lower axis.
        int axis = 0;
        double best_spread = -1.0;
        for (Eigen::Index c = 0; c < X_.cols(); ++c) {
            double lo = X_(indices_[static_cast<size_t>(begin)], c);
            double hi = lo;
            for (int i = begin + 1; i < end; ++i) {
                const double v = X_(indices_[static_cast<size_t>(i)], c);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (hi - lo > best_spread) {
                best_spread = hi - lo;
                axis = static_cast<int>(c);
            }
        }
        const int mid = begin + n / 2;
        std::nth_element(indices_.begin() + begin, indices_.begin() + mid,
                         indices_.begin() + end, [&](int a, int b) {
                             const double va = X_(a, axis), vb = X_(b, axis);
                             return va < vb || (va == vb && a < b);
                         });
        const double split_value = X_(indices_[static_cast<size_t>(mid)], axis);
        const int left = build_node(begin, mid);
        const int right = build_node(mid, end);
        TreeNode& node = nodes_[static_cast<size_t>(id)];
        node.axis = axis;
        node.split_value = split_value;
        node.left = left;
        node.right = right;
        return id;
    }

    template <typename RowExpr>
    void search(int node_id, const RowExpr& q, std::vector<Neighbor>& heap) const {
        const TreeNode& node = nodes_[static_cast<size_t>(node_id)];
        if (node.axis < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                const int idx = indices_[static_cast<size_t>(i)];
                const Neighbor cand{minkowski_pow(q, X_.row(idx), p, X_.cols()), idx};
                if (static_cast<int>(heap.size()) < n_neighbors) {
                    heap.push_back(cand);
                    std::push_heap(heap.begin(), heap.end());
                } else if (cand < heap.front()) {
                    std::pop_heap(heap.begin(), heap.end());
                    heap.back() = cand;
                    std::push_heap(heap.begin(), heap.end());
                }
            }
            return;
        }
        const double qv = q(node.axis);
        const int near = qv <= node.split_value ? node.left : node.right;
        const int far = near == node.left ? node.right : node.left;
        search(near, q, heap);
        // Explore the far side unless the axis gap alone already exceeds the
        // current worst neighbor; equal gaps must still be explored so that
        // equal-distance, lower-index candidates are found.
        double gap = qv <= node.split_value ? node.split_value - qv : qv - node.split_value;
        if (gap < 0.0) gap = 0.0;
        const double gap_pow = p == 1 ? gap : (p == 2 ? gap * gap : std::pow(gap, p));
        if (static_cast<int>(heap.size()) < n_neighbors || gap_pow <= heap.front().dist)
            search(far, q, heap);
    }

    Matrix X_;
    Vector y_;
    std::vector<int> indices_;
    std::vector<TreeNode> nodes_;
};

}  // namespace kqi

#endif  // KQI_REGRESSORS_KNN_HPP

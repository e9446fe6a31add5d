#ifndef KQI_REGRESSORS_FOREST_HPP
#define KQI_REGRESSORS_FOREST_HPP

#include <vector>

#include "kqi/common.hpp"
#include "kqi/regressors/tree.hpp"

namespace kqi {

// Random forest: n_estimators bootstrap CART trees, all features considered at
// every split, prediction = mean over trees.
class RandomForestModel {
public:
    int n_estimators = 6;
    int max_depth = 10;
    uint64_t seed = 0;

    void fit(const Matrix& X, const Vector& y) {
        if (n_estimators < 1) throw ValidationError("RandomForestModel: n_estimators >= 1");
        const int n = static_cast<int>(X.rows());
        trees_.assign(static_cast<size_t>(n_estimators), {});
        std::vector<int> rows(static_cast<size_t>(n));
        for (int t = 0; t < n_estimators; ++t) {
            Rng rng(mix_seed(seed, 0x2fu, static_cast<uint64_t>(t)));
            for (int i = 0; i < n; ++i)
                rows[static_cast<size_t>(i)] = static_cast<int>(rng.uniform_int(n));
            RegressionTree::FitOptions opt;
            opt.max_depth = max_depth;
            trees_[static_cast<size_t>(t)].fit(X, y, rows, opt);
        }
    }

    Vector predict(const Matrix& X) const {
        Vector out = Vector::Zero(X.rows());
        for (const auto& tree : trees_) out += tree.predict(X);
        return out / static_cast<double>(trees_.size());
    }

    const std::vector<RegressionTree>& trees() const { return trees_; }
    std::vector<RegressionTree>& trees() { return trees_; }

private:
    std::vector<RegressionTree> trees_;
};

}  // namespace kqi

#endif  // KQI_REGRESSORS_FOREST_HPP

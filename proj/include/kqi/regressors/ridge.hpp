#ifndef KQI_REGRESSORS_RIDGE_HPP
#define KQI_REGRESSORS_RIDGE_HPP

#include "kqi/common.hpp"

namespace kqi {

// Ridge regression via the normal equations. The intercept is fitted by
// centering and is never penalized.
class RidgeModel {
public:
    double alpha = 1.0;
    bool fit_intercept = true;

    void fit(const Matrix& X, const Vector& y) {
        const Eigen::Index d = X.cols();
        Matrix Xc = X;
        double y_mean = 0.0;
        Vector x_mean = Vector::Zero(d);
        Vector yc = y;
        if (fit_intercept) {
            x_mean = X.colwise().mean();
            Xc = X.rowwise() - x_mean.transpose();
            y_mean = y.mean();
            yc = y.array() - y_mean;
        }
        Matrix gram = Xc.transpose() * Xc;
        gram.diagonal().array() += alpha;
        const Vector rhs = Xc.transpose() * yc;
        if (alpha > 0.0) {
            Eigen::LDLT<Matrix> ldlt(gram);
            if (ldlt.info() == Eigen::Success) {
                weights_ = ldlt.solve(rhs);
            } else {
                weights_ = gram.completeOrthogonalDecomposition().solve(rhs);
            }
        } else {
            // Unregularized fallback: minimum-norm least squares.
            weights_ = Xc.completeOrthogonalDecomposition().solve(yc);
        }
        intercept_ = fit_intercept ? y_mean - x_mean.dot(weights_) : 0.0;
    }

    Vector predict(const Matrix& X) const {
        return (X * weights_).array() + intercept_;
    }

    const Vector& weights() const { return weights_; }
    double intercept() const { return intercept_; }
    void set_parameters(Vector w, double b) {
        weights_ = std::move(w);
        intercept_ = b;
    }

private:
    Vector weights_;
    double intercept_ = 0.0;
};

}  // namespace kqi

#endif  // KQI_REGRESSORS_RIDGE_HPP

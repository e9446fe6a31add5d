#ifndef KQI_REGRESSORS_SVR_HPP
#define KQI_REGRESSORS_SVR_HPP

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "kqi/common.hpp"

namespace kqi {

enum class SvrKernel { poly, rbf, sigmoid };

inline const char* to_string(SvrKernel k) {
    switch (k) {
        case SvrKernel::poly: return "poly";
        case SvrKernel::rbf: return "rbf";
        case SvrKernel::sigmoid: return "sigmoid";
    }
    return "?";
}

inline std::optional<SvrKernel> svr_kernel_from_string(std::string_view s) {
    if (s == "poly") return SvrKernel::poly;
    if (s == "rbf") return SvrKernel::rbf;
    if (s == "sigmoid") return SvrKernel::sigmoid;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// epsilon-insensitive support vector regression, dual solved by SMO with
// maximal-violating-pair selection. gamma follows the 1/(d*var(X)) convention
// and coef0 is fixed at 0. The solver stops when the KKT violation drops below
// `tol` or after `max_iterations` pair updates; the convergence flag records
// which happened.
// ---------------------------------------------------------------------------

class SvrModel {
public:
    SvrKernel kernel = SvrKernel::rbf;
    int degree = 3;
    double epsilon = 0.1;
    double C = 1.0;
    double tol = 1e-3;
    long long max_iterations = 100000;

    void fit(const Matrix& X, const Vector& y) {
        const Eigen::Index n = X.rows();
        if (n < 2) throw ValidationError("SvrModel: need at least 2 samples");
        gamma_ = scale_gamma(X);

        // Full kernel matrix; at the session-granularity scales this solver
        // targets, n^2 doubles are cheap and make the SMO loop memory-bound
        // rather than compute-bound.
        Matrix K = kernel_matrix(X, X);

        // 2n box variables: z[t] = alpha_plus[t] for t<n, alpha_minus[t-n] after.
        // lab is +1 for the first block, -1 for the second.
        const Eigen::Index n2 = 2 * n;
        Vector z = Vector::Zero(n2);
        Vector g(n2);  // gradient of 1/2 z'Qz + p'z
        for (Eigen::Index i = 0; i < n; ++i) {
            g(i) = epsilon - y(i);
            g(i + n) = epsilon + y(i);
        }

        const auto lab = [n](Eigen::Index t) { return t < n ? 1.0 : -1.0; };

        converged_ = false;
        kkt_residual_ = std::numeric_limits<double>::infinity();
        long long it = 0;
        for (; it < max_iterations; ++it) {
            // Maximal violating pair over -lab*g.
            double up_best = -std::numeric_limits<double>::infinity();
            double low_best = std::numeric_limits<double>::infinity();
            Eigen::Index i = -1, j = -1;
            for (Eigen::Index t = 0; t < n2; ++t) {
                const double v = -lab(t) * g(t);
                const bool at_upper = z(t) >= C;
                const bool at_lower = z(t) <= 0.0;
                const bool in_up = lab(t) > 0 ? !at_upper : !at_lower;
                const bool in_low = lab(t) > 0 ? !at_lower : !at_upper;
                if (in_up && v > up_best) {
                    up_best = v;
                    i = t;
                }
                if (in_low && v < low_best) {
                    low_best = v;
                    j = t;
                }
            }
            if (i < 0 || j < 0) break;
            kkt_residual_ = up_best - low_best;
            if (kkt_residual_ < tol) {
                converged_ = true;
                break;
            }

            const Eigen::Index bi = i % n, bj = j % n;
            double quad = K(bi, bi) + K(bj, bj) - 2.0 * K(bi, bj);
            if (quad <= 1e-12) quad = 1e-12;  // sigmoid kernels can be indefinite

            // Step along d = lab_i*e_i - lab_j*e_j keeps the equality constraint.
            double step = -(lab(i) * g(i) - lab(j) * g(j)) / quad;
            double lo, hi;
            if (lab(i) > 0) {
                lo = -z(i);
                hi = C - z(i);
            } else {
                lo = z(i) - C;
                hi = z(i);
            }
            if (lab(j) > 0) {
                lo = std::max(lo, z(j) - C);
                hi = std::min(hi, z(j));
            } else {
                lo = std::max(lo, -z(j));
                hi = std::min(hi, C - z(j));
            }
            step = std::clamp(step, lo, hi);
            if (step == 0.0) break;  // numerically stuck at the box boundary

            z(i) += lab(i) * step;
            z(j) -= lab(j) * step;
            z(i) = std::clamp(z(i), 0.0, C);
            z(j) = std::clamp(z(j), 0.0, C);

            // g_s += lab_s * step * (K(s,bi) - K(s,bj)) for all 2n entries.
            Vector delta = step * (K.col(bi) - K.col(bj));
            g.head(n) += delta;
            g.tail(n) -= delta;
        }
        // Offset from the KKT conditions (midpoint of bounds if no free vars).
        double ub = std::numeric_limits<double>::infinity();
        double lb = -std::numeric_limits<double>::infinity();
        double sum_free = 0.0;
        int n_free = 0;
        for (Eigen::Index t = 0; t < n2; ++t) {
            const double yg = lab(t) * g(t);
            if (z(t) >= C) {
                if (lab(t) < 0)
                    ub = std::min(ub, yg);
                else
                    lb = std::max(lb, yg);
            } else if (z(t) <= 0.0) {
                if (lab(t) > 0)
                    ub = std::min(ub, yg);
                else
                    lb = std::max(lb, yg);
            } else {
                ++n_free;
                sum_free += yg;
            }
        }
        const double rho = n_free > 0 ? sum_free / n_free : (ub + lb) / 2.0;
        offset_ = -rho;

        // Final dual objective, used by the solver-equivalence checks:
        // f(z) = 1/2 z'(g + p) with g the final gradient.
        dual_objective_ = 0.0;
        for (Eigen::Index i2 = 0; i2 < n; ++i2) {
            dual_objective_ += 0.5 * z(i2) * (g(i2) + epsilon - y(i2));
            dual_objective_ += 0.5 * z(i2 + n) * (g(i2 + n) + epsilon + y(i2));
        }

        // Keep only support vectors.
        std::vector<Eigen::Index> sv;
        for (Eigen::Index r = 0; r < n; ++r)
            if (z(r) - z(r + n) != 0.0) sv.push_back(r);
        support_vectors_.resize(static_cast<Eigen::Index>(sv.size()), X.cols());
        coefficients_.resize(static_cast<Eigen::Index>(sv.size()));
        for (size_t s = 0; s < sv.size(); ++s) {
            support_vectors_.row(static_cast<Eigen::Index>(s)) = X.row(sv[s]);
            coefficients_(static_cast<Eigen::Index>(s)) = z(sv[s]) - z(sv[s] + n);
        }
    }

    Vector predict(const Matrix& Q) const {
        if (support_vectors_.rows() == 0)
            return Vector::Constant(Q.rows(), offset_);
        const Matrix K = kernel_matrix(Q, support_vectors_);
        return (K * coefficients_).array() + offset_;
    }

    bool converged() const { return converged_; }
    double kkt_residual() const { return kkt_residual_; }
    double dual_objective() const { return dual_objective_; }
    double gamma() const { return gamma_; }
    double offset() const { return offset_; }
    const Matrix& support_vectors() const { return support_vectors_; }
    const Vector& coefficients() const { return coefficients_; }

    void restore(Matrix sv, Vector coef, double offset, double gamma, bool conv) {
        support_vectors_ = std::move(sv);
        coefficients_ = std::move(coef);
        offset_ = offset;
        gamma_ = gamma;
        converged_ = conv;
    }

    // The "scale" convention: 1/(d * var(all entries)); 1.0 for flat inputs.
    static double scale_gamma(const Matrix& X) {
        const double mean = X.mean();
        const double var = (X.array() - mean).square().sum() /
                           static_cast<double>(X.size());
        if (var <= 0.0) return 1.0;
        return 1.0 / (static_cast<double>(X.cols()) * var);
    }

    Matrix kernel_matrix(const Matrix& A, const Matrix& B) const {
        switch (kernel) {
            case SvrKernel::rbf: {
                const Vector a2 = A.rowwise().squaredNorm();
                const Vector b2 = B.rowwise().squaredNorm();
                Matrix K = -2.0 * (A * B.transpose());
                K.colwise() += a2;
                K.rowwise() += b2.transpose();
                return (-gamma_ * K.array()).exp();
            }
            case SvrKernel::poly: {
                Matrix K = gamma_ * (A * B.transpose());
                return K.array().pow(degree);
            }
            case SvrKernel::sigmoid: {
                Matrix K = gamma_ * (A * B.transpose());
                return K.array().tanh();
            }
        }
        throw PipelineError("unknown SVR kernel");
    }

private:
    double gamma_ = 1.0;
    Matrix support_vectors_;
    Vector coefficients_;
    double offset_ = 0.0;
    bool converged_ = false;
    double kkt_residual_ = 0.0;
    double dual_objective_ = 0.0;
};

}  // namespace kqi

#endif  // KQI_REGRESSORS_SVR_HPP

#ifndef KQI_REGRESSORS_MLP_HPP
#define KQI_REGRESSORS_MLP_HPP

#include <vector>

#include "kqi/common.hpp"

namespace kqi {

// ---------------------------------------------------------------------------
// Multilayer perceptron for regression: ReLU hidden layers, linear output,
// squared loss with an L2 penalty on the weights, trained with Adam on
// shuffled minibatches. Templated on the scalar so the pipeline can run in
// float while numerical checks instantiate double.
//
// Batch loss for a minibatch of size m:
//   L = 1/(2m) * sum (yhat - y)^2  +  alpha/(2m) * sum_l |W_l|^2
// ---------------------------------------------------------------------------

template <typename Scalar>
class MlpModelT {
public:
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

    double alpha = 1e-4;
    std::vector<int> hidden_layer_sizes = {100};
    uint64_t seed = 0;
    int epochs = 200;
    int max_batch = 200;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;

    void fit(const Matrix& X, const Vector& y) {
        const Eigen::Index n = X.rows();
        const Eigen::Index d = X.cols();
        init_layers(d);

        const Mat Xs = X.cast<Scalar>();
        const Vec ys = y.cast<Scalar>();

        // Adam state
        std::vector<Mat> mW(weights_.size()), vW(weights_.size());
        std::vector<RowVec> mB(biases_.size()), vB(biases_.size());
        for (size_t l = 0; l < weights_.size(); ++l) {
            mW[l] = Mat::Zero(weights_[l].rows(), weights_[l].cols());
            vW[l] = Mat::Zero(weights_[l].rows(), weights_[l].cols());
            mB[l] = RowVec::Zero(biases_[l].cols());
            vB[l] = RowVec::Zero(biases_[l].cols());
        }

        const Eigen::Index batch = std::min<Eigen::Index>(max_batch, n);
        std::vector<int> order(static_cast<size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) order[static_cast<size_t>(i)] = static_cast<int>(i);

        std::vector<Mat> dW(weights_.size());
        std::vector<RowVec> dB(biases_.size());
        Mat Xb;
        Vec yb;
        long long t_step = 0;

        for (int epoch = 0; epoch < epochs; ++epoch) {
            Rng shuffle_rng(mix_seed(seed, 0x5u, static_cast<uint64_t>(epoch)));
            shuffle_rng.shuffle(order);
            for (Eigen::Index offset = 0; offset < n; offset += batch) {
                const Eigen::Index m = std::min(batch, n - offset);
                Xb.resize(m, d);
                yb.resize(m);
                for (Eigen::Index r = 0; r < m; ++r) {
                    const int src = order[static_cast<size_t>(offset + r)];
                    Xb.row(r) = Xs.row(src);
                    yb(r) = ys(src);
                }
                gradients(Xb, yb, dW, dB);

                ++t_step;
                const Scalar bc1 =
                    Scalar(1) / Scalar(1.0 - std::pow(beta1, static_cast<double>(t_step)));
                const Scalar bc2 =
                    Scalar(1) / Scalar(1.0 - std::pow(beta2, static_cast<double>(t_step)));
                for (size_t l = 0; l < weights_.size(); ++l) {
                    mW[l] = Scalar(beta1) * mW[l] + Scalar(1.0 - beta1) * dW[l];
                    vW[l] = Scalar(beta2) * vW[l] +
                            Scalar(1.0 - beta2) * dW[l].array().square().matrix();
                    weights_[l].array() -=
                        Scalar(learning_rate) * (mW[l].array() * bc1) /
                        ((vW[l].array() * bc2).sqrt() + Scalar(adam_eps));
                    mB[l] = Scalar(beta1) * mB[l] + Scalar(1.0 - beta1) * dB[l];
                    vB[l] = Scalar(beta2) * vB[l] +
                            Scalar(1.0 - beta2) * dB[l].array().square().matrix();
                    biases_[l].array() -=
                        Scalar(learning_rate) * (mB[l].array() * bc1) /
                        ((vB[l].array() * bc2).sqrt() + Scalar(adam_eps));
                }
            }
        }
    }

    Vector predict(const Matrix& X) const {
        Mat a = X.cast<Scalar>();
        for (size_t l = 0; l < weights_.size(); ++l) {
            Mat z = (a * weights_[l]).rowwise() + biases_[l].row(0);
            if (l + 1 < weights_.size()) z = z.array().max(Scalar(0)).matrix();
            a = std::move(z);
        }
        return a.col(0).template cast<double>();
    }

    // Loss on a batch with current parameters (used by the gradient check).
    double loss(const Matrix& X, const Vector& y) const {
        const Mat Xs = X.cast<Scalar>();
        const Vec ys = y.cast<Scalar>();
        Mat a = Xs;
        for (size_t l = 0; l < weights_.size(); ++l) {
            Mat z = (a * weights_[l]).rowwise() + biases_[l].row(0);
            if (l + 1 < weights_.size()) z = z.array().max(Scalar(0)).matrix();
            a = std::move(z);
        }
        const double m = static_cast<double>(X.rows());
        double value =
            (a.col(0) - ys).squaredNorm() / (2.0 * m);
        double penalty = 0.0;
        for (const Mat& W : weights_) penalty += static_cast<double>(W.squaredNorm());
        return value + alpha / (2.0 * m) * penalty;
    }

    // Analytic gradients of `loss` on the given batch.
    void gradients(const Mat& Xb, const Vec& yb, std::vector<Mat>& dW,
                   std::vector<RowVec>& dB) const {
        const size_t L = weights_.size();
        const Eigen::Index m = Xb.rows();
        std::vector<Mat> activations(L + 1);
        std::vector<Mat> pre(L);
        activations[0] = Xb;
        for (size_t l = 0; l < L; ++l) {
            pre[l] = (activations[l] * weights_[l]).rowwise() + biases_[l].row(0);
            activations[l + 1] =
                l + 1 < L ? pre[l].array().max(Scalar(0)).matrix() : pre[l];
        }

        dW.resize(L);
        dB.resize(L);
        Mat delta = activations[L];
        delta.col(0) -= yb;
        delta /= Scalar(m);
        for (size_t l = L; l-- > 0;) {
            dW[l] = activations[l].transpose() * delta +
                    Scalar(alpha / static_cast<double>(m)) * weights_[l];
            dB[l] = delta.colwise().sum();
            if (l > 0) {
                const Mat back = delta * weights_[l].transpose();
                delta = (back.array() *
                         (pre[l - 1].array() > Scalar(0)).template cast<Scalar>())
                            .matrix();
            }
        }
    }

    std::vector<Mat>& weights() { return weights_; }
    std::vector<RowVec>& biases() { return biases_; }
    const std::vector<Mat>& weights() const { return weights_; }
    const std::vector<RowVec>& biases() const { return biases_; }

    void init_layers(Eigen::Index d_in) {
        std::vector<Eigen::Index> sizes;
        sizes.push_back(d_in);
        for (int h : hidden_layer_sizes) {
            if (h < 1) throw ValidationError("MlpModel: hidden layer size must be >= 1");
            sizes.push_back(h);
        }
        sizes.push_back(1);

        Rng rng(mix_seed(seed, 0x11u));
        weights_.clear();
        biases_.clear();
        for (size_t l = 0; l + 1 < sizes.size(); ++l) {
            const Eigen::Index fan_in = sizes[l], fan_out = sizes[l + 1];
            const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
            Mat W(fan_in, fan_out);
            for (Eigen::Index i = 0; i < fan_in; ++i)
                for (Eigen::Index j = 0; j < fan_out; ++j)
                    W(i, j) = Scalar(rng.uniform(-limit, limit));
            RowVec b(fan_out);
            for (Eigen::Index j = 0; j < fan_out; ++j)
                b(j) = Scalar(rng.uniform(-limit, limit));
            weights_.push_back(std::move(W));
            biases_.push_back(std::move(b));
        }
    }

private:
    std::vector<Mat> weights_;
    std::vector<RowVec> biases_;
};

using MlpModel = MlpModelT<float>;

}  // namespace kqi

#endif  // KQI_REGRESSORS_MLP_HPP

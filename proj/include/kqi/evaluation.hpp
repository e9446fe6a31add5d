#ifndef KQI_EVALUATION_HPP
#define KQI_EVALUATION_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kqi/common.hpp"
#include "kqi/data_model.hpp"
#include "kqi/features.hpp"
#include "kqi/preprocess.hpp"
#include "kqi/regressors.hpp"

namespace kqi {

// ---------------------------------------------------------------------------
// Error metrics
// ---------------------------------------------------------------------------

inline double mae(const Vector& y, const Vector& y_hat) {
    if (y.size() == 0 || y.size() != y_hat.size())
        throw ValidationError("mae: need equal non-zero lengths");
    return (y - y_hat).cwiseAbs().mean();
}

// Scaled MAE: sum of absolute errors over the sum of ground truth. Undefined
// when the ground truth does not sum to a positive value.
inline std::optional<double> mae_pct(const Vector& y, const Vector& y_hat) {
    if (y.size() == 0 || y.size() != y_hat.size())
        throw ValidationError("mae_pct: need equal non-zero lengths");
    const double denom = y.sum();
    if (denom <= 0.0) return std::nullopt;
    return (y - y_hat).cwiseAbs().sum() / denom;
}

enum class Band { proper, suitable, acceptable, inappropriate };

inline const char* to_string(Band b) {
    switch (b) {
        case Band::proper: return "proper";
        case Band::suitable: return "suitable";
        case Band::acceptable: return "acceptable";
        case Band::inappropriate: return "inappropriate";
    }
    return "?";
}

// <10% proper, [10%,20%) suitable, [20%,50%] acceptable, >50% inappropriate.
inline Band band(double mae_pct_value) {
    if (mae_pct_value < 0.10) return Band::proper;
    if (mae_pct_value < 0.20) return Band::suitable;
    if (mae_pct_value <= 0.50) return Band::acceptable;
    return Band::inappropriate;
}

// ---------------------------------------------------------------------------
// Prediction timing: mean wall-clock per sample over `repeats` full-batch
// predictions after one warm-up. The callable must run the fitted transform
// chain plus the model, nothing else.
// ---------------------------------------------------------------------------

template <typename Fn>
inline double ptime_us(Fn&& predict_batch, Eigen::Index batch_rows, int repeats = 10) {
    if (batch_rows <= 0) throw ValidationError("ptime: empty batch");
    if (repeats < 1) repeats = 1;
    predict_batch();
    double total_us = 0.0;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        predict_batch();
        const auto t1 = std::chrono::steady_clock::now();
        total_us += std::chrono::duration<double, std::micro>(t1 - t0).count();
    }
    return total_us / repeats / static_cast<double>(batch_rows);
}

// ---------------------------------------------------------------------------
// Mutual information between KQIs under equal-frequency binning, in bits.
// ---------------------------------------------------------------------------

struct MiMatrix {
    std::vector<std::string> names;
    Matrix mi;   // bits, symmetric, diagonal = binned entropies
    int bins = 16;

    json to_json() const {
        json rows = json::array();
        for (Eigen::Index r = 0; r < mi.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < mi.cols(); ++c) row.push_back(mi(r, c));
            rows.push_back(std::move(row));
        }
        return json{{"kqis", names},
                    {"bins", bins},
                    {"binning", "equal_frequency"},
                    {"units", "bits"},
                    {"matrix", std::move(rows)}};
    }
};

namespace detail {

inline std::vector<int> quantile_bins(const Vector& v, int bins, int& n_bins_out) {
    const Eigen::Index n = v.size();
    std::vector<double> sorted(v.data(), v.data() + n);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;
    for (int i = 1; i < bins; ++i) {
        const size_t idx = static_cast<size_t>(i) * static_cast<size_t>(n) /
                           static_cast<size_t>(bins);
        edges.push_back(sorted[std::min<size_t>(idx, static_cast<size_t>(n - 1))]);
    }
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    std::vector<int> out(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        out[static_cast<size_t>(i)] = static_cast<int>(
            std::upper_bound(edges.begin(), edges.end(), v(i)) - edges.begin());
    n_bins_out = static_cast<int>(edges.size()) + 1;
    return out;
}

inline double plugin_mi_bits(const std::vector<int>& a, int na, const std::vector<int>& b,
                             int nb) {
    const size_t n = a.size();
    std::vector<double> joint(static_cast<size_t>(na) * static_cast<size_t>(nb), 0.0);
    std::vector<double> pa(static_cast<size_t>(na), 0.0), pb(static_cast<size_t>(nb), 0.0);
    const double w = 1.0 / static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
        joint[static_cast<size_t>(a[i]) * static_cast<size_t>(nb) +
              static_cast<size_t>(b[i])] += w;
        pa[static_cast<size_t>(a[i])] += w;
        pb[static_cast<size_t>(b[i])] += w;
    }
    double mi = 0.0;
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < nb; ++j) {
            const double p = joint[static_cast<size_t>(i) * static_cast<size_t>(nb) +
                                   static_cast<size_t>(j)];
            if (p > 0.0)
                mi += p * std::log2(p / (pa[static_cast<size_t>(i)] *
                                         pb[static_cast<size_t>(j)]));
        }
    return std::max(mi, 0.0);
}

}  // namespace detail

// `kqis` maps name -> column of session values; all columns must share length.
inline MiMatrix mi_matrix(const std::map<std::string, Vector>& kqis, int bins = 16) {
    if (kqis.empty()) throw ValidationError("mi_matrix: no columns");
    const Eigen::Index n = kqis.begin()->second.size();
    if (n < 10 * bins)
        throw ValidationError("mi_matrix: need at least " + std::to_string(10 * bins) +
                              " records for " + std::to_string(bins) + " bins");

    MiMatrix out;
    out.bins = bins;
    std::vector<std::vector<int>> binned;
    std::vector<int> n_bins;
    for (const auto& [name, values] : kqis) {
        if (values.size() != n) throw ValidationError("mi_matrix: column length mismatch");
        out.names.push_back(name);
        int nb = 0;
        binned.push_back(detail::quantile_bins(values, bins, nb));
        n_bins.push_back(nb);
    }

    const size_t d = out.names.size();
    out.mi = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (size_t i = 0; i < d; ++i)
        for (size_t j = i; j < d; ++j) {
            const double v = detail::plugin_mi_bits(binned[i], n_bins[i], binned[j], n_bins[j]);
            out.mi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            out.mi(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    return out;
}

// Convenience overload over session records in schema KQI order.
inline MiMatrix mi_matrix(const std::vector<SessionRecord>& records, int bins = 16) {
    std::map<std::string, Vector> cols;
    for (size_t k = 0; k < kqi_names().size(); ++k) {
        Vector v(static_cast<Eigen::Index>(records.size()));
        for (size_t r = 0; r < records.size(); ++r)
            v(static_cast<Eigen::Index>(r)) = kqi_field(records[r].kqis, k);
        cols[kqi_names()[k]] = std::move(v);
    }
    return mi_matrix(cols, bins);
}

// ---------------------------------------------------------------------------
// End-to-end evaluation of a fitted chain on the test split.
// ---------------------------------------------------------------------------

// Everything needed to turn a scaled feature row into a KQI estimate.
struct ModelChain {
    Strategy strategy = Strategy::none;
    StrategyTransform transform;
    TrainedModel model;
    std::optional<TargetScaler> target_scaler;  // set when targets were standardized

    Vector predict(const Matrix& X_scaled) const {
        Vector y = model.predict(transform.apply(X_scaled));
        if (target_scaler) y = target_scaler->inverse(y);
        return y;
    }
};

struct EvaluationReport {
    std::string kqi;
    std::string strategy;  // No_FE / FS / FE
    std::string family;
    json best_hyperparameters;
    double mae_value = 0.0;
    std::optional<double> mae_pct_value;
    double ptime_us_value = 0.0;
    std::optional<Band> band_value;
    Eigen::Index n_test = 0;
    std::vector<std::string> notes;

    json to_json() const {
        json j{{"kqi", kqi},
               {"strategy", strategy},
               {"family", family},
               {"best_hyperparameters", best_hyperparameters},
               {"mae", mae_value},
               {"n_test", n_test},
               {"notes", notes},
               {"ptime_us", ptime_us_value}};
        j["mae_pct"] = mae_pct_value ? json(*mae_pct_value) : json();
        j["band"] = band_value ? json(to_string(*band_value)) : json("undefined");
        return j;
    }
};

inline EvaluationReport evaluate(const ModelChain& chain, const DatasetMatrix& test,
                                 const std::string& kqi, int timing_repeats = 10) {
    if (test.split_tag != SplitTag::test)
        throw LeakageError("evaluate: expected a test-tagged matrix, got " +
                           std::string(to_string(test.split_tag)));
    const Vector& y = test.target(kqi);
    const Vector y_hat = chain.predict(test.X);

    EvaluationReport report;
    report.kqi = kqi;
    report.strategy = to_string(chain.strategy);
    report.family = to_string(chain.model.spec.family);
    report.best_hyperparameters = chain.model.spec.hyperparameters;
    report.n_test = test.rows();
    report.notes = chain.model.notes;
    report.mae_value = mae(y, y_hat);
    report.mae_pct_value = mae_pct(y, y_hat);
    if (report.mae_pct_value) report.band_value = band(*report.mae_pct_value);
    report.ptime_us_value =
        ptime_us([&] { volatile double sink = chain.predict(test.X).sum(); (void)sink; },
                 test.rows(), timing_repeats);
    return report;
}

}  // namespace kqi

#endif  // KQI_EVALUATION_HPP

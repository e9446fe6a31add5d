#ifndef KQI_PREPROCESS_HPP
#define KQI_PREPROCESS_HPP

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "kqi/common.hpp"
#include "kqi/data_model.hpp"
#include "kqi/simulator.hpp"

namespace kqi {

// ---------------------------------------------------------------------------
// Step 1 of preprocessing: drop invalid samples, then whole experiments that
// lost more than 10% of their samples.
// ---------------------------------------------------------------------------

struct DropEntry {
    long long experiment_id = -1;
    int t_s = -1;
    std::string reason;
};

struct CleanReport {
    std::vector<DropEntry> dropped_samples;
    std::vector<long long> dropped_experiments;
    size_t n_input = 0;
    size_t n_kept = 0;
};

struct CleanResult {
    std::vector<Sample> samples;
    CleanReport report;
};

inline constexpr double kExperimentDropFraction = 0.10;
inline constexpr double kThroughputCapSlack = 1.2;

// `prior_rejections` lets rows rejected at CSV parse time count toward the
// per-experiment drop threshold.
inline CleanResult clean(const std::vector<Sample>& samples,
                         const std::vector<CsvRejection>& prior_rejections = {},
                         const SimConstants& k = {}) {
    CleanResult out;
    out.report.n_input = samples.size();

    std::map<long long, int> bad_per_experiment;
    std::map<long long, int> seen_per_experiment;
    for (const auto& rej : prior_rejections)
        if (rej.experiment_id >= 0) {
            ++bad_per_experiment[rej.experiment_id];
            ++seen_per_experiment[rej.experiment_id];
        }

    std::vector<char> keep(samples.size(), 0);
    for (size_t i = 0; i < samples.size(); ++i) {
        const Sample& s = samples[i];
        ++seen_per_experiment[s.experiment_id];
        std::optional<std::string> why = validate_sample(s);
        if (!why) {
            // Physical plausibility: client goodput cannot exceed the channel.
            const double cap =
                channel_capacity_mbps(s.kpis.sinr_db, s.config.bandwidth_mhz, k);
            if (s.kqis.client_throughput_mbps > kThroughputCapSlack * cap)
                why = "client_throughput above theoretical channel cap";
        }
        if (why) {
            out.report.dropped_samples.push_back({s.experiment_id, s.t_s, *why});
            ++bad_per_experiment[s.experiment_id];
        } else {
            keep[i] = 1;
        }
    }

    std::set<long long> drop_experiment;
    for (const auto& [id, bad] : bad_per_experiment) {
        const int total = std::max(seen_per_experiment[id], kSessionSeconds);
        if (bad > kExperimentDropFraction * total) drop_experiment.insert(id);
    }

    for (size_t i = 0; i < samples.size(); ++i) {
        const Sample& s = samples[i];
        if (keep[i] && drop_experiment.count(s.experiment_id)) {
            keep[i] = 0;
            out.report.dropped_samples.push_back(
                {s.experiment_id, s.t_s, "experiment exceeded drop threshold"});
        }
    }
    out.report.dropped_experiments.assign(drop_experiment.begin(), drop_experiment.end());

    out.samples.reserve(samples.size());
    for (size_t i = 0; i < samples.size(); ++i)
        if (keep[i]) out.samples.push_back(samples[i]);
    out.report.n_kept = out.samples.size();
    if (out.samples.empty()) throw ValidationError("clean: all samples dropped");
    return out;
}

// ---------------------------------------------------------------------------
// Step 2: remove estimator columns whose variance is exactly zero.
// ---------------------------------------------------------------------------

struct ZeroVarianceResult {
    DatasetMatrix matrix;
    std::vector<std::string> dropped_names;
};

inline ZeroVarianceResult drop_zero_variance(const DatasetMatrix& dataset) {
    if (dataset.split_tag == SplitTag::test)
        throw LeakageError("drop_zero_variance: refusing a test-tagged matrix");
    const Eigen::Index n = dataset.rows();
    if (n == 0) throw ValidationError("drop_zero_variance: empty matrix");

    std::vector<Eigen::Index> kept;
    ZeroVarianceResult out;
    for (Eigen::Index c = 0; c < dataset.cols(); ++c) {
        const double first = dataset.X(0, c);
        bool constant = true;
        for (Eigen::Index r = 1; r < n && constant; ++r)
            constant = dataset.X(r, c) == first;
        if (constant)
            out.dropped_names.push_back(dataset.feature_names[static_cast<size_t>(c)]);
        else
            kept.push_back(c);
    }
    if (kept.empty()) throw ValidationError("drop_zero_variance: all features dropped");

    out.matrix = dataset;
    out.matrix.X.resize(n, static_cast<Eigen::Index>(kept.size()));
    out.matrix.feature_names.clear();
    for (size_t i = 0; i < kept.size(); ++i) {
        out.matrix.X.col(static_cast<Eigen::Index>(i)) = dataset.X.col(kept[i]);
        out.matrix.feature_names.push_back(dataset.feature_names[static_cast<size_t>(kept[i])]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Session aggregation: 120 samples -> 1 record. Resolution uses the median
// (lower of the middle pair), everything else the arithmetic mean. Samples are
// ordered by t_s first so the result does not depend on input order.
// ---------------------------------------------------------------------------

inline std::vector<SessionRecord> aggregate_sessions(const std::vector<Sample>& samples) {
    if (samples.empty()) throw ValidationError("aggregate_sessions: empty input");

    std::map<long long, std::vector<const Sample*>> by_experiment;
    for (const Sample& s : samples) by_experiment[s.experiment_id].push_back(&s);

    std::vector<SessionRecord> records;
    records.reserve(by_experiment.size());
    for (auto& [id, group] : by_experiment) {
        std::sort(group.begin(), group.end(),
                  [](const Sample* a, const Sample* b) { return a->t_s < b->t_s; });
        SessionRecord rec;
        rec.experiment_id = id;
        rec.config = group.front()->config;
        rec.n_samples = static_cast<int>(group.size());
        const double inv = 1.0 / static_cast<double>(group.size());

        for (size_t i = 0; i < kpi_names().size(); ++i) {
            double sum = 0.0;
            for (const Sample* s : group) sum += kpi_field(s->kpis, i);
            kpi_field_ref(rec.kpis, i) = sum * inv;
        }
        for (size_t i = 0; i < kqi_names().size(); ++i) {
            if (kqi_names()[i] == "resolution_level") continue;
            double sum = 0.0;
            for (const Sample* s : group) sum += kqi_field(s->kqis, i);
            kqi_field_ref(rec.kqis, i) = sum * inv;
        }
        std::vector<double> res;
        res.reserve(group.size());
        for (const Sample* s : group) res.push_back(s->kqis.resolution_level);
        std::sort(res.begin(), res.end());
        rec.kqis.resolution_level = res[(res.size() - 1) / 2];

        records.push_back(rec);
    }
    return records;
}

// ---------------------------------------------------------------------------
// 70/30 split, stratified by scenario configuration. Deterministic under a
// seed; per-stratum shuffles use stratum-derived seeds so stratum enumeration
// order cannot matter.
// ---------------------------------------------------------------------------

struct SplitSpec {
    double train_fraction = 0.70;
    uint64_t seed = 0;
};

struct SessionSplit {
    std::vector<SessionRecord> train;
    std::vector<SessionRecord> test;
};

namespace detail {

// Splits experiment ids per stratum; used for both granularities so that
// per-sample splits keep whole experiments on one side.
inline void split_experiment_ids(
    const std::map<std::string, std::vector<long long>>& strata, const SplitSpec& spec,
    std::set<long long>& train_ids, std::set<long long>& test_ids) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw ValidationError("split: train_fraction must be in (0,1)");
    for (const auto& [key, ids_in] : strata) {
        if (ids_in.size() < 2)
            throw ValidationError("split: stratum '" + key + "' has fewer than 2 records");
        std::vector<long long> ids = ids_in;
        std::sort(ids.begin(), ids.end());
        Rng rng(mix_seed(spec.seed, fnv1a64(key)));
        rng.shuffle(ids);
        size_t n_train = static_cast<size_t>(
            std::llround(spec.train_fraction * static_cast<double>(ids.size())));
        n_train = std::clamp<size_t>(n_train, 1, ids.size() - 1);
        for (size_t i = 0; i < ids.size(); ++i)
            (i < n_train ? train_ids : test_ids).insert(ids[i]);
    }
}

}  // namespace detail

inline SessionSplit split(const std::vector<SessionRecord>& records, const SplitSpec& spec) {
    std::map<std::string, std::vector<long long>> strata;
    std::map<long long, const SessionRecord*> by_id;
    for (const auto& r : records) {
        strata[r.config.stratum_key()].push_back(r.experiment_id);
        by_id[r.experiment_id] = &r;
    }
    std::set<long long> train_ids, test_ids;
    detail::split_experiment_ids(strata, spec, train_ids, test_ids);

    SessionSplit out;
    for (const auto& r : records)
        (train_ids.count(r.experiment_id) ? out.train : out.test).push_back(r);
    return out;
}

struct SampleSplit {
    std::vector<Sample> train;
    std::vector<Sample> test;
};

// Per-sample granularity: all 120 samples of an experiment stay on one side.
inline SampleSplit split_samples(const std::vector<Sample>& samples, const SplitSpec& spec) {
    std::map<std::string, std::vector<long long>> strata;
    std::map<long long, char> seen;
    for (const auto& s : samples)
        if (!seen.count(s.experiment_id)) {
            seen[s.experiment_id] = 1;
            strata[s.config.stratum_key()].push_back(s.experiment_id);
        }
    std::set<long long> train_ids, test_ids;
    detail::split_experiment_ids(strata, spec, train_ids, test_ids);

    SampleSplit out;
    for (const auto& s : samples)
        (train_ids.count(s.experiment_id) ? out.train : out.test).push_back(s);
    return out;
}

// ---------------------------------------------------------------------------
// Standardization. Fitted on the training split only; population std.
// ---------------------------------------------------------------------------

struct ScalerParams {
    std::vector<std::string> feature_names;
    Vector mean;
    Vector stddev;
};

inline ScalerParams fit_scaler(const DatasetMatrix& train) {
    if (train.split_tag == SplitTag::test)
        throw LeakageError("fit_scaler: refusing a test-tagged matrix");
    const Eigen::Index n = train.rows();
    const Eigen::Index d = train.cols();
    if (n == 0 || d == 0) throw ValidationError("fit_scaler: empty matrix");

    ScalerParams p;
    p.feature_names = train.feature_names;
    p.mean = train.X.colwise().mean();
    p.stddev = Vector(d);
    for (Eigen::Index c = 0; c < d; ++c) {
        const double var =
            (train.X.col(c).array() - p.mean(c)).square().sum() / static_cast<double>(n);
        const double sd = std::sqrt(var);
        if (sd <= 0.0)
            throw ValidationError("fit_scaler: zero stddev in column '" +
                                  train.feature_names[static_cast<size_t>(c)] +
                                  "' (run drop_zero_variance first)");
        p.stddev(c) = sd;
    }
    return p;
}

inline DatasetMatrix apply_scaler(const ScalerParams& p, const DatasetMatrix& m) {
    if (m.feature_names != p.feature_names)
        throw ValidationError("apply_scaler: feature columns do not match the fitted scaler");
    DatasetMatrix out = m;
    out.X = (m.X.rowwise() - p.mean.transpose()).array().rowwise() /
            p.stddev.transpose().array();
    return out;
}

inline DatasetMatrix unscale(const ScalerParams& p, const DatasetMatrix& m) {
    if (m.feature_names != p.feature_names)
        throw ValidationError("unscale: feature columns do not match the fitted scaler");
    DatasetMatrix out = m;
    out.X = (m.X.array().rowwise() * p.stddev.transpose().array()).matrix().rowwise() +
            p.mean.transpose();
    return out;
}

// Optional target standardization (off by default): scale a target vector by
// train statistics and invert predictions before scoring.
struct TargetScaler {
    double mean = 0.0;
    double stddev = 1.0;

    static TargetScaler fit(const Vector& y) {
        TargetScaler t;
        t.mean = y.mean();
        const double var = (y.array() - t.mean).square().sum() / static_cast<double>(y.size());
        t.stddev = std::sqrt(var);
        if (t.stddev <= 0.0) t.stddev = 1.0;
        return t;
    }
    Vector transform(const Vector& y) const { return (y.array() - mean) / stddev; }
    Vector inverse(const Vector& y) const { return (y.array() * stddev + mean); }
};

}  // namespace kqi

#endif  // KQI_PREPROCESS_HPP

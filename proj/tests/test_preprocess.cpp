#include <gtest/gtest.h>

#include <algorithm>

#include "kqi/preprocess.hpp"
#include "kqi/simulator.hpp"

using namespace kqi;

namespace {

std::vector<Sample> small_campaign(int experiments = 2, uint64_t seed = 31) {
    return generate_campaign(CampaignConfig::reference(experiments), seed);
}

}  // namespace

TEST(Preprocess, CleanPassesSimulatorOutputUntouched) {
    const auto samples = small_campaign();
    const CleanResult r = clean(samples);
    EXPECT_EQ(r.samples.size(), samples.size());
    EXPECT_TRUE(r.report.dropped_samples.empty());
    EXPECT_TRUE(r.report.dropped_experiments.empty());
}

TEST(Preprocess, InvalidSampleDroppedWithReason) {
    auto samples = small_campaign();
    samples[5].kqis.latency_ms = -5.0;
    const CleanResult r = clean(samples);
    EXPECT_EQ(r.samples.size(), samples.size() - 1);
    ASSERT_EQ(r.report.dropped_samples.size(), 1u);
    EXPECT_EQ(r.report.dropped_samples[0].reason, "negative KQI value");
    EXPECT_EQ(r.report.dropped_samples[0].experiment_id, samples[5].experiment_id);
}

TEST(Preprocess, ExperimentWithTooManyBadSamplesIsFullyDropped) {
    auto samples = small_campaign();
    const long long victim = samples[0].experiment_id;
    int corrupted = 0;
    for (auto& s : samples)
        if (s.experiment_id == victim && corrupted < 15) {
            s.kpis.sinr_db = std::numeric_limits<double>::quiet_NaN();
            ++corrupted;
        }
    ASSERT_EQ(corrupted, 15);
    const CleanResult r = clean(samples);
    for (const auto& s : r.samples) EXPECT_NE(s.experiment_id, victim);
    EXPECT_EQ(r.samples.size(), samples.size() - 120);
    ASSERT_EQ(r.report.dropped_experiments.size(), 1u);
    EXPECT_EQ(r.report.dropped_experiments[0], victim);
}

TEST(Preprocess, CleanIsIdempotent) {
    auto samples = small_campaign();
    samples[3].kqis.avg_stall_ms = -1.0;
    const CleanResult once = clean(samples);
    const CleanResult twice = clean(once.samples);
    EXPECT_TRUE(twice.report.dropped_samples.empty());
    EXPECT_EQ(twice.samples.size(), once.samples.size());
}

TEST(Preprocess, ZeroVarianceColumnsDropped) {
    const auto sessions = aggregate_sessions(clean(small_campaign()).samples);
    const DatasetMatrix m = to_matrix(sessions);
    const ZeroVarianceResult r = drop_zero_variance(m);
    // LTE-only campaign: technology and carrier frequency are constant.
    EXPECT_NE(std::find(r.dropped_names.begin(), r.dropped_names.end(), "technology"),
              r.dropped_names.end());
    EXPECT_NE(std::find(r.dropped_names.begin(), r.dropped_names.end(), "carrier_freq_mhz"),
              r.dropped_names.end());
    EXPECT_EQ(m.cols() - r.matrix.cols(),
              static_cast<Eigen::Index>(r.dropped_names.size()));
}

TEST(Preprocess, ConstantInjectedColumnDropsExactlyOne) {
    const auto sessions = aggregate_sessions(clean(small_campaign()).samples);
    DatasetMatrix m = to_matrix(sessions);
    const ZeroVarianceResult base = drop_zero_variance(m);

    DatasetMatrix with_const = base.matrix;
    with_const.X.conservativeResize(Eigen::NoChange, with_const.X.cols() + 1);
    with_const.X.col(with_const.X.cols() - 1).setConstant(7.0);
    with_const.feature_names.push_back("all_sevens");
    const ZeroVarianceResult r = drop_zero_variance(with_const);
    ASSERT_EQ(r.dropped_names.size(), 1u);
    EXPECT_EQ(r.dropped_names[0], "all_sevens");
    EXPECT_EQ(r.matrix.cols(), with_const.cols() - 1);
}

TEST(Preprocess, NearConstantColumnRetained) {
    DatasetMatrix m;
    m.feature_names = {"amost_const"};
    m.X = Matrix::Constant(50, 1, 2.0);
    m.X(49, 0) = 2.0000001;
    for (const auto& k : kqi_names()) m.targets[k] = Vector::Zero(50);
    const ZeroVarianceResult r = drop_zero_variance(m);
    EXPECT_TRUE(r.dropped_names.empty());
    EXPECT_EQ(r.matrix.cols(), 1);
}

TEST(Preprocess, AggregateMedianAndMeanRules) {
    std::vector<Sample> toy;
    for (int t = 0; t < 4; ++t) {
        Sample s;
        s.experiment_id = 1;
        s.t_s = t;
        s.config = ScenarioConfig::make(5, PowerScenario::MaxPT);
        s.kqis.resolution_level = (t < 2) ? 3 : 4;  // [3,3,4,4] -> lower middle = 3
        s.kqis.latency_ms = 10.0 * (t + 1);
        s.kpis.dl_throughput_mbps = 2.0;
        toy.push_back(s);
    }
    const auto records = aggregate_sessions(toy);
    ASSERT_EQ(records.size(), 1u);
    EXPECT_EQ(records[0].kqis.resolution_level, 3.0);
    EXPECT_DOUBLE_EQ(records[0].kqis.latency_ms, 25.0);
    EXPECT_DOUBLE_EQ(records[0].kpis.dl_throughput_mbps, 2.0);
    EXPECT_EQ(records[0].n_samples, 4);
}

TEST(Preprocess, AggregateCommutesWithSampleReordering) {
    auto samples = small_campaign(1);
    auto shuffled = samples;
    Rng rng(17);
    rng.shuffle(shuffled);
    const auto a = aggregate_sessions(samples);
    const auto b = aggregate_sessions(shuffled);
    ASSERT_EQ(a.size(), b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].experiment_id, b[i].experiment_id);
        for (size_t f = 0; f < kpi_names().size(); ++f)
            EXPECT_EQ(kpi_field(a[i].kpis, f), kpi_field(b[i].kpis, f));
        for (size_t f = 0; f < kqi_names().size(); ++f)
            EXPECT_EQ(kqi_field(a[i].kqis, f), kqi_field(b[i].kqis, f));
    }
}

TEST(Preprocess, FullCampaignYields720Sessions) {
    const auto samples = generate_campaign(CampaignConfig::reference(60), 1);
    EXPECT_EQ(samples.size(), 86400u);
    const auto sessions = aggregate_sessions(samples);
    EXPECT_EQ(sessions.size(), 720u);
}

TEST(Preprocess, StratifiedSplitSizes) {
    const auto sessions = aggregate_sessions(generate_campaign(CampaignConfig::reference(60), 5));
    SplitSpec spec;
    spec.seed = 9;
    const SessionSplit s = split(sessions, spec);
    EXPECT_EQ(s.train.size(), 504u);
    EXPECT_EQ(s.test.size(), 216u);

    std::map<std::string, int> train_per, test_per;
    for (const auto& r : s.train) ++train_per[r.config.stratum_key()];
    for (const auto& r : s.test) ++test_per[r.config.stratum_key()];
    ASSERT_EQ(train_per.size(), 12u);
    for (const auto& [key, n] : train_per) EXPECT_EQ(n, 42) << key;
    for (const auto& [key, n] : test_per) EXPECT_EQ(n, 18) << key;
}

TEST(Preprocess, SplitSeedChangesMembershipNotSizes) {
    const auto sessions = aggregate_sessions(small_campaign(10));
    SplitSpec a{0.7, 1}, b{0.7, 2};
    const auto sa = split(sessions, a);
    const auto sb = split(sessions, b);
    EXPECT_EQ(sa.train.size(), sb.train.size());
    auto ids = [](const std::vector<SessionRecord>& v) {
        std::vector<long long> out;
        for (const auto& r : v) out.push_back(r.experiment_id);
        return out;
    };
    EXPECT_NE(ids(sa.train), ids(sb.train));
    const auto sa2 = split(sessions, a);
    EXPECT_EQ(ids(sa.train), ids(sa2.train));
}

TEST(Preprocess, DegenerateSplitFractionRejected) {
    const auto sessions = aggregate_sessions(small_campaign());
    EXPECT_THROW(split(sessions, SplitSpec{1.0, 3}), ValidationError);
    EXPECT_THROW(split(sessions, SplitSpec{0.0, 3}), ValidationError);
}

TEST(Preprocess, TinyStratumRejectedByName) {
    std::vector<SessionRecord> records(3);
    records[0].experiment_id = 0;
    records[0].config = ScenarioConfig::make(5, PowerScenario::MaxPT);
    records[1].experiment_id = 1;
    records[1].config = ScenarioConfig::make(5, PowerScenario::MaxPT);
    records[2].experiment_id = 2;
    records[2].config = ScenarioConfig::make(10, PowerScenario::MaxPT);  // singleton stratum
    try {
        split(records, SplitSpec{0.7, 4});
        FAIL() << "expected stratum error";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("10MHz"), std::string::npos);
    }
}

TEST(Preprocess, SamplesSplitKeepsExperimentsWhole) {
    const auto samples = small_campaign(4);
    const SampleSplit s = split_samples(samples, SplitSpec{0.7, 21});
    std::set<long long> train_ids, test_ids;
    for (const auto& x : s.train) train_ids.insert(x.experiment_id);
    for (const auto& x : s.test) test_ids.insert(x.experiment_id);
    for (long long id : train_ids) EXPECT_EQ(test_ids.count(id), 0u);
    EXPECT_EQ(s.train.size() % 120, 0u);
    EXPECT_EQ(s.test.size() % 120, 0u);
}

TEST(Preprocess, ScalerNormalizesTrainExactly) {
    const auto sessions = aggregate_sessions(clean(small_campaign(6)).samples);
    const DatasetMatrix m = drop_zero_variance(to_matrix(sessions)).matrix;
    const ScalerParams p = fit_scaler(m);
    const DatasetMatrix scaled = apply_scaler(p, m);
    const Eigen::Index n = scaled.rows();
    for (Eigen::Index c = 0; c < scaled.cols(); ++c) {
        EXPECT_LT(std::abs(scaled.X.col(c).mean()), 1e-9);
        const double var = scaled.X.col(c).squaredNorm() / static_cast<double>(n) -
                           scaled.X.col(c).mean() * scaled.X.col(c).mean();
        EXPECT_LT(std::abs(std::sqrt(var) - 1.0), 1e-9);
    }
}

TEST(Preprocess, ScalerShiftedCopyHasPredictableMeans) {
    DatasetMatrix train;
    train.feature_names = {"a", "b"};
    train.X = Matrix(4, 2);
    train.X << 1, 10, 2, 20, 3, 30, 4, 40;
    for (const auto& k : kqi_names()) train.targets[k] = Vector::Zero(4);
    const ScalerParams p = fit_scaler(train);

    DatasetMatrix shifted = train;
    shifted.X.array() += 2.0;
    const DatasetMatrix scaled = apply_scaler(p, shifted);
    for (Eigen::Index c = 0; c < 2; ++c)
        EXPECT_NEAR(scaled.X.col(c).mean(), 2.0 / p.stddev(c), 1e-12);
}

TEST(Preprocess, ScaleUnscaleIdentity) {
    const auto sessions = aggregate_sessions(small_campaign(3));
    const DatasetMatrix m = drop_zero_variance(to_matrix(sessions)).matrix;
    const ScalerParams p = fit_scaler(m);
    const DatasetMatrix back = unscale(p, apply_scaler(p, m));
    EXPECT_LT((back.X - m.X).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Preprocess, FitScalerRejectsTestTaggedMatrix) {
    const auto sessions = aggregate_sessions(small_campaign());
    DatasetMatrix m = to_matrix(sessions, {}, SplitTag::test);
    EXPECT_THROW(fit_scaler(m), LeakageError);
}

TEST(Preprocess, TargetScalerRoundTrip) {
    Vector y(5);
    y << 1, 2, 3, 4, 10;
    const TargetScaler t = TargetScaler::fit(y);
    const Vector z = t.transform(y);
    EXPECT_NEAR(z.mean(), 0.0, 1e-12);
    EXPECT_LT((t.inverse(z) - y).cwiseAbs().maxCoeff(), 1e-12);
}

#include <gtest/gtest.h>

#include <algorithm>

#include "kqi/simulator.hpp"

using namespace kqi;

namespace {

double session_median_resolution(const std::vector<Sample>& samples) {
    std::vector<double> res;
    for (const auto& s : samples) res.push_back(s.kqis.resolution_level);
    std::sort(res.begin(), res.end());
    return res[(res.size() - 1) / 2];
}

double total_stall_ms(const std::vector<Sample>& samples) {
    double t = 0;
    for (const auto& s : samples) t += s.kqis.avg_stall_ms;
    return t;
}

}  // namespace

TEST(Simulator, SessionLengthAndSchema) {
    const auto samples = simulate_session(ScenarioConfig::make(10, PowerScenario::MinPT), 99);
    ASSERT_EQ(samples.size(), 120u);
    for (int t = 0; t < 120; ++t) {
        EXPECT_EQ(samples[static_cast<size_t>(t)].t_s, t);
        EXPECT_FALSE(validate_sample(samples[static_cast<size_t>(t)]).has_value());
    }
}

TEST(Simulator, HighCapacitySessionReachesTopLevelWithoutStalls) {
    const auto samples = simulate_session(ScenarioConfig::make(20, PowerScenario::MaxPT), 42);
    int top_seconds = 0;
    for (const auto& s : samples)
        if (s.kqis.resolution_level == 5) ++top_seconds;
    EXPECT_GT(top_seconds, 0);
    EXPECT_EQ(total_stall_ms(samples), 0.0);
    // Max-capacity check behind the scenario calibration: >= 9 Mbps available.
    SimConstants k;
    EXPECT_GE(channel_capacity_mbps(k.snr_base_maxpt_db, 20, k), 9.0);
}

TEST(Simulator, ConstrainedScenarioSitsAtLowerResolution) {
    double lo = 0.0, hi = 0.0;
    for (uint64_t seed = 0; seed < 20; ++seed) {
        lo += session_median_resolution(
            simulate_session(ScenarioConfig::make(5, PowerScenario::RedPT_Noise), seed));
        hi += session_median_resolution(
            simulate_session(ScenarioConfig::make(20, PowerScenario::MaxPT), seed));
    }
    EXPECT_LT(lo / 20.0, hi / 20.0);
}

TEST(Simulator, ZeroCapacityStarvation) {
    SimConstants k;
    k.spectral_efficiency = 0.0;  // capacity identically zero
    const auto samples =
        simulate_session(ScenarioConfig::make(5, PowerScenario::RedPT_Noise), 7, k);
    ASSERT_EQ(samples.size(), 120u);
    for (const auto& s : samples) {
        EXPECT_EQ(s.kqis.frame_rate_fps, 0.0);
        EXPECT_EQ(s.kqis.resolution_level, 0.0);
        EXPECT_EQ(s.kqis.initial_startup_ms, 120000.0);
    }
}

TEST(Simulator, DeterministicGivenSeed) {
    const auto a = simulate_session(ScenarioConfig::make(15, PowerScenario::MinPT), 5);
    const auto b = simulate_session(ScenarioConfig::make(15, PowerScenario::MinPT), 5);
    ASSERT_EQ(a.size(), b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        for (size_t f = 0; f < kpi_names().size(); ++f)
            EXPECT_EQ(kpi_field(a[i].kpis, f), kpi_field(b[i].kpis, f));
        for (size_t f = 0; f < kqi_names().size(); ++f)
            EXPECT_EQ(kqi_field(a[i].kqis, f), kqi_field(b[i].kqis, f));
    }
    const auto c = simulate_session(ScenarioConfig::make(15, PowerScenario::MinPT), 6);
    bool any_diff = false;
    for (size_t i = 0; i < a.size() && !any_diff; ++i)
        any_diff = a[i].kpis.sinr_db != c[i].kpis.sinr_db;
    EXPECT_TRUE(any_diff);
}

TEST(Simulator, ConservationAndBufferBounds) {
    for (uint64_t seed : {1u, 2u, 3u}) {
        for (auto scenario :
             {PowerScenario::MaxPT, PowerScenario::MinPT, PowerScenario::RedPT_Noise}) {
            SessionTrace trace;
            SimConstants k;
            simulate_session(ScenarioConfig::make(10, scenario), seed, k, &trace);
            for (size_t t = 0; t < trace.capacity_mbps.size(); ++t) {
                EXPECT_LE(trace.delivered_mbps[t], trace.capacity_mbps[t] + 1e-12);
                EXPECT_GE(trace.buffer_ms[t], 0.0);
                EXPECT_LE(trace.buffer_ms[t], k.ladder.max_buffer_ms);
            }
        }
    }
}

TEST(Simulator, AbrRespectsSafetyFactor) {
    SessionTrace trace;
    SimConstants k;
    simulate_session(ScenarioConfig::make(20, PowerScenario::MinPT), 11, k, &trace);
    for (size_t t = 0; t < trace.chosen_level.size(); ++t) {
        const int level = trace.chosen_level[t];
        if (level > k.ladder.floor_level()) {
            EXPECT_LE(k.ladder.bitrate_of(level),
                      k.abr_safety * trace.ewma_at_selection[t] + 1e-12)
                << "second " << t;
        }
    }
}

TEST(Simulator, MeanResolutionMonotoneInBandwidth) {
    for (auto scenario : {PowerScenario::MinPT, PowerScenario::RedPT_Noise}) {
        double prev = -1.0;
        for (int bw : {5, 10, 15, 20}) {
            double mean = 0.0;
            for (uint64_t e = 0; e < 60; ++e) {
                const auto samples =
                    simulate_session(ScenarioConfig::make(bw, scenario), mix_seed(77, e));
                for (const auto& s : samples) mean += s.kqis.resolution_level;
            }
            mean /= 60.0 * 120.0;
            EXPECT_GE(mean, prev - 0.1) << "bw " << bw;
            prev = mean;
        }
    }
}

TEST(Simulator, CampaignCountsAndDeterminism) {
    CampaignConfig small = CampaignConfig::reference(1);
    const auto samples = generate_campaign(small, 2024);
    EXPECT_EQ(samples.size(), 12u * 1u * 120u);

    CampaignConfig one;
    one.scenarios = {ScenarioConfig::make(10, PowerScenario::MaxPT)};
    one.experiments_per_config = 1;
    EXPECT_EQ(generate_campaign(one, 1).size(), 120u);

    // Parallel schedule must not change a single byte of the output.
    const auto serial = generate_campaign(small, 99, {}, 1);
    const auto parallel = generate_campaign(small, 99, {}, 8);
    ASSERT_EQ(serial.size(), parallel.size());
    for (size_t i = 0; i < serial.size(); ++i) {
        EXPECT_EQ(serial[i].experiment_id, parallel[i].experiment_id);
        EXPECT_EQ(serial[i].kpis.sinr_db, parallel[i].kpis.sinr_db);
        EXPECT_EQ(serial[i].kqis.latency_ms, parallel[i].kqis.latency_ms);
    }
}

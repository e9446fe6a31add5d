#ifndef KQI_SIMULATOR_HPP
#define KQI_SIMULATOR_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "kqi/common.hpp"
#include "kqi/data_model.hpp"

namespace kqi {

// ---------------------------------------------------------------------------
// Media configuration: DASH ladder, segment length, buffer thresholds.
// ---------------------------------------------------------------------------

struct MediaLadder {
    // (resolution_level, average bitrate) pairs, strictly increasing bitrate.
    std::vector<std::pair<int, double>> levels = {
        {1, 1.0}, {2, 1.5}, {3, 3.0}, {4, 5.0}, {5, 9.0}};
    int segment_s = 4;
    double fps = 30.0;
    double initial_buffer_ms = 5000.0;
    double max_buffer_ms = 50000.0;

    double bitrate_of(int level) const {
        for (const auto& [lv, br] : levels)
            if (lv == level) return br;
        throw PipelineError("bitrate_of: unknown level " + std::to_string(level));
    }
    int floor_level() const { return levels.front().first; }
    int top_level() const { return levels.back().first; }
};

// ---------------------------------------------------------------------------
// Channel and client constants. Everything lives in one overridable block;
// values are toolkit choices, not measured ones, and reports flag them as such.
// ---------------------------------------------------------------------------

struct SimConstants {
    // channel; calibrated so MaxPT/20MHz carries the top rung comfortably
    // while RedPT+Noise forces downswitches and rebuffering
    double snr_base_maxpt_db = 22.0;
    double snr_base_minpt_db = 10.0;
    double snr_base_redpt_noise_db = 0.0;
    double fading_rho = 0.9;        // AR(1) memory
    double fading_sigma_db = 2.5;   // AR(1) innovation std
    double spectral_efficiency = 0.35;  // bit/s/Hz scaler

    // client
    double abr_safety = 0.8;
    double ewma_half_life_s = 3.0;
    double startup_demand_boost = 3.0;  // demand multiplier while startup/stalled
    double playing_demand_boost = 1.5;  // gentle prefetch while playing

    // loss model: logistic in snr, loss = max/(1+exp((snr-mid)/width))
    double loss_max = 0.5;
    double loss_mid_snr_db = 2.0;
    double loss_width_db = 2.0;

    // retransmissions: lambda = max(0, l0 - slope*snr), ul scaled down
    double retx_lambda0 = 6.0;
    double retx_lambda_slope = 0.25;
    double ul_retx_ratio = 0.25;

    // latency = base + alpha*u/(1-u), u clamped, plus jitter, capped
    double base_rtt_ms = 35.0;
    double latency_alpha_ms = 80.0;
    double util_clamp = 0.95;
    double latency_cap_ms = 1500.0;
    double latency_jitter_ms = 3.0;

    // KPI measurement model
    double sinr_noise_db = 0.5;
    double dl_counter_overhead = 1.06;  // network-side counters see protocol overhead
    double dl_counter_noise_mbps = 0.05;
    double ul_ratio = 0.012;            // request traffic as a fraction of dl
    double ul_noise_mbps = 0.004;
    double rsrp_base_dbm = -70.0;
    double rsrp_noise_db = 1.0;
    double carrier_freq_mhz = 1842.5;
    double wifi_rssi_dbm = -45.0;
    double wifi_rssi_noise_db = 2.0;
    double wifi_rate_base_mbps = 250.0;
    double wifi_rate_per_db = 5.0;
    double wifi_rate_noise_mbps = 10.0;

    MediaLadder ladder;

    double snr_base(PowerScenario p) const {
        switch (p) {
            case PowerScenario::MaxPT: return snr_base_maxpt_db;
            case PowerScenario::MinPT: return snr_base_minpt_db;
            case PowerScenario::RedPT_Noise: return snr_base_redpt_noise_db;
        }
        return 0.0;
    }
};

// Shannon-style capacity with a fixed efficiency scaler.
inline double channel_capacity_mbps(double snr_db, int bandwidth_mhz,
                                    const SimConstants& k) {
    return k.spectral_efficiency * bandwidth_mhz * std::log2(1.0 + std::pow(10.0, snr_db / 10.0));
}

inline double loss_fraction(double snr_db, const SimConstants& k) {
    return k.loss_max / (1.0 + std::exp((snr_db - k.loss_mid_snr_db) / k.loss_width_db));
}

// Optional per-second internals, used by property tests.
struct SessionTrace {
    std::vector<double> capacity_mbps;
    std::vector<double> delivered_mbps;
    std::vector<double> ewma_at_selection;
    std::vector<int> chosen_level;
    std::vector<int> phase;  // 0 startup, 1 playing, 2 stalled
    std::vector<double> buffer_ms;
};

// One 120-second playback under a fixed scenario. Pure function of
// (config, seed, constants).
inline std::vector<Sample> simulate_session(const ScenarioConfig& config, uint64_t seed,
                                            const SimConstants& k = {},
                                            SessionTrace* trace = nullptr) {
    Rng rng(seed);
    const MediaLadder& ladder = k.ladder;
    const double ewma_decay = std::pow(0.5, 1.0 / k.ewma_half_life_s);

    enum Phase { kStartup = 0, kPlaying = 1, kStalled = 2 };
    Phase phase = kStartup;
    double buffer_ms = 0.0;
    double ewma_mbps = 0.0;
    bool ewma_seen = false;
    double fading_db = 0.0;
    double startup_total_ms = 0.0;

    std::vector<Sample> samples;
    samples.reserve(kSessionSeconds);

    for (int t = 0; t < kSessionSeconds; ++t) {
        // -- channel ---------------------------------------------------------
        fading_db = k.fading_rho * fading_db + k.fading_sigma_db * rng.normal();
        const double snr_db = k.snr_base(config.power_scenario) + fading_db;
        const double capacity = channel_capacity_mbps(snr_db, config.bandwidth_mhz, k);

        // -- ABR level selection ----------------------------------------------
        const double ewma_at_selection = ewma_seen ? ewma_mbps : 0.0;
        int level = ladder.floor_level();
        if (ewma_seen) {
            for (const auto& [lv, br] : ladder.levels)
                if (br <= k.abr_safety * ewma_at_selection) level = lv;
        }
        const double bitrate = ladder.bitrate_of(level);

        // -- download --------------------------------------------------------
        const double boost =
            (phase == kPlaying) ? k.playing_demand_boost : k.startup_demand_boost;
        // Never request more than would overfill the buffer this second.
        const double headroom_ms =
            (ladder.max_buffer_ms - buffer_ms) + (phase == kPlaying ? 1000.0 : 0.0);
        double demand = 0.0;
        if (headroom_ms > 0.0)
            demand = std::min(boost * bitrate, bitrate * headroom_ms / 1000.0);
        const double loss = loss_fraction(snr_db, k);
        const double delivered = std::min(capacity, demand) * (1.0 - loss);
        const double utilization =
            demand > 0.0 ? std::min(k.util_clamp, demand / std::max(capacity, 1e-9)) : 0.0;
        const double fill_ms = 1000.0 * delivered / bitrate;

        // Segment downloads are bursts at line rate, so the rate estimator
        // samples the deliverable rate during any second with active
        // downloads, not the demand-paced volume.
        if (demand > 0.0) {
            const double rate_sample = capacity * (1.0 - loss);
            if (!ewma_seen) {
                ewma_mbps = rate_sample;
                ewma_seen = true;
            } else {
                ewma_mbps = ewma_decay * ewma_mbps + (1.0 - ewma_decay) * rate_sample;
            }
        }

        // -- phase machine -----------------------------------------------------
        double played_fraction = 0.0;
        double stall_ms = 0.0;
        int displayed_level = 0;
        if (phase == kStartup) {
            const double before = buffer_ms;
            buffer_ms = std::min(before + fill_ms, ladder.max_buffer_ms);
            if (buffer_ms >= ladder.initial_buffer_ms && fill_ms > 0.0) {
                // Crossed the threshold mid-second; count only the fill time.
                startup_total_ms +=
                    1000.0 *
                    std::clamp((ladder.initial_buffer_ms - before) / fill_ms, 0.0, 1.0);
                phase = kPlaying;
            } else {
                startup_total_ms += 1000.0;
            }
        } else if (phase == kPlaying) {
            const double available_ms = buffer_ms + fill_ms;
            if (available_ms >= 1000.0) {
                played_fraction = 1.0;
                buffer_ms = std::min(available_ms - 1000.0, ladder.max_buffer_ms);
            } else {
                played_fraction = available_ms / 1000.0;
                stall_ms = 1000.0 - available_ms;
                buffer_ms = 0.0;
                phase = kStalled;
            }
            displayed_level = level;
        } else {  // stalled
            buffer_ms = std::min(buffer_ms + fill_ms, ladder.max_buffer_ms);
            stall_ms = 1000.0;
            if (buffer_ms >= ladder.initial_buffer_ms) phase = kPlaying;
        }

        // -- latency -----------------------------------------------------------
        double latency = k.base_rtt_ms +
                         k.latency_alpha_ms * utilization / (1.0 - utilization) +
                         k.latency_jitter_ms * rng.normal();
        latency = std::clamp(latency, 1.0, k.latency_cap_ms);

        // -- KPI measurements ---------------------------------------------------
        Sample s;
        s.t_s = t;
        s.config = config;
        KpiVector& kp = s.kpis;
        kp.dl_throughput_mbps =
            std::max(0.0, delivered * k.dl_counter_overhead +
                              k.dl_counter_noise_mbps * rng.normal());
        kp.ul_throughput_mbps =
            std::max(0.0, delivered * k.ul_ratio + k.ul_noise_mbps * rng.normal());
        const double lambda_dl = std::max(0.0, k.retx_lambda0 - k.retx_lambda_slope * snr_db);
        kp.dl_retx_count = rng.poisson(lambda_dl);
        kp.ul_retx_count = rng.poisson(lambda_dl * k.ul_retx_ratio);
        kp.sinr_db = snr_db + k.sinr_noise_db * rng.normal();
        kp.rsrp_dbm = k.rsrp_base_dbm + config.tx_power_db + k.rsrp_noise_db * rng.normal();
        kp.carrier_freq_mhz = k.carrier_freq_mhz;
        kp.channel_util = utilization;
        kp.cpe_wifi_rssi_dbm = k.wifi_rssi_dbm + k.wifi_rssi_noise_db * rng.normal();
        kp.cpe_link_rate_mbps =
            std::max(1.0, k.wifi_rate_base_mbps +
                              k.wifi_rate_per_db * (kp.cpe_wifi_rssi_dbm - k.wifi_rssi_dbm) +
                              k.wifi_rate_noise_mbps * rng.normal());

        // -- KQIs ---------------------------------------------------------------
        KqiVector& kq = s.kqis;
        kq.resolution_level = played_fraction > 0.0 ? displayed_level : 0;
        kq.frame_rate_fps = ladder.fps * played_fraction;
        kq.avg_stall_ms = stall_ms;
        kq.client_throughput_mbps = delivered;
        kq.latency_ms = latency;

        if (trace) {
            trace->capacity_mbps.push_back(capacity);
            trace->delivered_mbps.push_back(delivered);
            trace->ewma_at_selection.push_back(ewma_at_selection);
            trace->chosen_level.push_back(level);
            trace->phase.push_back(static_cast<int>(phase));
            trace->buffer_ms.push_back(buffer_ms);
        }
        samples.push_back(s);
    }

    // The startup KQI is a per-session quantity; stamp the total on every sample.
    for (Sample& s : samples) s.kqis.initial_startup_ms = startup_total_ms;
    return samples;
}

// ---------------------------------------------------------------------------
// Campaign generation
// ---------------------------------------------------------------------------

struct CampaignConfig {
    std::vector<ScenarioConfig> scenarios;
    int experiments_per_config = 60;

    // The 12 configurations of the reference campaign: 4 bandwidths x 3
    // power scenarios.
    static CampaignConfig reference(int experiments_per_config = 60) {
        CampaignConfig c;
        c.experiments_per_config = experiments_per_config;
        for (int bw : {5, 10, 15, 20})
            for (PowerScenario p :
                 {PowerScenario::MaxPT, PowerScenario::MinPT, PowerScenario::RedPT_Noise})
                c.scenarios.push_back(ScenarioConfig::make(bw, p));
        return c;
    }
};

// Deterministic and schedule-invariant: each session derives its own seed from
// (master_seed, config_index, experiment_index) and writes into its own slot.
inline std::vector<Sample> generate_campaign(const CampaignConfig& campaign,
                                             uint64_t master_seed,
                                             const SimConstants& k = {},
                                             int workers = 1) {
    if (campaign.scenarios.empty())
        throw ValidationError("generate_campaign: no scenarios configured");
    if (campaign.experiments_per_config < 1)
        throw ValidationError("generate_campaign: experiments_per_config must be >= 1");
    for (const auto& cfg : campaign.scenarios)
        if (!is_valid_bandwidth(cfg.bandwidth_mhz))
            throw ValidationError("generate_campaign: bandwidth not in {5,10,15,20}");

    const size_t n_configs = campaign.scenarios.size();
    const size_t n_exp = static_cast<size_t>(campaign.experiments_per_config);
    const size_t n_sessions = n_configs * n_exp;

    std::vector<std::vector<Sample>> sessions(n_sessions);
    parallel_for_indexed(n_sessions, workers, [&](size_t i) {
        const size_t config_index = i / n_exp;
        const size_t experiment_index = i % n_exp;
        const uint64_t seed = mix_seed(master_seed, config_index, experiment_index);
        sessions[i] = simulate_session(campaign.scenarios[config_index], seed, k);
        const long long experiment_id = static_cast<long long>(i);
        for (Sample& s : sessions[i]) s.experiment_id = experiment_id;
    });

    std::vector<Sample> all;
    all.reserve(n_sessions * kSessionSeconds);
    for (auto& sess : sessions)
        for (Sample& s : sess) all.push_back(s);
    return all;
}

}  // namespace kqi

#endif  // KQI_SIMULATOR_HPP

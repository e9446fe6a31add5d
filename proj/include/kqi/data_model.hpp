#ifndef KQI_DATA_MODEL_HPP
#define KQI_DATA_MODEL_HPP

#include <array>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kqi/common.hpp"

namespace kqi {

// ---------------------------------------------------------------------------
// Campaign schema. One Sample is one per-second observation of a 120 s
// 360-video session; a SessionRecord is the per-experiment aggregate.
// ---------------------------------------------------------------------------

enum class Technology { LTE };
enum class PowerScenario { MaxPT, MinPT, RedPT_Noise };

inline const char* to_string(Technology t) {
    switch (t) {
        case Technology::LTE: return "LTE";
    }
    return "?";
}

inline const char* to_string(PowerScenario p) {
    switch (p) {
        case PowerScenario::MaxPT: return "MaxPT";
        case PowerScenario::MinPT: return "MinPT";
        case PowerScenario::RedPT_Noise: return "RedPT_Noise";
    }
    return "?";
}

inline std::optional<PowerScenario> power_scenario_from_string(std::string_view s) {
    if (s == "MaxPT") return PowerScenario::MaxPT;
    if (s == "MinPT") return PowerScenario::MinPT;
    if (s == "RedPT_Noise") return PowerScenario::RedPT_Noise;
    return std::nullopt;
}

// Cell power/noise settings for each transmission-power scenario.
inline void scenario_power_levels(PowerScenario p, double& tx_power_db, double& noise_db) {
    switch (p) {
        case PowerScenario::MaxPT: tx_power_db = 0.0; noise_db = -30.0; return;
        case PowerScenario::MinPT: tx_power_db = -10.0; noise_db = -30.0; return;
        case PowerScenario::RedPT_Noise: tx_power_db = -20.0; noise_db = -20.0; return;
    }
}

struct ScenarioConfig {
    Technology technology = Technology::LTE;
    int bandwidth_mhz = 20;
    PowerScenario power_scenario = PowerScenario::MaxPT;
    double tx_power_db = 0.0;
    double noise_db = -30.0;

    static ScenarioConfig make(int bandwidth_mhz, PowerScenario p) {
        ScenarioConfig c;
        c.bandwidth_mhz = bandwidth_mhz;
        c.power_scenario = p;
        scenario_power_levels(p, c.tx_power_db, c.noise_db);
        return c;
    }

    // Stratum label used for the stratified split and reports.
    std::string stratum_key() const {
        return std::string(to_string(technology)) + "/" + std::to_string(bandwidth_mhz) +
               "MHz/" + to_string(power_scenario);
    }
};

struct KpiVector {
    double dl_throughput_mbps = 0.0;
    double ul_throughput_mbps = 0.0;
    double dl_retx_count = 0.0;
    double ul_retx_count = 0.0;
    double sinr_db = 0.0;
    double rsrp_dbm = 0.0;
    double carrier_freq_mhz = 0.0;
    double channel_util = 0.0;
    double cpe_wifi_rssi_dbm = 0.0;
    double cpe_link_rate_mbps = 0.0;
};

struct KqiVector {
    double resolution_level = 0.0;       // ordinal 0..5; 0 = nothing displayed
    double frame_rate_fps = 0.0;         // [0, 30]
    double initial_startup_ms = 0.0;     // session startup time, stamped on every sample
    double avg_stall_ms = 0.0;           // stall time accrued within the sample's second
    double client_throughput_mbps = 0.0;
    double latency_ms = 0.0;
};

struct Sample {
    long long experiment_id = 0;
    int t_s = 0;  // second index 0..119
    ScenarioConfig config;
    KpiVector kpis;
    KqiVector kqis;
};

// Per-experiment aggregate: resolution by median (lower of middle pair),
// everything else by arithmetic mean.
struct SessionRecord {
    long long experiment_id = 0;
    ScenarioConfig config;
    KpiVector kpis;
    KqiVector kqis;
    int n_samples = 0;
};

inline constexpr int kSessionSeconds = 120;
inline constexpr int kResolutionLevels = 6;  // 0..5

inline const std::array<std::string, 6>& kqi_names() {
    static const std::array<std::string, 6> names = {
        "resolution_level",       "frame_rate_fps",         "initial_startup_ms",
        "avg_stall_ms",           "client_throughput_mbps", "latency_ms"};
    return names;
}

inline const std::array<std::string, 10>& kpi_names() {
    static const std::array<std::string, 10> names = {
        "dl_throughput_mbps", "ul_throughput_mbps", "dl_retx_count",     "ul_retx_count",
        "sinr_db",            "rsrp_dbm",           "carrier_freq_mhz",  "channel_util",
        "cpe_wifi_rssi_dbm",  "cpe_link_rate_mbps"};
    return names;
}

inline const std::array<std::string, 5>& config_feature_names() {
    static const std::array<std::string, 5> names = {
        "technology", "bandwidth_mhz", "power_scenario", "tx_power_db", "noise_db"};
    return names;
}

// Exact persisted column order.
inline const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols = [] {
        std::vector<std::string> v = {"experiment_id", "t_s"};
        for (const auto& n : config_feature_names()) v.push_back(n);
        for (const auto& n : kpi_names()) v.push_back(n);
        for (const auto& n : kqi_names()) v.push_back(n);
        return v;
    }();
    return cols;
}

inline double kpi_field(const KpiVector& k, size_t i) {
    switch (i) {
        case 0: return k.dl_throughput_mbps;
        case 1: return k.ul_throughput_mbps;
        case 2: return k.dl_retx_count;
        case 3: return k.ul_retx_count;
        case 4: return k.sinr_db;
        case 5: return k.rsrp_dbm;
        case 6: return k.carrier_freq_mhz;
        case 7: return k.channel_util;
        case 8: return k.cpe_wifi_rssi_dbm;
        case 9: return k.cpe_link_rate_mbps;
    }
    throw PipelineError("kpi_field index out of range");
}

inline double& kpi_field_ref(KpiVector& k, size_t i) {
    switch (i) {
        case 0: return k.dl_throughput_mbps;
        case 1: return k.ul_throughput_mbps;
        case 2: return k.dl_retx_count;
        case 3: return k.ul_retx_count;
        case 4: return k.sinr_db;
        case 5: return k.rsrp_dbm;
        case 6: return k.carrier_freq_mhz;
        case 7: return k.channel_util;
        case 8: return k.cpe_wifi_rssi_dbm;
        case 9: return k.cpe_link_rate_mbps;
    }
    throw PipelineError("kpi_field index out of range");
}

inline double kqi_field(const KqiVector& k, size_t i) {
    switch (i) {
        case 0: return k.resolution_level;
        case 1: return k.frame_rate_fps;
        case 2: return k.initial_startup_ms;
        case 3: return k.avg_stall_ms;
        case 4: return k.client_throughput_mbps;
        case 5: return k.latency_ms;
    }
    throw PipelineError("kqi_field index out of range");
}

inline double& kqi_field_ref(KqiVector& k, size_t i) {
    switch (i) {
        case 0: return k.resolution_level;
        case 1: return k.frame_rate_fps;
        case 2: return k.initial_startup_ms;
        case 3: return k.avg_stall_ms;
        case 4: return k.client_throughput_mbps;
        case 5: return k.latency_ms;
    }
    throw PipelineError("kqi_field index out of range");
}

// Encoding of config columns as features. power_scenario uses its ordinal.
inline double config_feature(const ScenarioConfig& c, size_t i) {
    switch (i) {
        case 0: return static_cast<double>(static_cast<int>(c.technology));
        case 1: return static_cast<double>(c.bandwidth_mhz);
        case 2: return static_cast<double>(static_cast<int>(c.power_scenario));
        case 3: return c.tx_power_db;
        case 4: return c.noise_db;
    }
    throw PipelineError("config_feature index out of range");
}

// ---------------------------------------------------------------------------
// Row-level validation. Returns the first violated invariant, if any.
// ---------------------------------------------------------------------------

inline bool is_valid_bandwidth(int bw) {
    return bw == 5 || bw == 10 || bw == 15 || bw == 20;
}

inline bool is_integral(double v) { return std::isfinite(v) && v == std::floor(v); }

inline std::optional<std::string> validate_sample(const Sample& s) {
    const auto finite = [](double v) { return std::isfinite(v); };

    if (!is_valid_bandwidth(s.config.bandwidth_mhz)) return "bandwidth not in {5,10,15,20}";
    double tx = 0, noise = 0;
    scenario_power_levels(s.config.power_scenario, tx, noise);
    if (s.config.tx_power_db != tx || s.config.noise_db != noise)
        return "power levels inconsistent with scenario";
    if (s.t_s < 0 || s.t_s >= kSessionSeconds) return "t_s outside [0,119]";

    const KpiVector& kp = s.kpis;
    for (size_t i = 0; i < kpi_names().size(); ++i)
        if (!finite(kpi_field(kp, i))) return "non-finite " + kpi_names()[i];
    if (kp.dl_throughput_mbps < 0 || kp.ul_throughput_mbps < 0) return "negative throughput";
    if (kp.dl_retx_count < 0 || kp.ul_retx_count < 0) return "negative retx count";
    if (!is_integral(kp.dl_retx_count) || !is_integral(kp.ul_retx_count))
        return "retx count not an integer";
    if (kp.channel_util < 0.0 || kp.channel_util > 1.0) return "channel_util outside [0,1]";

    const KqiVector& kq = s.kqis;
    for (size_t i = 0; i < kqi_names().size(); ++i)
        if (!finite(kqi_field(kq, i))) return "non-finite " + kqi_names()[i];
    if (!is_integral(kq.resolution_level) || kq.resolution_level < 0 ||
        kq.resolution_level >= kResolutionLevels)
        return "resolution_level not in {0..5}";
    if (kq.frame_rate_fps < 0.0 || kq.frame_rate_fps > 30.0)
        return "frame_rate_fps outside [0,30]";
    if (kq.initial_startup_ms < 0 || kq.avg_stall_ms < 0 || kq.client_throughput_mbps < 0 ||
        kq.latency_ms < 0)
        return "negative KQI value";
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// CSV persistence. Fixed header, LF line endings, shortest round-trip floats.
// ---------------------------------------------------------------------------

struct CsvRejection {
    size_t line = 0;  // 1-based line number in the file
    long long experiment_id = -1;  // -1 when the id itself failed to parse
    std::string reason;
};

struct ReadResult {
    std::vector<Sample> samples;
    std::vector<CsvRejection> rejections;
};

inline void write_csv(const std::vector<Sample>& samples, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PipelineError("cannot open for writing: " + path);

    const auto& cols = csv_columns();
    for (size_t i = 0; i < cols.size(); ++i) {
        if (i) out << ',';
        out << cols[i];
    }
    out << '\n';

    std::string row;
    for (const Sample& s : samples) {
        if (auto why = validate_sample(s))
            throw ValidationError("write_csv: invalid sample (experiment " +
                                  std::to_string(s.experiment_id) + "): " + *why);
        row.clear();
        row += std::to_string(s.experiment_id);
        row += ',';
        row += std::to_string(s.t_s);
        row += ',';
        row += to_string(s.config.technology);
        row += ',';
        row += std::to_string(s.config.bandwidth_mhz);
        row += ',';
        row += to_string(s.config.power_scenario);
        row += ',';
        row += format_double(s.config.tx_power_db);
        row += ',';
        row += format_double(s.config.noise_db);
        for (size_t i = 0; i < kpi_names().size(); ++i) {
            row += ',';
            row += format_double(kpi_field(s.kpis, i));
        }
        for (size_t i = 0; i < kqi_names().size(); ++i) {
            row += ',';
            row += format_double(kqi_field(s.kqis, i));
        }
        row += '\n';
        out << row;
    }
    if (!out) throw PipelineError("write failed: " + path);
}

inline ReadResult read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PipelineError("cannot open for reading: " + path);

    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty CSV: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    const auto& cols = csv_columns();
    std::map<std::string, size_t> pos;
    for (size_t i = 0; i < header.size(); ++i) {
        if (pos.count(header[i]))
            throw ValidationError("csv schema: duplicate column '" + header[i] + "'");
        pos[header[i]] = i;
    }
    for (const auto& c : cols)
        if (!pos.count(c)) throw ValidationError("csv schema: missing column '" + c + "'");
    for (const auto& h : header) {
        bool known = false;
        for (const auto& c : cols)
            if (c == h) { known = true; break; }
        if (!known) throw ValidationError("csv schema: unknown column '" + h + "'");
    }

    // Column index of each schema column in this file.
    std::vector<size_t> at(cols.size());
    for (size_t i = 0; i < cols.size(); ++i) at[i] = pos[cols[i]];

    ReadResult result;
    std::vector<std::string> cells;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        cells.clear();
        size_t start = 0;
        for (;;) {
            const size_t comma = line.find(',', start);
            if (comma == std::string::npos) {
                cells.push_back(line.substr(start));
                break;
            }
            cells.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        if (cells.size() != header.size()) {
            result.rejections.push_back({line_no, -1, "wrong column count"});
            continue;
        }

        Sample s;
        std::string bad_cell;
        bool ok = true;

        long long id = -1;
        if (!parse_int(cells[at[0]], id)) {
            result.rejections.push_back({line_no, -1, "unparsable cell 'experiment_id'"});
            continue;
        }
        s.experiment_id = id;

        const auto num = [&](size_t schema_idx, double& out_val) {
            if (!parse_double(cells[at[schema_idx]], out_val)) {
                if (ok) bad_cell = cols[schema_idx];
                ok = false;
                return false;
            }
            return true;
        };

        long long t = 0;
        if (!parse_int(cells[at[1]], t)) {
            result.rejections.push_back({line_no, id, "unparsable cell 't_s'"});
            continue;
        }
        s.t_s = static_cast<int>(t);

        if (cells[at[2]] == "LTE") {
            s.config.technology = Technology::LTE;
        } else {
            result.rejections.push_back({line_no, id, "unknown technology"});
            continue;
        }
        long long bw = 0;
        if (!parse_int(cells[at[3]], bw)) {
            result.rejections.push_back({line_no, id, "unparsable cell 'bandwidth_mhz'"});
            continue;
        }
        s.config.bandwidth_mhz = static_cast<int>(bw);
        if (auto ps = power_scenario_from_string(cells[at[4]])) {
            s.config.power_scenario = *ps;
        } else {
            result.rejections.push_back({line_no, id, "unknown power_scenario"});
            continue;
        }
        num(5, s.config.tx_power_db);
        num(6, s.config.noise_db);
        for (size_t i = 0; i < kpi_names().size() && ok; ++i) num(7 + i, kpi_field_ref(s.kpis, i));
        for (size_t i = 0; i < kqi_names().size() && ok; ++i) num(17 + i, kqi_field_ref(s.kqis, i));
        if (!ok) {
            result.rejections.push_back({line_no, id, "unparsable cell '" + bad_cell + "'"});
            continue;
        }

        if (auto why = validate_sample(s)) {
            result.rejections.push_back({line_no, id, *why});
            continue;
        }
        result.samples.push_back(s);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Matrix assembly
// ---------------------------------------------------------------------------

enum class SplitTag { train, test, unsplit };
enum class Granularity { per_sample, per_session };

inline const char* to_string(SplitTag t) {
    switch (t) {
        case SplitTag::train: return "train";
        case SplitTag::test: return "test";
        case SplitTag::unsplit: return "unsplit";
    }
    return "?";
}

inline const char* to_string(Granularity g) {
    switch (g) {
        case Granularity::per_sample: return "per_sample";
        case Granularity::per_session: return "per_session";
    }
    return "?";
}

struct RowId {
    long long experiment_id = 0;
    int t_s = -1;  // -1 for session rows
};

struct DatasetMatrix {
    std::vector<std::string> feature_names;
    Matrix X;
    std::map<std::string, Vector> targets;  // all six KQIs
    SplitTag split_tag = SplitTag::unsplit;
    Granularity granularity = Granularity::per_session;
    std::vector<RowId> row_ids;
    std::vector<std::string> strata;  // per-row scenario key, kept for audits

    Eigen::Index rows() const { return X.rows(); }
    Eigen::Index cols() const { return X.cols(); }

    const Vector& target(const std::string& kqi) const {
        auto it = targets.find(kqi);
        if (it == targets.end()) throw ValidationError("unknown KQI target '" + kqi + "'");
        return it->second;
    }
};

// Which columns become features. KQIs are never eligible.
struct FeaturePolicy {
    bool include_config = true;
    // When non-empty, restricts features to this exact name list (schema order
    // is still enforced). Used to re-apply a zero-variance drop to new splits.
    std::vector<std::string> restrict_to;
};

namespace detail {

inline std::vector<std::string> feature_columns(const FeaturePolicy& policy) {
    std::vector<std::string> names;
    if (policy.include_config)
        for (const auto& n : config_feature_names()) names.push_back(n);
    for (const auto& n : kpi_names()) names.push_back(n);

    if (policy.restrict_to.empty()) return names;

    for (const auto& want : policy.restrict_to) {
        for (const auto& k : kqi_names())
            if (want == k)
                throw ValidationError("KQI '" + want + "' requested as a feature");
        bool known = false;
        for (const auto& n : names)
            if (n == want) { known = true; break; }
        if (!known) throw ValidationError("unknown feature column '" + want + "'");
    }
    std::vector<std::string> kept;
    for (const auto& n : names) {
        for (const auto& want : policy.restrict_to)
            if (n == want) { kept.push_back(n); break; }
    }
    return kept;
}

inline double feature_value(const ScenarioConfig& cfg, const KpiVector& kpis,
                            const std::string& name) {
    for (size_t i = 0; i < config_feature_names().size(); ++i)
        if (name == config_feature_names()[i]) return config_feature(cfg, i);
    for (size_t i = 0; i < kpi_names().size(); ++i)
        if (name == kpi_names()[i]) return kpi_field(kpis, i);
    throw PipelineError("feature_value: unknown column " + name);
}

}  // namespace detail

inline DatasetMatrix to_matrix(const std::vector<SessionRecord>& records,
                               const FeaturePolicy& policy = {},
                               SplitTag tag = SplitTag::unsplit) {
    if (records.empty()) throw ValidationError("to_matrix: empty input");
    DatasetMatrix m;
    m.feature_names = detail::feature_columns(policy);
    m.split_tag = tag;
    m.granularity = Granularity::per_session;

    const Eigen::Index n = static_cast<Eigen::Index>(records.size());
    const Eigen::Index d = static_cast<Eigen::Index>(m.feature_names.size());
    m.X.resize(n, d);
    for (const auto& kqi : kqi_names()) m.targets[kqi] = Vector(n);
    m.row_ids.reserve(records.size());
    m.strata.reserve(records.size());

    for (Eigen::Index r = 0; r < n; ++r) {
        const SessionRecord& rec = records[static_cast<size_t>(r)];
        for (Eigen::Index c = 0; c < d; ++c)
            m.X(r, c) = detail::feature_value(rec.config, rec.kpis,
                                              m.feature_names[static_cast<size_t>(c)]);
        for (size_t k = 0; k < kqi_names().size(); ++k)
            m.targets[kqi_names()[k]](r) = kqi_field(rec.kqis, k);
        m.row_ids.push_back({rec.experiment_id, -1});
        m.strata.push_back(rec.config.stratum_key());
    }
    return m;
}

inline DatasetMatrix to_matrix(const std::vector<Sample>& samples,
                               const FeaturePolicy& policy = {},
                               SplitTag tag = SplitTag::unsplit) {
    if (samples.empty()) throw ValidationError("to_matrix: empty input");
    DatasetMatrix m;
    m.feature_names = detail::feature_columns(policy);
    m.split_tag = tag;
    m.granularity = Granularity::per_sample;

    const Eigen::Index n = static_cast<Eigen::Index>(samples.size());
    const Eigen::Index d = static_cast<Eigen::Index>(m.feature_names.size());
    m.X.resize(n, d);
    for (const auto& kqi : kqi_names()) m.targets[kqi] = Vector(n);
    m.row_ids.reserve(samples.size());
    m.strata.reserve(samples.size());

    for (Eigen::Index r = 0; r < n; ++r) {
        const Sample& s = samples[static_cast<size_t>(r)];
        for (Eigen::Index c = 0; c < d; ++c)
            m.X(r, c) = detail::feature_value(s.config, s.kpis,
                                              m.feature_names[static_cast<size_t>(c)]);
        for (size_t k = 0; k < kqi_names().size(); ++k)
            m.targets[kqi_names()[k]](r) = kqi_field(s.kqis, k);
        m.row_ids.push_back({s.experiment_id, s.t_s});
        m.strata.push_back(s.config.stratum_key());
    }
    return m;
}

}  // namespace kqi

#endif  // KQI_DATA_MODEL_HPP

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "kqi/data_model.hpp"
#include "kqi/simulator.hpp"

using namespace kqi;

namespace {

Sample make_sample(long long id = 7, int t = 3) {
    Sample s;
    s.experiment_id = id;
    s.t_s = t;
    s.config = ScenarioConfig::make(20, PowerScenario::MaxPT);
    s.kpis = {12.5, 0.2, 3, 1, 21.7, -69.3, 1842.5, 0.41, -44.2, 251.0};
    s.kqis = {4, 30.0, 2000.0, 0.0, 11.25, 48.5};
    return s;
}

std::filesystem::path temp_csv(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

size_t count_lines(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    size_t n = 0;
    std::string line;
    while (std::getline(in, line)) ++n;
    return n;
}

}  // namespace

TEST(DataModel, SingleSampleWritesHeaderPlusOneRow) {
    const auto path = temp_csv("kqi_single.csv");
    write_csv({make_sample()}, path.string());
    EXPECT_EQ(count_lines(path), 2u);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header,
              "experiment_id,t_s,technology,bandwidth_mhz,power_scenario,tx_power_db,"
              "noise_db,dl_throughput_mbps,ul_throughput_mbps,dl_retx_count,ul_retx_count,"
              "sinr_db,rsrp_dbm,carrier_freq_mhz,channel_util,cpe_wifi_rssi_dbm,"
              "cpe_link_rate_mbps,resolution_level,frame_rate_fps,initial_startup_ms,"
              "avg_stall_ms,client_throughput_mbps,latency_ms");
    std::filesystem::remove(path);
}

TEST(DataModel, RoundTripIsExact) {
    std::vector<Sample> samples;
    for (int cfg = 0; cfg < 3; ++cfg) {
        auto session = simulate_session(
            ScenarioConfig::make(cfg == 0 ? 5 : 20,
                                 cfg == 1 ? PowerScenario::MinPT : PowerScenario::RedPT_Noise),
            1234 + cfg);
        for (auto& s : session) s.experiment_id = cfg;
        samples.insert(samples.end(), session.begin(), session.end());
    }
    const auto path = temp_csv("kqi_roundtrip.csv");
    write_csv(samples, path.string());
    const ReadResult back = read_csv(path.string());
    EXPECT_TRUE(back.rejections.empty());
    ASSERT_EQ(back.samples.size(), samples.size());
    for (size_t i = 0; i < samples.size(); ++i) {
        const Sample& a = samples[i];
        const Sample& b = back.samples[i];
        EXPECT_EQ(a.experiment_id, b.experiment_id);
        EXPECT_EQ(a.t_s, b.t_s);
        EXPECT_EQ(a.config.bandwidth_mhz, b.config.bandwidth_mhz);
        EXPECT_EQ(a.config.power_scenario, b.config.power_scenario);
        for (size_t f = 0; f < kpi_names().size(); ++f)
            EXPECT_EQ(kpi_field(a.kpis, f), kpi_field(b.kpis, f)) << kpi_names()[f];
        for (size_t f = 0; f < kqi_names().size(); ++f)
            EXPECT_EQ(kqi_field(a.kqis, f), kqi_field(b.kqis, f)) << kqi_names()[f];
    }
    std::filesystem::remove(path);
}

TEST(DataModel, BadBandwidthRowIsRejectedWithReason) {
    const auto path = temp_csv("kqi_badbw.csv");
    write_csv({make_sample()}, path.string());
    // Append a row with bandwidth 7.
    {
        std::ifstream in(path);
        std::string header, row;
        std::getline(in, header);
        std::getline(in, row);
        in.close();
        auto pos = row.find(",20,");
        ASSERT_NE(pos, std::string::npos);
        std::string bad = row.substr(0, pos) + ",7," + row.substr(pos + 4);
        std::ofstream out(path, std::ios::app);
        out << bad << "\n";
    }
    const ReadResult r = read_csv(path.string());
    EXPECT_EQ(r.samples.size(), 1u);
    ASSERT_EQ(r.rejections.size(), 1u);
    EXPECT_EQ(r.rejections[0].reason, "bandwidth not in {5,10,15,20}");
    std::filesystem::remove(path);
}

TEST(DataModel, UnparsableCellRejectsRowOnly) {
    const auto path = temp_csv("kqi_badcell.csv");
    write_csv({make_sample(1), make_sample(2)}, path.string());
    std::string content;
    {
        std::ifstream in(path);
        std::string line;
        bool first_row = true;
        while (std::getline(in, line)) {
            if (line.rfind("1,", 0) == 0 && first_row) {
                first_row = false;
                const auto last = line.find_last_of(',');
                line = line.substr(0, last) + ",not_a_number";
            }
            content += line + "\n";
        }
    }
    {
        std::ofstream out(path, std::ios::binary);
        out << content;
    }
    const ReadResult r = read_csv(path.string());
    EXPECT_EQ(r.samples.size(), 1u);
    ASSERT_EQ(r.rejections.size(), 1u);
    EXPECT_EQ(r.rejections[0].reason, "unparsable cell 'latency_ms'");
    EXPECT_EQ(r.rejections[0].experiment_id, 1);
    std::filesystem::remove(path);
}

TEST(DataModel, MissingColumnIsSchemaError) {
    const auto path = temp_csv("kqi_missingcol.csv");
    {
        std::ofstream out(path);
        std::string header;
        for (const auto& c : csv_columns())
            if (c != "latency_ms") header += (header.empty() ? "" : ",") + c;
        out << header << "\n";
    }
    try {
        read_csv(path.string());
        FAIL() << "expected schema error";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("latency_ms"), std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST(DataModel, UnknownColumnIsSchemaError) {
    const auto path = temp_csv("kqi_unknowncol.csv");
    {
        std::ofstream out(path);
        std::string header;
        for (const auto& c : csv_columns()) header += (header.empty() ? "" : ",") + c;
        out << header << ",mystery\n";
    }
    EXPECT_THROW(read_csv(path.string()), ValidationError);
    std::filesystem::remove(path);
}

TEST(DataModel, ToMatrixShapesAndTargets) {
    std::vector<SessionRecord> records;
    for (int i = 0; i < 10; ++i) {
        SessionRecord r;
        r.experiment_id = i;
        r.config = ScenarioConfig::make(10, PowerScenario::MinPT);
        r.kpis.dl_throughput_mbps = i;
        r.kqis.latency_ms = 2.0 * i;
        records.push_back(r);
    }
    const DatasetMatrix m = to_matrix(records);
    EXPECT_EQ(m.rows(), 10);
    EXPECT_EQ(m.cols(), 15);  // 5 config + 10 KPI columns
    EXPECT_EQ(m.targets.size(), 6u);
    for (const auto& kqi : kqi_names()) EXPECT_EQ(m.target(kqi).size(), 10);
    EXPECT_EQ(m.target("latency_ms")(3), 6.0);

    FeaturePolicy kpis_only;
    kpis_only.include_config = false;
    const DatasetMatrix m2 = to_matrix(records, kpis_only);
    EXPECT_EQ(m2.cols(), static_cast<Eigen::Index>(kpi_names().size()));
}

TEST(DataModel, KqiAsFeatureIsRejected) {
    std::vector<SessionRecord> records(2);
    records[0].experiment_id = 0;
    records[1].experiment_id = 1;
    FeaturePolicy policy;
    policy.restrict_to = {"dl_throughput_mbps", "latency_ms"};
    EXPECT_THROW(to_matrix(records, policy), ValidationError);
}

TEST(DataModel, ToMatrixIsPure) {
    std::vector<SessionRecord> records(4);
    for (int i = 0; i < 4; ++i) {
        records[static_cast<size_t>(i)].experiment_id = i;
        records[static_cast<size_t>(i)].kpis.sinr_db = 3.5 * i - 1.0;
    }
    const DatasetMatrix a = to_matrix(records);
    const DatasetMatrix b = to_matrix(records);
    EXPECT_TRUE(a.X == b.X);
    EXPECT_TRUE(a.target("latency_ms") == b.target("latency_ms"));
}

TEST(DataModel, EmptyInputErrors) {
    EXPECT_THROW(to_matrix(std::vector<SessionRecord>{}), ValidationError);
    EXPECT_THROW(to_matrix(std::vector<Sample>{}), ValidationError);
}

TEST(DataModel, PowerScenarioEncodingsAreStable) {
    EXPECT_STREQ(to_string(PowerScenario::MaxPT), "MaxPT");
    EXPECT_STREQ(to_string(PowerScenario::MinPT), "MinPT");
    EXPECT_STREQ(to_string(PowerScenario::RedPT_Noise), "RedPT_Noise");
}

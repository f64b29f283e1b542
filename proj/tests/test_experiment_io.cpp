#include <gtest/gtest.h>

#include <sstream>

#include "rkmimo/experiment_io.hpp"
#include "rkmimo/presets.hpp"

using namespace rkmimo;

namespace {

const char* kMinimal = R"({
  "experiment": "ber-vs-snr",
  "geometry": "mmimo64",
  "users": [4],
  "snr_db": [0, 5],
  "schemes": ["MR", "RK"],
  "iterations": [6],
  "drops": 2,
  "symbols_per_drop": 3,
  "seed": 8
})";

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

} // namespace

TEST(Config, ParsesMinimalDocument) {
    const auto c = io::load_config(kMinimal);
    EXPECT_EQ(c.kind, sim::ExperimentKind::BerVsSnr);
    EXPECT_EQ(c.users, (std::vector<Index>{4}));
    EXPECT_EQ(c.iota, (std::vector<double>{0.0}));
    EXPECT_EQ(c.schemes, (std::vector<Scheme>{Scheme::MR, Scheme::RK}));
    EXPECT_EQ(c.seed, 8u);
    EXPECT_FALSE(c.omega.has_value());
}

TEST(Config, RejectsUnknownKeyAndMissingFields) {
    auto j = io::json::parse(kMinimal);
    j["color"] = "blue";
    EXPECT_THROW(io::config_from_json(j), ConfigError);
    j = io::json::parse(kMinimal);
    j.erase("seed");
    EXPECT_THROW(io::config_from_json(j), ConfigError);
    EXPECT_THROW(io::load_config("{not json"), ConfigError);
}

TEST(Config, EmptySchemeListNamesTheField) {
    auto j = io::json::parse(kMinimal);
    j["schemes"] = io::json::array();
    try {
        io::config_from_json(j);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(std::string(e.what()).rfind("schemes", 0), 0u) << e.what();
    }
    j["schemes"] = {"MR", "Zero-forcing"};
    EXPECT_THROW(io::config_from_json(j), ConfigError);
}

TEST(Config, JsonRoundTrip) {
    auto c = io::load_config(kMinimal);
    c.omega = 2;
    const auto back = io::config_from_json(io::config_to_json(c));
    EXPECT_EQ(io::config_to_json(back), io::config_to_json(c));
    EXPECT_EQ(io::config_hash(back), io::config_hash(c));
    c.seed = 9;
    EXPECT_NE(io::config_hash(back), io::config_hash(c));
}

TEST(Presets, AllValidate) {
    const auto names = presets::names();
    EXPECT_EQ(names.size(), 4u);
    for (const auto& name : names) {
        const auto c = presets::load(name);
        EXPECT_NO_THROW(sim::validate(c)) << name;
        EXPECT_EQ(c.drops, 500u);
    }
    EXPECT_EQ(presets::load("mmimo64-fig4").iterations, (std::vector<std::size_t>{12}));
    EXPECT_EQ(presets::load("xl256-fig6").iterations, (std::vector<std::size_t>{64}));
    EXPECT_THROW(presets::load("fig7"), ConfigError);
}

TEST(Manifest, ReloadsIntoSameConfig) {
    io::RunManifest m;
    m.config = presets::load("xl256-fig5");
    m.command = "convergence";
    m.seed = m.config.seed;
    m.threads = 4;
    m.outputs = {"xl256-fig5.csv"};
    const auto text = io::manifest_to_json(m).dump(2);
    const auto j = io::json::parse(text);
    EXPECT_EQ(j.at("tool_version"), io::kToolVersion);
    EXPECT_EQ(j.at("config_hash").get<std::uint64_t>(), io::config_hash(m.config));
    const auto c = io::load_config(text);
    EXPECT_EQ(io::config_to_json(c), io::config_to_json(m.config));
}

TEST(Csv, BerRowsUseFullPrecision) {
    sim::BerResult r;
    sim::BerRow row;
    row.scheme = Scheme::GRK;
    row.M = 64;
    row.K = 8;
    row.D = 64;
    row.iota = 0.5;
    row.snr_db = -5.0;
    row.iterations = 12;
    row.bits = 3;
    row.bit_errors = 1;
    row.ber = 1.0 / 3.0;
    row.flops_model = 30220;
    row.flops_effective = 1234.5;
    row.seed = 4;
    r.rows.push_back(row);
    const auto l = lines(io::ber_csv(r));
    ASSERT_EQ(l.size(), 2u);
    EXPECT_EQ(l[0], io::kBerHeader);
    EXPECT_EQ(l[1], "GRK,64,8,64,0.5,-5,12,3,1,0.33333333333333331,30220,1234.5,4");
}

TEST(Csv, FlopsTableStatuses) {
    const auto l = lines(io::flops_csv(64, 8, 12, 3));
    ASSERT_EQ(l.size(), 8u);
    EXPECT_EQ(l[0], io::kFlopsHeader);
    EXPECT_EQ(l[1].rfind("MR,64,8,12,3,4080,", 0), 0u);
    EXPECT_NE(l[4].find(",20653,erratum"), std::string::npos);
    EXPECT_NE(l[5].find(",30220,match"), std::string::npos);
    const auto none = lines(io::flops_csv(10, 2, 3, 1));
    EXPECT_EQ(none[1].substr(none[1].size() - 2), ",,");
}

TEST(Csv, ExperimentOutputIsDeterministic) {
    const auto c = io::load_config(kMinimal);
    EXPECT_EQ(io::ber_csv(sim::run_experiment(c, 1)), io::ber_csv(sim::run_experiment(c, 2)));
}

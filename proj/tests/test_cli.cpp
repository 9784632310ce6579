#include <gtest/gtest.h>

#include <sstream>

#include "experiment.hpp"

using namespace mcfusion;
using namespace mcfusion::cli;

TEST(Config, DefaultsRoundTrip) {
    const ExperimentConfig c = default_config();
    const json doc = config_to_json(c);
    EXPECT_EQ(doc.at("schema_version"), 1);
    const ExperimentConfig back = config_from_json(doc);
    EXPECT_EQ(config_to_json(back).dump(), doc.dump());
    EXPECT_EQ(config_hash(back), config_hash(c));
    EXPECT_EQ(config_hash(c).size(), 16u);
    EXPECT_TRUE(back.topology.symmetric());
    EXPECT_NEAR(back.params.sk, 2000.0 / 3.0, 1e-9);
}

TEST(Config, HashFollowsContent) {
    ExperimentConfig a = default_config(), b = default_config();
    b.seed = 2;
    EXPECT_NE(config_hash(a), config_hash(b));
    b.seed = a.seed;
    b.topology.fc_radius *= 1.1;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, ErrorsCarryKeyPath) {
    const std::string text = "{\n  \"schema_version\": 1,\n  \"channel\": {\n    \"s0\": 8000,\n    \"bogus\": 1\n  }\n}\n";
    try {
        config_from_json(json::parse(text));
        FAIL() << "unknown key accepted";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.path(), "channel.bogus");
        EXPECT_EQ(locate(text, e.path()), 5);
    }
    EXPECT_THROW(config_from_json(json::parse(R"({"schema_version": 2})")), ConfigError);
    EXPECT_THROW(config_from_json(json::parse(R"({"channel": {"length": 21}})")), ConfigError);
    EXPECT_THROW(config_from_json(json::parse(R"({"simulate": {"trials": 10}})")), ConfigError);
    EXPECT_THROW(config_from_json(json::parse(R"({"scenario": "lossy"})")), ConfigError);
}

TEST(Config, RuleAndValueParsing) {
    EXPECT_EQ(parse_rule("majority", 5).n, 3u);
    EXPECT_EQ(parse_rule("n-of-k:2", 4).n, 2u);
    EXPECT_THROW(parse_rule("n-of-k:", 4), std::invalid_argument);
    EXPECT_THROW(parse_rule("xor", 4), std::invalid_argument);
    EXPECT_EQ(parse_values("1..6"), (std::vector<double>{1, 2, 3, 4, 5, 6}));
    EXPECT_EQ(parse_values("0.125,0.2, 0.25"), (std::vector<double>{0.125, 0.2, 0.25}));
    EXPECT_TRUE(parse_values("").empty());
    EXPECT_THROW(parse_values("3..1"), std::invalid_argument);
    EXPECT_THROW(parse_values("a,b"), std::invalid_argument);
}

TEST(Sweep, EmptyValuesRejected) {
    ExperimentConfig c = default_config();
    c.sweep.axis = "K";
    std::ostringstream out;
    EXPECT_THROW(run_sweep(c, out), ConfigError);
    c.sweep.values = {1, 2};
    c.sweep.axis = "volume";
    EXPECT_THROW(run_sweep(c, out), ConfigError);
}

TEST(Sweep, PointConstruction) {
    ExperimentConfig c = default_config();
    c.topology = presets::reference_topology(6);
    c.sweep.axis = "K";
    const ExperimentConfig one = sweep_point(c, 1);
    EXPECT_EQ(one.topology.receiver_count(), 1u);
    EXPECT_EQ(one.params.s0, 10000.0);
    EXPECT_EQ(one.params.sk, 2000.0);
    const ExperimentConfig four = sweep_point(c, 4);
    EXPECT_EQ(four.params.s0, 8000.0);
    EXPECT_EQ(four.params.sk, 500.0);
    c.sweep.axis = "k_fixed_volume";
    EXPECT_NEAR(sweep_point(c, 6).topology.rx_radius, 0.2e-6, 1e-15);
    EXPECT_NEAR(sweep_point(c, 3).topology.rx_radius, presets::fixed_volume_radius(3), 1e-15);
    c.topology = presets::reference_topology(2);
    c.sweep.axis = "K";
    EXPECT_EQ(sweep_point(c, 5).topology.rx[4].y, presets::reference_rx_positions()[4].y);
    c.topology.rx[1].y += 1e-7;
    EXPECT_THROW(sweep_point(c, 3), ConfigError);
    c.sweep.axis = "r_fc";
    EXPECT_NEAR(sweep_point(c, 0.15).topology.fc_radius, 0.15e-6, 1e-18);
    EXPECT_THROW(sweep_point(c, -1.0), ConfigError);
}

TEST(Sweep, ByteIdenticalOutput) {
    ExperimentConfig c = default_config();
    c.topology = presets::reference_topology(6);
    c.scenario = Scenario::perfect;
    c.rules = {"majority", "or"};
    c.sweep.axis = "K";
    c.sweep.values = {1, 2, 3};
    std::ostringstream a, b;
    run_sweep(c, a);
    c.threads = 2;
    run_sweep(c, b);
    EXPECT_EQ(a.str(), b.str());
    std::istringstream lines(a.str());
    std::string header, row;
    std::getline(lines, header);
    EXPECT_EQ(header.rfind("config_hash,seed,candidates,scenario,rule,K,axis,value,method", 0), 0u);
    std::size_t rows = 0;
    while (std::getline(lines, row)) {
        EXPECT_EQ(row.rfind(config_hash(c) + ",1,32,perfect,", 0), 0u) << row;
        ++rows;
    }
    EXPECT_GE(rows, 12u);
}

TEST(Evaluate, GridRowsMatchEvaluator) {
    ExperimentConfig c = default_config();
    c.scenario = Scenario::perfect;
    c.rules = {"and"};
    c.evaluate.xi_r = std::pair<long, long>{3, 5};
    std::ostringstream out;
    run_evaluate(c, out);
    const cli::Setup s = make_setup(c, "and");
    const ExactEvaluator ev = make_evaluator(c, s);
    std::istringstream lines(out.str());
    std::string row;
    std::getline(lines, row);
    std::size_t n = 0;
    while (std::getline(lines, row)) {
        ++n;
        EXPECT_NE(row.find(fmt(ev(static_cast<long>(2 + n)))), std::string::npos) << row;
    }
    EXPECT_EQ(n, 3u);
}

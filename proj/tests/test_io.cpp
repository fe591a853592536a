#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mmdtest/io.hpp"
#include "test_util.hpp"

using namespace mmdtest;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = "/tmp/mmdtest_io_" + name;
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST(JsonRoundTrip, Distributions) {
    const auto P = testutil::coin(0.3);
    const AnyDistribution back = distribution_from_json(to_json(P));
    const auto& p2 = std::get<DiscreteDistribution>(back);
    EXPECT_EQ(p2.support, P.support);
    EXPECT_EQ(p2.pmf, P.pmf);

    Eigen::MatrixXd cov(2, 2);
    cov << 1.5, 0.2, 0.2, 0.9;
    const GaussianSpec G(Eigen::Vector2d(1, 2), cov);
    const auto& g2 = std::get<GaussianSpec>(distribution_from_json(to_json(G)));
    EXPECT_EQ(g2.mean, G.mean);
    EXPECT_EQ(g2.cov, G.cov);

    const GaussianMixture M({0.25, 0.75}, {GaussianSpec::standard(1), GaussianSpec::standard(1)});
    const auto& m2 = std::get<GaussianMixture>(distribution_from_json(to_json(M)));
    EXPECT_EQ(m2.weights, M.weights);
    ASSERT_EQ(m2.components.size(), 2u);
}

TEST(JsonRoundTrip, KernelAndThreshold) {
    const KernelSpec k(2.5);
    const KernelSpec k2 = kernel_from_json(to_json(k));
    EXPECT_EQ(k2.bandwidth, 2.5);
    EXPECT_THROW(kernel_from_json(json{{"family", "linear"}, {"bandwidth", 1.0}}), ConfigError);
    EXPECT_THROW(kernel_from_json(json{{"bandwidth", -1.0}}), ConfigError);

    ThresholdSpec spec;
    spec.policy = ThresholdPolicy::combined;
    spec.B = 321;
    const json j = to_json(spec);
    EXPECT_EQ(j.at("policy"), "combined");
    EXPECT_EQ(j.at("B"), 321);
}

TEST(JsonErrors, MalformedDistributionsAreConfigErrors) {
    EXPECT_THROW(distribution_from_json(json{{"type", "copula"}}), ConfigError);
    EXPECT_THROW(distribution_from_json(json::array()), ConfigError);
    // ragged covariance
    json bad = {{"type", "gaussian"}, {"mean", {0.0, 0.0}}, {"cov", {{1.0, 0.0}, {0.0}}}};
    EXPECT_THROW(distribution_from_json(bad), ConfigError);
    // pmf that does not sum to one
    json bad2 = {{"type", "discrete"}, {"support", {{0.0}, {1.0}}}, {"pmf", {0.5, 0.6}}};
    EXPECT_THROW(distribution_from_json(bad2), ConfigError);
}

TEST(CsvSamples, ReadsPlainAndHeadered) {
    const std::string p1 = write_temp("ok.csv", "1.0,2.0\n3.5,-4.25\n");
    const Sample s = read_sample_csv(p1);
    EXPECT_EQ(s.n(), 2);
    EXPECT_EQ(s.dim(), 2);
    EXPECT_EQ(s.data(1, 1), -4.25);

    const std::string p2 = write_temp("hdr.csv", "x,y\n1,2\n");
    const Sample s2 = read_sample_csv(p2, true);
    EXPECT_EQ(s2.n(), 1);
}

TEST(CsvSamples, DiagnosticsNameTheRow) {
    const std::string bad = write_temp("bad.csv", "1.0\n2.0\nnope\n");
    try {
        read_sample_csv(bad);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos);
    }
    const std::string ragged = write_temp("ragged.csv", "1,2\n3\n");
    EXPECT_THROW(read_sample_csv(ragged), ConfigError);
    const std::string empty = write_temp("empty.csv", "");
    EXPECT_THROW(read_sample_csv(empty), ConfigError);
    EXPECT_THROW(read_sample_csv("/tmp/definitely_missing_426.csv"), ConfigError);
}

TEST(CsvEmission, HeaderCommentAndShape) {
    ErrorCurve curve;
    curve.seed = 42;
    ErrorCurveRow row;
    row.n = row.m = 10;
    row.trials = 100;
    row.type_I_rate = 0.01;
    row.type_II_rate = 0.25;
    row.threshold_policy = "permutation";
    row.bandwidth_rule = "median";
    curve.rows.push_back(row);
    const std::string csv = to_csv(curve, 0xdeadbeefull);
    EXPECT_EQ(csv.rfind("# config_hash=", 0), 0u);
    EXPECT_NE(csv.find("seed=42"), std::string::npos);
    EXPECT_NE(csv.find("n,m,trials,type_I_rate,type_II_rate,threshold_policy,bandwidth_rule"),
              std::string::npos);
    EXPECT_NE(csv.find("10,10,100,0.01,0.25,permutation,median"), std::string::npos);

    // NaN type-II (null config) prints as an empty field
    curve.rows[0].type_II_rate = std::numeric_limits<double>::quiet_NaN();
    const std::string csv2 = to_csv(curve, 0xdeadbeefull);
    EXPECT_NE(csv2.find("10,10,100,0.01,,permutation,median"), std::string::npos);
}

TEST(CsvEmission, ErrorCurvePointsCarrySpecColumns) {
    std::vector<ErrorCurvePoint> pts(1);
    pts[0].n = pts[0].m = 25;
    pts[0].beta = 0.5;
    pts[0].rate = 0.01;
    pts[0].dstar = 0.1;
    const std::string csv = to_csv(pts, 1, 2);
    EXPECT_NE(csv.find("n,m,beta,rate,dstar"), std::string::npos);
}

TEST(AtomicWrite, NoTempFileLeftBehind) {
    const std::string path = "/tmp/mmdtest_io_atomic.txt";
    atomic_write_file(path, "payload");
    EXPECT_EQ(testutil::slurp(path), "payload");
    EXPECT_FALSE(std::filesystem::exists(path + ".tmp"));
    std::remove(path.c_str());
}

TEST(ConfigHash, StableAndSensitive) {
    const json a = {{"x", 1}, {"y", "z"}};
    const json b = {{"x", 2}, {"y", "z"}};
    EXPECT_EQ(config_hash(a), config_hash(a));
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(ConfigParsing, TwoSampleFromJson) {
    const json j = {
        {"experiment", "two_sample"},
        {"p", {{"type", "gaussian"}, {"mean", {0.0}}, {"cov", {{1.0}}}}},
        {"q", {{"type", "gaussian"}, {"mean", {1.0}}, {"cov", {{1.0}}}}},
        {"n_grid", {10, 20}},
        {"trials", 5},
        {"kernel", {{"family", "gaussian"}, {"bandwidth", "median"}}},
        {"threshold", {{"policy", "permutation"}, {"B", 25}}},
        {"statistic", "biased"}};
    const TwoSampleConfig cfg = two_sample_config_from_json(j);
    EXPECT_TRUE(cfg.bandwidth.median);
    EXPECT_EQ(cfg.B, 25);
    EXPECT_EQ(cfg.n_grid.size(), 2u);

    json missing = j;
    missing.erase("p");
    EXPECT_THROW(two_sample_config_from_json(missing), ConfigError);
}

TEST(ConfigParsing, SweepSetupsAndChangepoint) {
    const json grid = {{"experiment", "sweep"},
                       {"setup", "grid"},
                       {"bandwidths", {1.0, 2.0}},
                       {"n_grid", {20}},
                       {"trials", 3},
                       {"B", 10}};
    const SweepConfig cfg = sweep_config_from_json(grid, 7);
    EXPECT_EQ(std::get<GaussianMixture>(cfg.p).components.size(), 9u);

    const json mix = {{"experiment", "sweep"}, {"setup", "mixture"},
                      {"bandwidths", {1.0}},   {"n_grid", {20}},
                      {"trials", 3},           {"B", 10}};
    const SweepConfig cfg2 = sweep_config_from_json(mix, 7);
    EXPECT_EQ(std::get<GaussianMixture>(cfg2.p).components.size(), 5u);
    EXPECT_THROW(sweep_config_from_json(json{{"setup", "torus"}}, 7), ConfigError);

    const json cp = {{"experiment", "changepoint"},
                     {"shifts", {0.0, 1.0}},
                     {"n_grid", {50}},
                     {"trials", 4},
                     {"window", {10, 40}}};
    const ChangepointConfig cfg3 = changepoint_config_from_json(cp);
    ASSERT_TRUE(cfg3.window.has_value());
    EXPECT_EQ(cfg3.window->first, 10);
}

TEST(JsonOutput, OutcomeAndReportShapes) {
    TestOutcome o;
    o.reject = true;
    o.statistic = 0.4;
    o.threshold = 0.3;
    const json j = to_json(o);
    EXPECT_EQ(j.at("decision"), "reject_H0");
    EXPECT_EQ(j.at("statistic_kind"), "biased");

    ExponentReport rep;
    rep.exponent = kInf;
    const json jr = to_json(rep);
    EXPECT_EQ(jr.at("exponent"), "inf");
    EXPECT_TRUE(jr.at("minimizer").is_null());

    ChangePointResult cp;
    cp.detected = false;
    const json jc = to_json(cp);
    EXPECT_TRUE(jc.at("estimated_index").is_null());
    EXPECT_FALSE(jc.contains("per_index_statistics"));
}

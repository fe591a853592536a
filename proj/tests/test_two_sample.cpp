#include <gtest/gtest.h>

#include "mmdtest/two_sample.hpp"
#include "test_util.hpp"

using namespace mmdtest;

TEST(Decide, IdenticalSamplesAcceptUnderLdb) {
    Rng rng(41);
    const Sample X = testutil::random_sample(15, 2, rng);
    ThresholdSpec spec;
    spec.policy = ThresholdPolicy::ldb;
    const TestOutcome out = decide(X, X, KernelSpec(1.0), spec, StatisticKind::biased);
    EXPECT_FALSE(out.reject);
    EXPECT_NEAR(out.statistic, 0.0, 1e-9);
    EXPECT_GT(out.threshold, 0.0);
}

TEST(Decide, OutcomeInvariantHolds) {
    Rng rng(42);
    for (int rep = 0; rep < 10; ++rep) {
        const Sample X = testutil::random_sample(20, 1, rng);
        const Sample Y = testutil::random_sample(20, 1, rng, 1.0 + rep * 0.3);
        ThresholdSpec spec;
        spec.policy = ThresholdPolicy::permutation;
        spec.B = 50;
        spec.seed = static_cast<std::uint64_t>(rep);
        const TestOutcome out = decide(X, Y, KernelSpec(1.0), spec, StatisticKind::biased);
        EXPECT_EQ(out.accept(), out.statistic <= out.threshold);
    }
}

TEST(Decide, IncompatiblePairingsRejected) {
    Rng rng(43);
    const Sample X = testutil::random_sample(10, 1, rng);
    const Sample Y = testutil::random_sample(12, 1, rng);
    const KernelSpec k(1.0);
    ThresholdSpec spec;
    spec.policy = ThresholdPolicy::unbiased_ldb;
    // wrong statistic kind
    EXPECT_THROW(decide(X, X, k, spec, StatisticKind::biased), std::invalid_argument);
    // n != m
    EXPECT_THROW(decide(X, Y, k, spec, StatisticKind::unbiased), std::invalid_argument);
    spec.policy = ThresholdPolicy::one_sample;
    EXPECT_THROW(decide(X, X, k, spec, StatisticKind::biased), std::invalid_argument);
    spec.policy = ThresholdPolicy::ldb;
    EXPECT_THROW(decide(X, Y, k, spec, StatisticKind::unbiased), std::invalid_argument);
}

TEST(Decide, SampleOrderInvariance) {
    Rng rng(44);
    const Sample X = testutil::random_sample(18, 1, rng);
    const Sample Y = testutil::random_sample(18, 1, rng, 2.0);
    Eigen::MatrixXd reversed = X.data.colwise().reverse();
    ThresholdSpec spec;
    spec.policy = ThresholdPolicy::ldb;
    const TestOutcome a = decide(X, Y, KernelSpec(1.0), spec, StatisticKind::biased);
    const TestOutcome b = decide(Sample(reversed), Y, KernelSpec(1.0), spec, StatisticKind::biased);
    EXPECT_EQ(a.reject, b.reject);
    EXPECT_NEAR(a.statistic, b.statistic, 1e-12);
}

TEST(Decide, UnbiasedRouteUsesSquaredScale) {
    Rng rng(45);
    const Sample X = testutil::random_sample(40, 1, rng);
    const Sample Y = testutil::random_sample(40, 1, rng);
    ThresholdSpec spec;
    spec.policy = ThresholdPolicy::unbiased_ldb;
    const TestOutcome out = decide(X, Y, KernelSpec(1.0), spec, StatisticKind::unbiased);
    EXPECT_EQ(out.statistic_kind, StatisticKind::unbiased);
    EXPECT_NEAR(out.threshold, unbiased_ldb_threshold(40, 1.0, 0.05), 1e-15);
    EXPECT_NEAR(out.statistic, mmd2_unbiased(X, Y, KernelSpec(1.0)).squared, 1e-15);
}

TEST(Decide, KernelFamilySupStatistic) {
    Rng rng(46);
    const Sample X = testutil::random_sample(25, 1, rng);
    const Sample Y = testutil::random_sample(25, 1, rng, 2.5);
    const std::vector<KernelSpec> family{KernelSpec(0.5), KernelSpec(1.0), KernelSpec(4.0)};
    ThresholdSpec spec;
    spec.policy = ThresholdPolicy::permutation;
    spec.B = 100;
    spec.seed = 3;
    const TestOutcome out = decide(X, Y, family, spec);
    EXPECT_EQ(out.statistic, mmd_sup_family(X, Y, family));
    EXPECT_EQ(out.accept(), out.statistic <= out.threshold);

    ThresholdSpec ldb_spec;
    ldb_spec.policy = ThresholdPolicy::ldb;
    const TestOutcome out2 = decide(X, Y, family, ldb_spec);
    EXPECT_NEAR(out2.threshold, ldb_threshold(25, 25, 1.0, 0.05), 1e-15);
}

TEST(Decide, Figure1AlternativePowersUp) {
    // mu_P = (0.25, 0.25), mu_Q = (1, 1), identity covariance, n = m = 200:
    // the permutation test rejects essentially always
    const GaussianSpec P(Eigen::Vector2d(0.25, 0.25), Eigen::MatrixXd::Identity(2, 2));
    const GaussianSpec Q(Eigen::Vector2d(1.0, 1.0), Eigen::MatrixXd::Identity(2, 2));
    const int trials = 200;
    int rejects = 0;
    for (int tr = 0; tr < trials; ++tr) {
        const Sample X = sample(P, 200, Rng::derive(7000, static_cast<std::uint64_t>(tr)).next_u64());
        const Sample Y = sample(Q, 200, Rng::derive(7001, static_cast<std::uint64_t>(tr)).next_u64());
        ThresholdSpec spec;
        spec.policy = ThresholdPolicy::permutation;
        spec.B = 200;
        spec.seed = static_cast<std::uint64_t>(tr);
        if (decide(X, Y, KernelSpec(1.0), spec, StatisticKind::biased).reject) ++rejects;
    }
    EXPECT_GE(static_cast<double>(rejects) / trials, 0.99);
}

TEST(Decide, TypeIIRateNonIncreasingInSampleSize) {
    // fixed alternative, growing n = m; allow 2 binomial SEs of slack
    const GaussianSpec P(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
    Eigen::VectorXd mq(1);
    mq << 0.8;
    const GaussianSpec Q(mq, Eigen::MatrixXd::Identity(1, 1));
    const int trials = 150;
    double prev_rate = 1.0;
    for (const Index n : {25, 50, 100, 200}) {
        int accepts = 0;
        for (int tr = 0; tr < trials; ++tr) {
            const std::uint64_t s = static_cast<std::uint64_t>(n) * 1000 + tr;
            const Sample X = sample(P, n, Rng::derive(8000, s).next_u64());
            const Sample Y = sample(Q, n, Rng::derive(8001, s).next_u64());
            ThresholdSpec spec;
            spec.policy = ThresholdPolicy::permutation;
            spec.B = 100;
            spec.seed = s;
            if (!decide(X, Y, KernelSpec(1.0), spec, StatisticKind::biased).reject) ++accepts;
        }
        const double rate = static_cast<double>(accepts) / trials;
        const double se = std::sqrt(std::max(rate * (1 - rate), 1.0 / trials) / trials);
        EXPECT_LE(rate, prev_rate + 2.0 * se);
        prev_rate = rate;
    }
}

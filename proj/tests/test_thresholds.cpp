#include <gtest/gtest.h>

#include "mmdtest/thresholds.hpp"
#include "test_util.hpp"

using namespace mmdtest;

TEST(LdbThreshold, FrozenValueAndScaling) {
    EXPECT_NEAR(ldb_threshold(100, 100, 1.0, 0.05), 0.94324060629624780, 1e-12);
    // homogeneous of degree 1/2 in K
    EXPECT_DOUBLE_EQ(ldb_threshold(100, 100, 2.0, 0.05),
                     std::sqrt(2.0) * ldb_threshold(100, 100, 1.0, 0.05));
    // quadrupling both sample sizes halves the threshold exactly
    EXPECT_DOUBLE_EQ(ldb_threshold(400, 400, 1.0, 0.05),
                     0.5 * ldb_threshold(100, 100, 1.0, 0.05));
}

TEST(UnbiasedLdbThreshold, FrozenValueAndLimits) {
    EXPECT_NEAR(unbiased_ldb_threshold(100, 1.0, 0.05), 0.69232735304091414, 1e-12);
    EXPECT_NEAR(unbiased_ldb_threshold(400, 1.0, 0.05), 0.34616367652045707, 1e-12);
    EXPECT_DOUBLE_EQ(unbiased_ldb_threshold(400, 1.0, 0.05),
                     0.5 * unbiased_ldb_threshold(100, 1.0, 0.05));
    // alpha -> 1^- drives the threshold to 0
    EXPECT_LT(unbiased_ldb_threshold(100, 1.0, 1.0 - 1e-12), 1e-5);
}

TEST(OneSampleThreshold, FrozenValueAndMonotoneDecay) {
    EXPECT_NEAR(one_sample_threshold(100, 1.0, 0.05), 0.38619603930539116, 1e-12);
    EXPECT_THROW(one_sample_threshold(100, 0.0, 0.05), std::invalid_argument);
    double prev = one_sample_threshold(1, 1.0, 0.05);
    for (Index n : {2, 4, 8, 1024, 1 << 20}) {
        const double cur = one_sample_threshold(n, 1.0, 0.05);
        EXPECT_LT(cur, prev);
        prev = cur;
    }
}

TEST(ClosedFormThresholds, StrictlyDecreasingInSizeAndAlpha) {
    for (const double alpha : {0.01, 0.05, 0.2}) {
        EXPECT_LT(ldb_threshold(200, 100, 1.0, alpha), ldb_threshold(100, 100, 1.0, alpha));
        EXPECT_LT(ldb_threshold(100, 200, 1.0, alpha), ldb_threshold(100, 100, 1.0, alpha));
    }
    EXPECT_LT(ldb_threshold(100, 100, 1.0, 0.10), ldb_threshold(100, 100, 1.0, 0.05));
    EXPECT_LT(unbiased_ldb_threshold(100, 1.0, 0.10), unbiased_ldb_threshold(100, 1.0, 0.05));
    EXPECT_LT(one_sample_threshold(100, 1.0, 0.10), one_sample_threshold(100, 1.0, 0.05));
}

TEST(PermutationThreshold, DeterministicGivenSeed) {
    Rng rng(31);
    const Sample X = testutil::random_sample(20, 1, rng);
    const Sample Y = testutil::random_sample(25, 1, rng);
    const KernelSpec k(1.0);
    const double a = permutation_threshold(X, Y, k, 0.05, 50, 99, StatisticKind::biased);
    const double b = permutation_threshold(X, Y, k, 0.05, 50, 99, StatisticKind::biased);
    EXPECT_EQ(a, b);
    const double c = permutation_threshold(X, Y, k, 0.05, 50, 100, StatisticKind::biased);
    EXPECT_NE(a, c);
}

TEST(PermutationThreshold, SingleReplicateBoundary) {
    // B = 1: k = ceil(0.95 * 2) = 2, the larger of {observed, permuted}
    Rng rng(32);
    const Sample X = testutil::random_sample(10, 1, rng);
    const Sample Y = testutil::random_sample(10, 1, rng, 3.0);
    const KernelSpec k(1.0);
    const PooledGram pg(X, Y, k);
    const double obs = pg.observed(StatisticKind::biased);
    const double perm = detail::permutation_values(pg, 1, 7, StatisticKind::biased)[0];
    EXPECT_DOUBLE_EQ(permutation_threshold(pg, 0.05, 1, 7, StatisticKind::biased),
                     std::max(obs, perm));
}

TEST(CombinedThreshold, ExactlyTheMinimum) {
    Rng rng(33);
    const Sample X = testutil::random_sample(30, 1, rng);
    const Sample Y = testutil::random_sample(30, 1, rng);
    const KernelSpec k(1.0);
    const double perm = permutation_threshold(X, Y, k, 0.05, 100, 5, StatisticKind::biased);
    const double ldb = ldb_threshold(30, 30, 1.0, 0.05);
    EXPECT_EQ(combined_threshold(X, Y, k, 0.05, 100, 5, StatisticKind::biased),
              std::min(perm, ldb));
}

TEST(Lemma1Concentration, MonteCarloForm) {
    // under P = Q, freq{ d_k > 2 sqrt(K/m) + 2 sqrt(K/n) + eps } is bounded by
    // 2 exp(-eps^2 mn / (2K(m+n))) + 3 binomial SEs
    const Index n = 50;
    const int trials = 400;
    const KernelSpec k(1.0);
    for (const double eps : {0.1, 0.2, 0.4}) {
        int exceed = 0;
        for (int tr = 0; tr < trials; ++tr) {
            Rng rng = Rng::derive(900, static_cast<std::uint64_t>(tr));
            const Sample X = testutil::random_sample(n, 1, rng);
            const Sample Y = testutil::random_sample(n, 1, rng);
            const double d = mmd_biased(X, Y, k);
            if (d > 4.0 * std::sqrt(1.0 / n) + eps) ++exceed;
        }
        const double freq = static_cast<double>(exceed) / trials;
        const double bound =
            2.0 * std::exp(-eps * eps * static_cast<double>(n) * n / (2.0 * (n + n)));
        const double se = std::sqrt(std::max(freq * (1 - freq), 1.0 / trials) / trials);
        EXPECT_LE(freq, bound + 3.0 * se);
    }
}

TEST(LemmaC2Concentration, MonteCarloFormWithExactDistance) {
    // discrete P makes d_k(P, P_hat_n) exactly computable
    const auto P = testutil::coin(0.3);
    const KernelSpec k(1.0);
    const Index n = 60;
    const int trials = 400;
    for (const double eps : {0.1, 0.2, 0.4}) {
        int exceed = 0;
        for (int tr = 0; tr < trials; ++tr) {
            const Sample xs = sample(P, n, 1000 + static_cast<std::uint64_t>(tr));
            const double d = mmd_population_discrete(P, empirical_distribution(xs), k);
            if (d > std::sqrt(2.0 / n) + eps) ++exceed;
        }
        const double freq = static_cast<double>(exceed) / trials;
        const double bound = std::exp(-eps * eps * n / 2.0);
        const double se = std::sqrt(std::max(freq * (1 - freq), 1.0 / trials) / trials);
        EXPECT_LE(freq, bound + 3.0 * se);
    }
}

TEST(ThresholdSpec, Validation) {
    ThresholdSpec s;
    s.alpha = 0.0;
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s.alpha = 0.05;
    s.B = 0;
    EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(PolicyStrings, RoundTrip) {
    for (const auto p : {ThresholdPolicy::ldb, ThresholdPolicy::unbiased_ldb,
                         ThresholdPolicy::permutation, ThresholdPolicy::combined,
                         ThresholdPolicy::one_sample})
        EXPECT_EQ(threshold_policy_from_string(to_string(p)), p);
    EXPECT_THROW(threshold_policy_from_string("bogus"), std::invalid_argument);
}

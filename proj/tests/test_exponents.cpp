#include <gtest/gtest.h>

#include "mmdtest/exponents.hpp"
#include "test_util.hpp"

using namespace mmdtest;

TEST(Dstar, IdentityAndFrozenValue) {
    const auto P = testutil::coin(0.5);
    const auto Q = testutil::coin(0.9);
    EXPECT_NEAR(dstar(P, P, 0.3).value, 0.0, 1e-15);
    // -log(sqrt(0.45) + sqrt(0.05))
    EXPECT_NEAR(dstar(P, Q, 0.5).value, 0.11157177565710488, 1e-12);
    EXPECT_THROW(dstar(P, Q, 0.0), std::invalid_argument);
    EXPECT_THROW(dstar(P, Q, 1.0), std::invalid_argument);
}

TEST(Dstar, DisjointSupportsGiveInfinity) {
    Eigen::MatrixXd s1(1, 1), s2(1, 1);
    s1 << 0;
    s2 << 5;
    const DiscreteDistribution P(s1, Eigen::VectorXd::Ones(1));
    const DiscreteDistribution Q(s2, Eigen::VectorXd::Ones(1));
    EXPECT_TRUE(std::isinf(dstar(P, Q, 0.5).value));
    EXPECT_FALSE(dstar(P, Q, 0.5).minimizer.has_value());
}

TEST(Dstar, GaussianClosedFormFig1) {
    const GaussianSpec P(Eigen::Vector2d(0.25, 0.25), Eigen::MatrixXd::Identity(2, 2));
    const GaussianSpec Q(Eigen::Vector2d(1.0, 1.0), Eigen::MatrixXd::Identity(2, 2));
    // c(1-c)/2 ||dmu||^2 = 0.125 * 1.125, exactly representable
    EXPECT_DOUBLE_EQ(dstar(P, Q, 0.5), 0.140625);
}

TEST(Dstar, GaussianClosedFormAgreesWithQuadrature) {
    // independent oracle: -log integral p^c q^(1-c) by tensor Simpson
    const Eigen::Vector2d mp(0.25, 0.25), mq(1.0, 1.0);
    const GaussianSpec P(mp, Eigen::MatrixXd::Identity(2, 2));
    const GaussianSpec Q(mq, Eigen::MatrixXd::Identity(2, 2));
    for (const double c : {0.3, 0.5, 0.7}) {
        const double integral = testutil::chernoff_integral_gauss2d(mp, mq, c);
        EXPECT_NEAR(dstar(P, Q, c), -std::log(integral), 1e-6);
    }
}

TEST(Dstar, UnequalGaussianCovariancesRejected) {
    const GaussianSpec P(Eigen::Vector2d(0, 0), Eigen::MatrixXd::Identity(2, 2));
    const GaussianSpec Q(Eigen::Vector2d(1, 1), 2.0 * Eigen::MatrixXd::Identity(2, 2));
    EXPECT_THROW(dstar(P, Q, 0.5), std::invalid_argument);
}

TEST(Dstar, MinimizerAchievesTheValue) {
    Rng rng(51);
    for (int rep = 0; rep < 20; ++rep) {
        const int t = 2 + static_cast<int>(rng.below(3));
        const auto P = testutil::random_distribution(t, rng);
        const auto Q = testutil::random_distribution(t, rng);
        const double c = 0.1 + 0.8 * rng.uniform01();
        const DstarResult d = dstar(P, Q, c);
        ASSERT_TRUE(d.minimizer.has_value());
        const double via_kld = c * kld(*d.minimizer, P) + (1 - c) * kld(*d.minimizer, Q);
        EXPECT_NEAR(via_kld, d.value, 1e-10);
    }
}

TEST(Dstar, UpperBoundsFromPluggingEndpoints) {
    Rng rng(52);
    for (int rep = 0; rep < 30; ++rep) {
        const int t = 2 + static_cast<int>(rng.below(3));
        const auto P = testutil::random_distribution(t, rng);
        const auto Q = testutil::random_distribution(t, rng);
        const double c = 0.1 + 0.8 * rng.uniform01();
        const double v = dstar(P, Q, c).value;
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, (1 - c) * kld(P, Q) + 1e-12);  // R = P
        EXPECT_LE(v, c * kld(Q, P) + 1e-12);        // R = Q
    }
}

TEST(Dstar, ConcaveInC) {
    Rng rng(53);
    for (int rep = 0; rep < 10; ++rep) {
        const auto P = testutil::random_distribution(3, rng);
        const auto Q = testutil::random_distribution(3, rng);
        // midpoint concavity along a c grid
        for (double c = 0.1; c < 0.85; c += 0.1) {
            const double left = dstar(P, Q, c).value;
            const double mid = dstar(P, Q, c + 0.05).value;
            const double right = dstar(P, Q, c + 0.1).value;
            EXPECT_GE(mid, 0.5 * (left + right) - 1e-12);
        }
    }
}

TEST(Dstar, ZeroIffEqual) {
    Rng rng(54);
    for (int rep = 0; rep < 20; ++rep) {
        const int t = 2 + static_cast<int>(rng.below(3));
        const auto P = testutil::random_distribution(t, rng);
        const auto Q = testutil::random_distribution(t, rng);
        const double c = 0.25 + 0.5 * rng.uniform01();
        EXPECT_LE(dstar(P, P, c).value, 1e-14);
        if (testutil::total_variation(P.pmf, Q.pmf) > 1e-4) EXPECT_GT(dstar(P, Q, c).value, 0.0);
    }
}

TEST(DstarOracle, AgreesWithClosedFormOnFrozenPair) {
    const auto P = testutil::coin(0.5);
    const auto Q = testutil::coin(0.9);
    const DstarOracleResult o = dstar_oracle(P, Q, 0.5);
    EXPECT_TRUE(o.certified);
    EXPECT_NEAR(o.value, 0.111572, 1e-6);
}

TEST(DstarOracle, IdentityAndSymmetry) {
    Rng rng(55);
    const auto P = testutil::random_distribution(3, rng);
    const auto Q = testutil::random_distribution(3, rng);
    EXPECT_NEAR(dstar_oracle(P, P, 0.4).value, 0.0, 1e-9);
    EXPECT_NEAR(dstar_oracle(P, Q, 0.3).value, dstar_oracle(Q, P, 0.7).value, 1e-9);
}

TEST(DstarOracle, AlphabetCapEnforced) {
    Rng rng(56);
    Eigen::VectorXd p = Eigen::VectorXd::Constant(7, 1.0 / 7.0);
    const auto P = DiscreteDistribution::on_integers(p);
    EXPECT_THROW(dstar_oracle(P, P, 0.5), std::invalid_argument);
}

TEST(ExponentReport, BalancedAndDegenerate) {
    const auto P = testutil::coin(0.5);
    const auto Q = testutil::coin(0.9);
    const ExponentReport bal = exponent_report(P, Q, 100, 100);
    EXPECT_DOUBLE_EQ(bal.c, 0.5);
    EXPECT_EQ(bal.regime, Regime::balanced);
    EXPECT_EQ(bal.normalization, Normalization::per_total_samples);
    EXPECT_NEAR(bal.exponent, 0.11157177565710488, 1e-12);
    ASSERT_TRUE(bal.minimizer.has_value());

    const ExponentReport deg = exponent_report(P, Q, 100000, 100, Regime::degenerate);
    EXPECT_EQ(deg.normalization, Normalization::per_smaller_sample);
    EXPECT_NEAR(deg.exponent, 0.51082562376599068, 1e-12);

    const ExponentReport same = exponent_report(P, P, 50, 50);
    EXPECT_NEAR(same.exponent, 0.0, 1e-14);
    EXPECT_NEAR(exponent_report(P, P, 100, 1, Regime::degenerate).exponent, 0.0, 1e-14);
}

TEST(ExponentReport, GaussianPair) {
    const GaussianSpec P(Eigen::Vector2d(0.25, 0.25), Eigen::MatrixXd::Identity(2, 2));
    const GaussianSpec Q(Eigen::Vector2d(1.0, 1.0), Eigen::MatrixXd::Identity(2, 2));
    const ExponentReport rep = exponent_report(P, Q, 100, 100);
    EXPECT_DOUBLE_EQ(rep.exponent, 0.140625);
    EXPECT_FALSE(rep.minimizer.has_value());
    const ExponentReport deg = exponent_report(P, Q, 100, 1, Regime::degenerate);
    EXPECT_NEAR(deg.exponent, 0.5 * 1.125, 1e-12);
}

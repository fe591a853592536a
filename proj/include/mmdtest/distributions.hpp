#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mmdtest/accumulate.hpp"
#include "mmdtest/rng.hpp"

namespace mmdtest {

using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// n x d matrix of observations, one row per observation.
struct Sample {
    Eigen::MatrixXd data;

    Sample() = default;
    explicit Sample(Eigen::MatrixXd m) : data(std::move(m)) {
        if (data.rows() < 1) throw std::invalid_argument("Sample: need at least one row");
        if (!data.allFinite()) throw std::invalid_argument("Sample: non-finite entry");
    }

    Index n() const { return data.rows(); }
    Index dim() const { return data.cols(); }
};

// Finite pmf over embedded support points in R^d.
struct DiscreteDistribution {
    Eigen::MatrixXd support;  // t x d, rows pairwise distinct
    Eigen::VectorXd pmf;      // t, nonnegative, sums to 1

    DiscreteDistribution() = default;
    DiscreteDistribution(Eigen::MatrixXd support_points, Eigen::VectorXd masses)
        : support(std::move(support_points)), pmf(std::move(masses)) {
        if (support.rows() != pmf.size() || support.rows() == 0)
            throw std::invalid_argument("DiscreteDistribution: support/pmf size mismatch");
        if ((pmf.array() < 0).any())
            throw std::invalid_argument("DiscreteDistribution: negative mass");
        if (std::abs(pmf.sum() - 1.0) > 1e-12)
            throw std::invalid_argument("DiscreteDistribution: pmf does not sum to 1");
        for (Index i = 0; i < support.rows(); ++i)
            for (Index j = i + 1; j < support.rows(); ++j)
                if (support.row(i) == support.row(j))
                    throw std::invalid_argument("DiscreteDistribution: duplicate support point");
    }

    Index size() const { return pmf.size(); }
    Index dim() const { return support.cols(); }

    // Alphabet {0, 1, ..., t-1} embedded on the real line.
    static DiscreteDistribution on_integers(Eigen::VectorXd masses) {
        const Index t = masses.size();
        Eigen::MatrixXd pts(t, 1);
        for (Index i = 0; i < t; ++i) pts(i, 0) = static_cast<double>(i);
        return DiscreteDistribution(std::move(pts), std::move(masses));
    }
};

struct GaussianSpec {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    GaussianSpec() = default;
    GaussianSpec(Eigen::VectorXd mu, Eigen::MatrixXd sigma)
        : mean(std::move(mu)), cov(std::move(sigma)) {
        if (cov.rows() != cov.cols() || cov.rows() != mean.size())
            throw std::invalid_argument("GaussianSpec: dimension mismatch");
        if (((cov - cov.transpose()).array().abs() > 1e-12).any())
            throw std::invalid_argument("GaussianSpec: covariance not symmetric");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        if (es.eigenvalues().minCoeff() <= 0)
            throw std::invalid_argument("GaussianSpec: covariance not positive definite");
    }

    static GaussianSpec standard(Index d) {
        return GaussianSpec(Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Identity(d, d));
    }

    Index dim() const { return mean.size(); }
};

struct GaussianMixture {
    std::vector<double> weights;
    std::vector<GaussianSpec> components;

    GaussianMixture() = default;
    GaussianMixture(std::vector<double> w, std::vector<GaussianSpec> comps)
        : weights(std::move(w)), components(std::move(comps)) {
        if (weights.empty() || weights.size() != components.size())
            throw std::invalid_argument("GaussianMixture: weight/component mismatch");
        double s = 0;
        for (double x : weights) {
            if (x < 0) throw std::invalid_argument("GaussianMixture: negative weight");
            s += x;
        }
        if (std::abs(s - 1.0) > 1e-12)
            throw std::invalid_argument("GaussianMixture: weights do not sum to 1");
        const Index d = components.front().dim();
        for (const auto& c : components)
            if (c.dim() != d) throw std::invalid_argument("GaussianMixture: mixed dimensions");
    }

    Index dim() const { return components.front().dim(); }
};

// --- seeded samplers ------------------------------------------------------
// Identical (dist, n, seed) yields bit-identical output; see rng.hpp.

inline Sample sample(const DiscreteDistribution& dist, Index n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
    std::vector<double> cdf(dist.size());
    double acc = 0;
    for (Index i = 0; i < dist.size(); ++i) {
        acc += dist.pmf(i);
        cdf[static_cast<std::size_t>(i)] = acc;
    }
    cdf.back() = 1.0;
    Rng rng = Rng::derive(seed, 0x5a6d70ull);
    Eigen::MatrixXd out(n, dist.dim());
    for (Index i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        const Index k = std::min<Index>(it - cdf.begin(), dist.size() - 1);
        out.row(i) = dist.support.row(k);
    }
    return Sample(std::move(out));
}

inline Sample sample(const GaussianSpec& dist, Index n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
    const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(dist.cov).matrixL();
    Rng rng = Rng::derive(seed, 0x676175ull);
    const Index d = dist.dim();
    Eigen::MatrixXd out(n, d);
    Eigen::VectorXd z(d);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < d; ++j) z(j) = rng.normal();
        out.row(i) = (dist.mean + L * z).transpose();
    }
    return Sample(std::move(out));
}

inline Sample sample(const GaussianMixture& dist, Index n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
    std::vector<double> cdf(dist.weights.size());
    double acc = 0;
    for (std::size_t i = 0; i < dist.weights.size(); ++i) {
        acc += dist.weights[i];
        cdf[i] = acc;
    }
    cdf.back() = 1.0;
    std::vector<Eigen::MatrixXd> chol;
    chol.reserve(dist.components.size());
    for (const auto& c : dist.components)
        chol.emplace_back(Eigen::LLT<Eigen::MatrixXd>(c.cov).matrixL());
    Rng rng = Rng::derive(seed, 0x6d6978ull);
    const Index d = dist.dim();
    Eigen::MatrixXd out(n, d);
    Eigen::VectorXd z(d);
    for (Index i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        const std::size_t k = std::min<std::size_t>(
            std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin(), cdf.size() - 1);
        for (Index j = 0; j < d; ++j) z(j) = rng.normal();
        out.row(i) = (dist.components[k].mean + chol[k] * z).transpose();
    }
    return Sample(std::move(out));
}

// --- support alignment and KL divergence ----------------------------------

struct AlignedPair {
    Eigen::MatrixXd support;  // union of both supports
    Eigen::VectorXd p;
    Eigen::VectorXd q;
};

// Union of supports with zero fill, so kld and dstar are total functions.
// Support points are compared coordinate-exact; the finite alphabets this
// library builds come from shared embeddings, not from noisy data.
inline AlignedPair align_supports(const DiscreteDistribution& P, const DiscreteDistribution& Q) {
    if (P.dim() != Q.dim())
        throw std::invalid_argument("align_supports: dimension mismatch");
    std::vector<Eigen::RowVectorXd> pts;
    std::vector<double> p, q;
    auto find = [&](const Eigen::RowVectorXd& x) -> std::ptrdiff_t {
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (pts[i] == x) return static_cast<std::ptrdiff_t>(i);
        return -1;
    };
    for (Index i = 0; i < P.size(); ++i) {
        pts.emplace_back(P.support.row(i));
        p.push_back(P.pmf(i));
        q.push_back(0.0);
    }
    for (Index i = 0; i < Q.size(); ++i) {
        const Eigen::RowVectorXd row = Q.support.row(i);
        const auto at = find(row);
        if (at >= 0) {
            q[static_cast<std::size_t>(at)] = Q.pmf(i);
        } else {
            pts.emplace_back(row);
            p.push_back(0.0);
            q.push_back(Q.pmf(i));
        }
    }
    AlignedPair out;
    out.support.resize(static_cast<Index>(pts.size()), P.dim());
    out.p.resize(static_cast<Index>(pts.size()));
    out.q.resize(static_cast<Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        out.support.row(static_cast<Index>(i)) = pts[i];
        out.p(static_cast<Index>(i)) = p[i];
        out.q(static_cast<Index>(i)) = q[i];
    }
    return out;
}

// KL divergence in nats over aligned mass vectors.
// Conventions: 0 log(0/0) = 0, a log(a/0) = +inf for a > 0.
inline double kld_aligned(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    CompensatedSum s;
    for (Index i = 0; i < p.size(); ++i) {
        if (p(i) == 0.0) continue;
        if (q(i) == 0.0) return kInf;
        s.add(p(i) * std::log(p(i) / q(i)));
    }
    return std::max(0.0, s.value());
}

inline double kld(const DiscreteDistribution& P, const DiscreteDistribution& Q) {
    const AlignedPair a = align_supports(P, Q);
    return kld_aligned(a.p, a.q);
}

// Closed form for Gaussians; used by the degenerate-regime exponent.
inline double kld(const GaussianSpec& P, const GaussianSpec& Q) {
    if (P.dim() != Q.dim()) throw std::invalid_argument("kld: dimension mismatch");
    const Index d = P.dim();
    const Eigen::LLT<Eigen::MatrixXd> lltQ(Q.cov);
    const Eigen::LLT<Eigen::MatrixXd> lltP(P.cov);
    const Eigen::MatrixXd qinv_p = lltQ.solve(P.cov);
    const Eigen::VectorXd dm = Q.mean - P.mean;
    const double maha = dm.dot(lltQ.solve(dm));
    double logdet_ratio = 0;  // log |Q| - log |P|
    for (Index i = 0; i < d; ++i)
        logdet_ratio += 2.0 * (std::log(lltQ.matrixL()(i, i)) - std::log(lltP.matrixL()(i, i)));
    return 0.5 * (qinv_p.trace() + maha - static_cast<double>(d) + logdet_ratio);
}

// Empirical measure of a sample as a DiscreteDistribution (duplicate rows
// collapse into one support point with proportional mass).
inline DiscreteDistribution empirical_distribution(const Sample& xs) {
    std::vector<Eigen::RowVectorXd> pts;
    std::vector<Index> counts;
    for (Index i = 0; i < xs.n(); ++i) {
        const Eigen::RowVectorXd row = xs.data.row(i);
        bool found = false;
        for (std::size_t k = 0; k < pts.size(); ++k) {
            if (pts[k] == row) {
                ++counts[k];
                found = true;
                break;
            }
        }
        if (!found) {
            pts.emplace_back(row);
            counts.push_back(1);
        }
    }
    Eigen::MatrixXd sup(static_cast<Index>(pts.size()), xs.dim());
    Eigen::VectorXd pmf(static_cast<Index>(pts.size()));
    for (std::size_t k = 0; k < pts.size(); ++k) {
        sup.row(static_cast<Index>(k)) = pts[k];
        pmf(static_cast<Index>(k)) =
            static_cast<double>(counts[k]) / static_cast<double>(xs.n());
    }
    return DiscreteDistribution(std::move(sup), std::move(pmf));
}

}  // namespace mmdtest

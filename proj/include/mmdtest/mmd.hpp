#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "mmdtest/accumulate.hpp"
#include "mmdtest/distributions.hpp"
#include "mmdtest/kernels.hpp"

namespace mmdtest {

enum class StatisticKind { biased, unbiased };

namespace detail {

// Fixed evaluation order for the cross block, regardless of which sample the
// caller puts first: the estimators promise exact symmetry under swap, and
// compensated sums are not reassociation-proof on their own.
inline bool matrix_precedes(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows()) return a.rows() < b.rows();
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                        b.data() + b.size());
}

inline double canonical_cross_sum(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                  const KernelSpec& k) {
    return matrix_precedes(Y, X) ? kernel_cross_sum(Y, X, k) : kernel_cross_sum(X, Y, k);
}

}  // namespace detail

struct MmdValue {
    double squared = 0.0;
    StatisticKind kind = StatisticKind::biased;
    Index n = 0;
    Index m = 0;
    KernelSpec kernel;
};

// V-statistic: (1/n^2) sum k(x,x') + (1/m^2) sum k(y,y') - (2/nm) sum k(x,y).
// Mathematically >= 0; negatives are floating-point noise and are clamped.
inline MmdValue mmd2_biased(const Sample& X, const Sample& Y, const KernelSpec& k) {
    if (X.dim() != Y.dim()) throw std::invalid_argument("mmd2_biased: dimension mismatch");
    const double n = static_cast<double>(X.n());
    const double m = static_cast<double>(Y.n());
    // diagonal of a Gaussian gram is exactly 1 per point
    const double sxx = 2.0 * detail::kernel_offdiag_sum(X.data, k) + n;
    const double syy = 2.0 * detail::kernel_offdiag_sum(Y.data, k) + m;
    const double sxy = detail::canonical_cross_sum(X.data, Y.data, k);
    double v = sxx / (n * n) + syy / (m * m) - 2.0 * sxy / (n * m);
    if (v < 0) v = 0.0;
    return {v, StatisticKind::biased, X.n(), Y.n(), k};
}

inline double mmd_biased(const Sample& X, const Sample& Y, const KernelSpec& k) {
    return std::sqrt(mmd2_biased(X, Y, k).squared);
}

// U-statistic with diagonal terms removed; may be negative, reported raw.
inline MmdValue mmd2_unbiased(const Sample& X, const Sample& Y, const KernelSpec& k) {
    if (X.dim() != Y.dim()) throw std::invalid_argument("mmd2_unbiased: dimension mismatch");
    if (X.n() < 2 || Y.n() < 2)
        throw std::invalid_argument("mmd2_unbiased: need n, m >= 2");
    const double n = static_cast<double>(X.n());
    const double m = static_cast<double>(Y.n());
    const double sxx = 2.0 * detail::kernel_offdiag_sum(X.data, k);
    const double syy = 2.0 * detail::kernel_offdiag_sum(Y.data, k);
    const double sxy = detail::canonical_cross_sum(X.data, Y.data, k);
    const double v = sxx / (n * (n - 1)) + syy / (m * (m - 1)) - 2.0 * sxy / (n * m);
    return {v, StatisticKind::unbiased, X.n(), Y.n(), k};
}

// Exact population MMD for finite alphabets:
// d_k(P,Q) = sqrt( sum_{a,b} (P-Q)(a) (P-Q)(b) k(a,b) ).
inline double mmd_population_discrete(const DiscreteDistribution& P,
                                      const DiscreteDistribution& Q, const KernelSpec& k) {
    const AlignedPair a = align_supports(P, Q);
    const Eigen::VectorXd v = a.p - a.q;
    CompensatedSum s;
    for (Index i = 0; i < v.size(); ++i) {
        if (v(i) == 0.0) continue;
        for (Index j = 0; j < v.size(); ++j) {
            if (v(j) == 0.0) continue;
            s.add(v(i) * v(j) * k(a.support.row(i), a.support.row(j)));
        }
    }
    double val = s.value();
    if (val < 0) val = 0.0;
    return std::sqrt(val);
}

// Precomputed Gram form of d_k on a fixed aligned support; the type-pair
// loops in the exact error curves call this ~1e8 times, so the quadratic
// form is evaluated with plain loops and no temporaries.
struct DiscreteMmd {
    Eigen::MatrixXd gram_;

    DiscreteMmd(const Eigen::MatrixXd& support, const KernelSpec& k) {
        const Index t = support.rows();
        gram_.resize(t, t);
        for (Index i = 0; i < t; ++i)
            for (Index j = 0; j < t; ++j)
                gram_(i, j) = k(support.row(i), support.row(j));
    }

    double squared(const Eigen::VectorXd& p, const Eigen::VectorXd& q) const {
        const Index t = gram_.rows();
        double acc = 0.0;
        for (Index i = 0; i < t; ++i) {
            const double vi = p(i) - q(i);
            if (vi == 0.0) continue;
            double row = 0.0;
            for (Index j = 0; j < t; ++j) row += (p(j) - q(j)) * gram_(j, i);
            acc += vi * row;
        }
        return acc > 0 ? acc : 0.0;
    }

    double operator()(const Eigen::VectorXd& p, const Eigen::VectorXd& q) const {
        return std::sqrt(squared(p, q));
    }
};

// sup over a finite kernel family of d_k(P_hat, Q_hat)
inline double mmd_sup_family(const Sample& X, const Sample& Y,
                             std::span<const KernelSpec> kernels) {
    if (kernels.empty()) throw std::invalid_argument("mmd_sup_family: empty kernel family");
    double best = 0.0;
    for (const auto& k : kernels) best = std::max(best, mmd_biased(X, Y, k));
    return best;
}

// --- pooled-gram evaluation for permutation resampling ----------------------
//
// The pooled Gram matrix is computed once; each permutation only re-indexes
// it. For a subset A of size n (the X block), with row sums r_i and total T:
//   S_xA = sum_{i in A} r_i,   S_xy = S_xA - S_xx,   S_yy = T - 2 S_xA + S_xx,
// so only S_xx needs a pass over pairs within A.
class PooledGram {
public:
    PooledGram(const Sample& X, const Sample& Y, const KernelSpec& k)
        : n_(X.n()), m_(Y.n()), kernel_(k) {
        if (X.dim() != Y.dim()) throw std::invalid_argument("PooledGram: dimension mismatch");
        const Index N = n_ + m_;
        if (N > kMaxPooled)
            throw std::invalid_argument("PooledGram: pooled size too large for stored gram");
        Eigen::MatrixXd pooled(N, X.dim());
        pooled.topRows(n_) = X.data;
        pooled.bottomRows(m_) = Y.data;
        gram_ = gram(Sample(std::move(pooled)), k);
        row_sums_.resize(static_cast<std::size_t>(N));
        CompensatedSum tot;
        for (Index i = 0; i < N; ++i) {
            CompensatedSum rs;
            for (Index j = 0; j < N; ++j) rs.add(gram_(i, j));
            row_sums_[static_cast<std::size_t>(i)] = rs.value();
            tot.add(row_sums_[static_cast<std::size_t>(i)]);
        }
        total_ = tot.value();
    }

    Index n() const { return n_; }
    Index m() const { return m_; }
    Index pooled_size() const { return n_ + m_; }
    const KernelSpec& kernel() const { return kernel_; }

    // statistic for the original (unpermuted) labeling
    double observed(StatisticKind kind) const {
        std::vector<Index> id(static_cast<std::size_t>(n_));
        for (Index i = 0; i < n_; ++i) id[static_cast<std::size_t>(i)] = i;
        return statistic(id, kind);
    }

    // statistic when the X block is the given index subset of the pool;
    // biased -> d_k (square root), unbiased -> squared U-statistic
    double statistic(std::span<const Index> x_idx, StatisticKind kind) const {
        const double n = static_cast<double>(n_);
        const double m = static_cast<double>(m_);
        double sxx = 0.0, sxa = 0.0, diag = 0.0;
        for (std::size_t a = 0; a < x_idx.size(); ++a) {
            const Index i = x_idx[a];
            const double* col = gram_.data() + static_cast<std::ptrdiff_t>(i) * gram_.rows();
            double acc = 0.0;
            for (std::size_t b = 0; b < a; ++b) acc += col[x_idx[b]];
            sxx += acc;
            sxa += row_sums_[static_cast<std::size_t>(i)];
            diag += gram_(i, i);
        }
        sxx = 2.0 * sxx + diag;
        const double sxy = sxa - sxx;
        const double syy = total_ - 2.0 * sxa + sxx;
        if (kind == StatisticKind::biased) {
            double v = sxx / (n * n) + syy / (m * m) - 2.0 * sxy / (n * m);
            return v > 0 ? std::sqrt(v) : 0.0;
        }
        const double dyy = trace() - diag;  // diagonal of the Y block
        return (sxx - diag) / (n * (n - 1)) + (syy - dyy) / (m * (m - 1)) -
               2.0 * sxy / (n * m);
    }

    static constexpr Index kMaxPooled = 4096;  // 134 MB gram; resampling is a desk-scale tool

private:
    double trace() const { return gram_.diagonal().sum(); }

    Index n_, m_;
    KernelSpec kernel_;
    Eigen::MatrixXd gram_;
    std::vector<double> row_sums_;
    double total_ = 0.0;
};

}  // namespace mmdtest

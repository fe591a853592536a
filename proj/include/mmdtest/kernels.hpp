#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mmdtest/accumulate.hpp"
#include "mmdtest/distributions.hpp"

namespace mmdtest {

// Gaussian kernel k(x,y) = exp(-||x-y||^2 / w), so 0 <= k <= K = 1.
// K is carried on the spec because every threshold formula consumes it.
struct KernelSpec {
    double bandwidth = 1.0;
    double bound = 1.0;

    KernelSpec() = default;
    explicit KernelSpec(double w) : bandwidth(w) {
        if (!(w > 0)) throw std::invalid_argument("KernelSpec: bandwidth must be positive");
    }

    double operator()(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& y) const {
        return std::exp(-(x - y).squaredNorm() / bandwidth);
    }
};

// Median of squared Euclidean distances over all unordered distinct pairs of
// the pooled sample; the value is used directly as w. Even pair count takes
// the lower-middle order statistic so runs are reproducible.
inline double median_heuristic(const Sample& pooled) {
    const Index n = pooled.n();
    if (n < 2) throw std::invalid_argument("median_heuristic: need at least two points");
    std::vector<double> d2;
    d2.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
            d2.push_back((pooled.data.row(i) - pooled.data.row(j)).squaredNorm());
    const std::size_t mid = (d2.size() - 1) / 2;
    std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid), d2.end());
    const double med = d2[mid];
    if (!(med > 0))
        throw std::invalid_argument("median_heuristic: degenerate pooled sample (median distance 0)");
    return med;
}

inline Eigen::MatrixXd gram(const Sample& xs, const KernelSpec& k) {
    const Eigen::VectorXd sq = xs.data.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = (-2.0 * xs.data * xs.data.transpose()).colwise() + sq;
    d2.rowwise() += sq.transpose();
    return (d2.cwiseMax(0.0) * (-1.0 / k.bandwidth)).array().exp();
}

namespace detail {

inline constexpr Index kKernelTile = 128;

// sum_{i,j} k(x_i, y_j), tiled over rows for cache locality. Each row of X
// owns a compensated accumulator and consumes j in increasing order, and rows
// are merged in increasing i, so the result is bit-identical for every tile
// size (tested).
inline double kernel_cross_sum(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                               const KernelSpec& k, Index tile = kKernelTile) {
    const Index n = X.rows(), m = Y.rows();
    const double inv_w = 1.0 / k.bandwidth;
    std::vector<CompensatedSum> row_acc(static_cast<std::size_t>(n));
    for (Index j0 = 0; j0 < m; j0 += tile) {
        const Index j1 = std::min(j0 + tile, m);
        for (Index i0 = 0; i0 < n; i0 += tile) {
            const Index i1 = std::min(i0 + tile, n);
            for (Index i = i0; i < i1; ++i) {
                auto& acc = row_acc[static_cast<std::size_t>(i)];
                for (Index j = j0; j < j1; ++j) {
                    const double d2 = (X.row(i) - Y.row(j)).squaredNorm();
                    acc.add(std::exp(-d2 * inv_w));
                }
            }
        }
    }
    CompensatedSum total;
    for (auto& acc : row_acc) total.add(acc.value());
    return total.value();
}

// sum over unordered pairs i < j within one sample, same determinism scheme.
inline double kernel_offdiag_sum(const Eigen::MatrixXd& X, const KernelSpec& k,
                                 Index tile = kKernelTile) {
    const Index n = X.rows();
    const double inv_w = 1.0 / k.bandwidth;
    std::vector<CompensatedSum> row_acc(static_cast<std::size_t>(n));
    for (Index j0 = 0; j0 < n; j0 += tile) {
        const Index j1 = std::min(j0 + tile, n);
        for (Index i0 = 0; i0 < j1; i0 += tile) {
            const Index i1 = std::min(i0 + tile, j1);
            for (Index i = i0; i < i1; ++i) {
                auto& acc = row_acc[static_cast<std::size_t>(i)];
                for (Index j = std::max(j0, i + 1); j < j1; ++j) {
                    const double d2 = (X.row(i) - X.row(j)).squaredNorm();
                    acc.add(std::exp(-d2 * inv_w));
                }
            }
        }
    }
    CompensatedSum total;
    for (auto& acc : row_acc) total.add(acc.value());
    return total.value();  // strictly upper triangle
}

}  // namespace detail

}  // namespace mmdtest

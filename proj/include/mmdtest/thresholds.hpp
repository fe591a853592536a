#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmdtest/mmd.hpp"
#include "mmdtest/rng.hpp"

namespace mmdtest {

enum class ThresholdPolicy { ldb, unbiased_ldb, permutation, combined, one_sample };

struct ThresholdSpec {
    ThresholdPolicy policy = ThresholdPolicy::ldb;
    double alpha = 0.05;
    int B = 1000;             // permutation count, when applicable
    std::uint64_t seed = 0;   // permutation stream, when applicable

    void validate() const {
        if (!(alpha > 0 && alpha < 1))
            throw std::invalid_argument("ThresholdSpec: alpha must be in (0,1)");
        if (B < 1) throw std::invalid_argument("ThresholdSpec: B must be >= 1");
    }
};

namespace detail {
inline void check_alpha(double alpha) {
    if (!(alpha > 0 && alpha < 1))
        throw std::invalid_argument("threshold: alpha must be in (0,1)");
}
inline void check_bound(double K) {
    if (!(K > 0)) throw std::invalid_argument("threshold: kernel bound K must be positive");
}
}  // namespace detail

// Distribution-free threshold for d_k(P_hat, Q_hat):
//   gamma_{n,m} = (sqrt(K/m) + sqrt(K/n)) (2 + sqrt(2 log(2/alpha)))
inline double ldb_threshold(Index n, Index m, double K, double alpha) {
    if (n < 1 || m < 1) throw std::invalid_argument("ldb_threshold: need n, m >= 1");
    detail::check_bound(K);
    detail::check_alpha(alpha);
    return (std::sqrt(K / static_cast<double>(m)) + std::sqrt(K / static_cast<double>(n))) *
           (2.0 + std::sqrt(2.0 * std::log(2.0 / alpha)));
}

// Threshold for the squared unbiased statistic, valid for n = m:
//   (4K/sqrt(n)) sqrt(log(1/alpha))
inline double unbiased_ldb_threshold(Index n, double K, double alpha) {
    if (n < 2) throw std::invalid_argument("unbiased_ldb_threshold: need n >= 2");
    detail::check_bound(K);
    detail::check_alpha(alpha);
    return 4.0 * K / std::sqrt(static_cast<double>(n)) * std::sqrt(std::log(1.0 / alpha));
}

// One-sample concentration threshold for d_k(P, P_hat_n):
//   sqrt(2K/n) (1 + sqrt(log(1/alpha)))
inline double one_sample_threshold(Index n, double K, double alpha) {
    if (n < 1) throw std::invalid_argument("one_sample_threshold: need n >= 1");
    detail::check_bound(K);
    detail::check_alpha(alpha);
    return std::sqrt(2.0 * K / static_cast<double>(n)) *
           (1.0 + std::sqrt(std::log(1.0 / alpha)));
}

namespace detail {

// k-th order statistic rule shared by all permutation thresholds:
// threshold = ceil((1-alpha)(B+1))-th smallest of {B permuted values, observed}.
inline double permutation_quantile(std::vector<double>& values, double observed, double alpha) {
    values.push_back(observed);
    const std::size_t k =
        static_cast<std::size_t>(std::ceil((1.0 - alpha) * static_cast<double>(values.size())));
    auto nth = values.begin() + static_cast<std::ptrdiff_t>(k - 1);
    std::nth_element(values.begin(), nth, values.end());
    return *nth;
}

// B exchangeability resamples of the pooled gram: split the pool into blocks
// of sizes n and m without replacement, recompute the statistic. Replicate b
// derives its stream from (seed, b), so values do not depend on evaluation
// order.
inline std::vector<double> permutation_values(const PooledGram& pg, int B, std::uint64_t seed,
                                              StatisticKind kind) {
    const Index N = pg.pooled_size();
    const Index n = pg.n();
    std::vector<double> vals(static_cast<std::size_t>(B));
    std::vector<Index> idx(static_cast<std::size_t>(N));
    for (int b = 0; b < B; ++b) {
        Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(b) + 1);
        for (Index i = 0; i < N; ++i) idx[static_cast<std::size_t>(i)] = i;
        // partial Fisher-Yates: first n entries become the X block
        for (Index i = 0; i < n; ++i) {
            const Index j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(N - i)));
            std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        }
        vals[static_cast<std::size_t>(b)] =
            pg.statistic(std::span<const Index>(idx.data(), static_cast<std::size_t>(n)), kind);
    }
    return vals;
}

}  // namespace detail

inline double permutation_threshold(const PooledGram& pg, double alpha, int B,
                                    std::uint64_t seed, StatisticKind kind) {
    detail::check_alpha(alpha);
    if (B < 1) throw std::invalid_argument("permutation_threshold: need B >= 1");
    std::vector<double> vals = detail::permutation_values(pg, B, seed, kind);
    return detail::permutation_quantile(vals, pg.observed(kind), alpha);
}

inline double permutation_threshold(const Sample& X, const Sample& Y, const KernelSpec& k,
                                    double alpha, int B, std::uint64_t seed,
                                    StatisticKind kind = StatisticKind::biased) {
    return permutation_threshold(PooledGram(X, Y, k), alpha, B, seed, kind);
}

// Minimum of the resampled threshold and the distribution-free one; keeps the
// optimal exponent while the level holds in the large-sample limit.
inline double combined_threshold(const Sample& X, const Sample& Y, const KernelSpec& k,
                                 double alpha, int B, std::uint64_t seed,
                                 StatisticKind kind = StatisticKind::biased) {
    const double perm = permutation_threshold(X, Y, k, alpha, B, seed, kind);
    const double free_form =
        kind == StatisticKind::biased
            ? ldb_threshold(X.n(), Y.n(), k.bound, alpha)
            : (X.n() == Y.n()
                   ? unbiased_ldb_threshold(X.n(), k.bound, alpha)
                   : throw std::invalid_argument("combined_threshold: unbiased form needs n = m"));
    return std::min(perm, free_form);
}

inline std::string to_string(ThresholdPolicy p) {
    switch (p) {
        case ThresholdPolicy::ldb: return "ldb";
        case ThresholdPolicy::unbiased_ldb: return "unbiased_ldb";
        case ThresholdPolicy::permutation: return "permutation";
        case ThresholdPolicy::combined: return "combined";
        case ThresholdPolicy::one_sample: return "one_sample";
    }
    return "?";
}

inline ThresholdPolicy threshold_policy_from_string(const std::string& s) {
    if (s == "ldb") return ThresholdPolicy::ldb;
    if (s == "unbiased_ldb" || s == "unbiased") return ThresholdPolicy::unbiased_ldb;
    if (s == "permutation") return ThresholdPolicy::permutation;
    if (s == "combined") return ThresholdPolicy::combined;
    if (s == "one_sample") return ThresholdPolicy::one_sample;
    throw std::invalid_argument("unknown threshold policy: " + s);
}

inline std::string to_string(StatisticKind k) {
    return k == StatisticKind::biased ? "biased" : "unbiased";
}

inline StatisticKind statistic_kind_from_string(const std::string& s) {
    if (s == "biased") return StatisticKind::biased;
    if (s == "unbiased") return StatisticKind::unbiased;
    throw std::invalid_argument("unknown statistic kind: " + s);
}

}  // namespace mmdtest

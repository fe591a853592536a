#pragma once

#include <span>
#include <stdexcept>

#include "mmdtest/thresholds.hpp"

namespace mmdtest {

// Acceptance rule: accept H0 iff statistic <= threshold. The biased route
// compares d_k against gamma_{n,m}; the unbiased route compares the squared
// U-statistic against its own threshold, each formula's native scale.
struct TestOutcome {
    bool reject = false;
    double statistic = 0.0;
    double threshold = 0.0;
    StatisticKind statistic_kind = StatisticKind::biased;
    ThresholdPolicy threshold_policy = ThresholdPolicy::ldb;
    Index n = 0;
    Index m = 0;

    bool accept() const { return !reject; }
};

namespace detail {

inline TestOutcome make_outcome(double stat, double thr, StatisticKind kind,
                                ThresholdPolicy policy, Index n, Index m) {
    TestOutcome out;
    out.reject = stat > thr;
    out.statistic = stat;
    out.threshold = thr;
    out.statistic_kind = kind;
    out.threshold_policy = policy;
    out.n = n;
    out.m = m;
    return out;
}

inline void check_pairing(ThresholdPolicy policy, StatisticKind kind, Index n, Index m) {
    switch (policy) {
        case ThresholdPolicy::ldb:
            if (kind != StatisticKind::biased)
                throw std::invalid_argument("decide: ldb threshold pairs with the biased statistic");
            break;
        case ThresholdPolicy::unbiased_ldb:
            if (kind != StatisticKind::unbiased)
                throw std::invalid_argument(
                    "decide: unbiased_ldb threshold pairs with the unbiased statistic");
            if (n != m)
                throw std::invalid_argument("decide: unbiased_ldb requires n = m");
            break;
        case ThresholdPolicy::combined:
            if (kind == StatisticKind::unbiased && n != m)
                throw std::invalid_argument("decide: combined unbiased form requires n = m");
            break;
        case ThresholdPolicy::permutation:
            break;
        case ThresholdPolicy::one_sample:
            throw std::invalid_argument("decide: one_sample is not a two-sample policy");
    }
    if (kind == StatisticKind::unbiased && (n < 2 || m < 2))
        throw std::invalid_argument("decide: unbiased statistic needs n, m >= 2");
}

}  // namespace detail

inline TestOutcome decide(const Sample& X, const Sample& Y, const KernelSpec& kernel,
                          const ThresholdSpec& spec, StatisticKind kind) {
    spec.validate();
    detail::check_pairing(spec.policy, kind, X.n(), Y.n());
    const double stat = kind == StatisticKind::biased
                            ? mmd_biased(X, Y, kernel)
                            : mmd2_unbiased(X, Y, kernel).squared;
    double thr = 0.0;
    switch (spec.policy) {
        case ThresholdPolicy::ldb:
            thr = ldb_threshold(X.n(), Y.n(), kernel.bound, spec.alpha);
            break;
        case ThresholdPolicy::unbiased_ldb:
            thr = unbiased_ldb_threshold(X.n(), kernel.bound, spec.alpha);
            break;
        case ThresholdPolicy::permutation:
            thr = permutation_threshold(X, Y, kernel, spec.alpha, spec.B, spec.seed, kind);
            break;
        case ThresholdPolicy::combined:
            thr = combined_threshold(X, Y, kernel, spec.alpha, spec.B, spec.seed, kind);
            break;
        case ThresholdPolicy::one_sample:
            break;  // rejected above
    }
    return detail::make_outcome(stat, thr, kind, spec.policy, X.n(), Y.n());
}

// Kernel-family variant: statistic sup_k d_k, threshold from the shared bound
// K (ldb) or from resampling the sup statistic itself.
inline TestOutcome decide(const Sample& X, const Sample& Y,
                          std::span<const KernelSpec> family, const ThresholdSpec& spec) {
    spec.validate();
    if (family.empty()) throw std::invalid_argument("decide: empty kernel family");
    const double bound = family.front().bound;
    for (const auto& k : family)
        if (k.bound != bound)
            throw std::invalid_argument("decide: kernel family must share one bound K");

    const double stat = mmd_sup_family(X, Y, family);
    double thr = 0.0;
    switch (spec.policy) {
        case ThresholdPolicy::ldb:
            thr = ldb_threshold(X.n(), Y.n(), bound, spec.alpha);
            break;
        case ThresholdPolicy::permutation:
        case ThresholdPolicy::combined: {
            std::vector<PooledGram> grams;
            grams.reserve(family.size());
            for (const auto& k : family) grams.emplace_back(X, Y, k);
            const Index N = X.n() + Y.n();
            std::vector<double> vals(static_cast<std::size_t>(spec.B));
            std::vector<Index> idx(static_cast<std::size_t>(N));
            for (int b = 0; b < spec.B; ++b) {
                Rng rng = Rng::derive(spec.seed, static_cast<std::uint64_t>(b) + 1);
                for (Index i = 0; i < N; ++i) idx[static_cast<std::size_t>(i)] = i;
                for (Index i = 0; i < X.n(); ++i) {
                    const Index j =
                        i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(N - i)));
                    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
                }
                double best = 0.0;
                for (const auto& pg : grams)
                    best = std::max(best, pg.statistic(std::span<const Index>(
                                              idx.data(), static_cast<std::size_t>(X.n())),
                                          StatisticKind::biased));
                vals[static_cast<std::size_t>(b)] = best;
            }
            thr = detail::permutation_quantile(vals, stat, spec.alpha);
            if (spec.policy == ThresholdPolicy::combined)
                thr = std::min(thr, ldb_threshold(X.n(), Y.n(), bound, spec.alpha));
            break;
        }
        default:
            throw std::invalid_argument("decide: family statistic supports ldb/permutation/combined");
    }
    return detail::make_outcome(stat, thr, StatisticKind::biased, spec.policy, X.n(), Y.n());
}

}  // namespace mmdtest

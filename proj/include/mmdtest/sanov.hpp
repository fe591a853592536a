#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "mmdtest/accumulate.hpp"
#include "mmdtest/distributions.hpp"
#include "mmdtest/exponents.hpp"
#include "mmdtest/mmd.hpp"
#include "mmdtest/thresholds.hpp"

namespace mmdtest {

// Empirical type: integer counts over a t-symbol alphabet summing to n.
struct TypeVector {
    std::vector<int> counts;
    int n = 0;

    int t() const { return static_cast<int>(counts.size()); }

    Eigen::VectorXd pmf() const {
        Eigen::VectorXd p(counts.size());
        for (std::size_t i = 0; i < counts.size(); ++i)
            p(static_cast<Index>(i)) = static_cast<double>(counts[i]) / n;
        return p;
    }
};

// number of types: C(n+t-1, t-1), computed safely in floating point
inline double type_count(int n, int t) {
    double c = 1.0;
    for (int i = 1; i <= t - 1; ++i)
        c *= static_cast<double>(n + i) / static_cast<double>(i);
    return std::round(c);
}

inline constexpr double kTypeEnumerationCap = 1e7;

// Exhaustive, duplicate-free enumeration of all types in lexicographic order
// of counts. Errors instead of silently truncating when the count exceeds
// the cap.
inline std::vector<TypeVector> enumerate_types(int n, int t, double cap = kTypeEnumerationCap) {
    if (n < 1) throw std::invalid_argument("enumerate_types: need n >= 1");
    if (t < 2 || t > 5) throw std::invalid_argument("enumerate_types: need 2 <= t <= 5");
    const double total = type_count(n, t);
    if (total > cap) throw std::invalid_argument("enumerate_types: enumeration cap exceeded");

    std::vector<TypeVector> out;
    out.reserve(static_cast<std::size_t>(total));
    std::vector<int> counts(static_cast<std::size_t>(t), 0);
    std::function<void(int, int)> rec = [&](int pos, int remaining) {
        if (pos == t - 1) {
            counts[static_cast<std::size_t>(pos)] = remaining;
            out.push_back({counts, n});
            return;
        }
        for (int k = 0; k <= remaining; ++k) {
            counts[static_cast<std::size_t>(pos)] = k;
            rec(pos + 1, remaining - k);
        }
    };
    rec(0, n);
    return out;
}

// log of the exact multinomial probability P(empirical type = tv) under P.
// Log-gamma keeps n ~ 200 coefficients inside double range; types placing
// mass outside P's support come back as -inf.
inline double log_type_probability(const Eigen::VectorXd& pmf, const TypeVector& tv) {
    if (pmf.size() != tv.t())
        throw std::invalid_argument("type_probability: alphabet size mismatch");
    double l = std::lgamma(static_cast<double>(tv.n) + 1.0);
    for (int i = 0; i < tv.t(); ++i) {
        const int ni = tv.counts[static_cast<std::size_t>(i)];
        if (ni == 0) continue;
        if (pmf(i) == 0.0) return -kInf;
        l += ni * std::log(pmf(i)) - std::lgamma(static_cast<double>(ni) + 1.0);
    }
    return l;
}

inline double log_type_probability(const DiscreteDistribution& P, const TypeVector& tv) {
    return log_type_probability(P.pmf, tv);
}

inline double type_probability(const DiscreteDistribution& P, const TypeVector& tv) {
    return std::exp(log_type_probability(P.pmf, tv));
}

// --- exact two-sample region probabilities ----------------------------------

// P((P_hat_n, Q_hat_m) in region) as the exact double sum over type pairs.
// P and Q must live on the same alphabet (same support, aligned order).
// Returns log probability; -inf for an empty region. The linear-domain
// wrapper below is the everyday interface, but exact error curves at large n
// sit far below double range, hence the log form.
template <typename Region>
double exact_region_log_probability(const DiscreteDistribution& P, const DiscreteDistribution& Q,
                                    int n, int m, Region&& in_region,
                                    double cap = kTypeEnumerationCap) {
    if (P.dim() != Q.dim() || P.size() != Q.size() || P.support != Q.support)
        throw std::invalid_argument("exact_region_probability: alphabets must be aligned");
    const int t = static_cast<int>(P.size());
    if (type_count(n, t) * type_count(m, t) > cap * cap)
        throw std::invalid_argument("exact_region_probability: type-pair cap exceeded");
    const std::vector<TypeVector> rn = enumerate_types(n, t, cap);
    const std::vector<TypeVector> sm = enumerate_types(m, t, cap);

    std::vector<double> lp(rn.size()), lq(sm.size());
    for (std::size_t i = 0; i < rn.size(); ++i) lp[i] = log_type_probability(P, rn[i]);
    for (std::size_t j = 0; j < sm.size(); ++j) lq[j] = log_type_probability(Q, sm[j]);

    LogSumExp lse;
    for (std::size_t i = 0; i < rn.size(); ++i) {
        if (std::isinf(lp[i])) continue;
        for (std::size_t j = 0; j < sm.size(); ++j) {
            if (std::isinf(lq[j])) continue;
            if (in_region(rn[i], sm[j])) lse.add(lp[i] + lq[j]);
        }
    }
    return lse.value();
}

template <typename Region>
double exact_region_probability(const DiscreteDistribution& P, const DiscreteDistribution& Q,
                                int n, int m, Region&& in_region,
                                double cap = kTypeEnumerationCap) {
    return std::exp(
        exact_region_log_probability(P, Q, n, m, std::forward<Region>(in_region), cap));
}

// --- exact type-II error curve ----------------------------------------------

struct ErrorCurvePoint {
    int n = 0;
    int m = 0;
    double beta = 0.0;      // exp(log_beta); 0 if below double range
    double log_beta = 0.0;
    double rate = 0.0;      // -log_beta / (n + m)
    double dstar = 0.0;     // asymptotic reference, Theorem-2 exponent
};

// Exact type-II error of the rule d_k(P_hat, Q_hat) <= gamma(n, m) under
// (P, Q), per sample size. gamma defaults to the Eq.-style distribution-free
// threshold via the caller.
template <typename ThresholdRule>
std::vector<ErrorCurvePoint> exact_error_curve(const DiscreteDistribution& P,
                                               const DiscreteDistribution& Q,
                                               const KernelSpec& kernel,
                                               ThresholdRule&& gamma_of,
                                               const std::vector<std::pair<int, int>>& sizes,
                                               double cap = kTypeEnumerationCap) {
    if (P.support != Q.support)
        throw std::invalid_argument("exact_error_curve: alphabets must be aligned");
    const DiscreteMmd dk(P.support, kernel);
    std::vector<ErrorCurvePoint> out;
    out.reserve(sizes.size());
    for (auto [n, m] : sizes) {
        const double gamma = gamma_of(n, m);
        const double lb = exact_region_log_probability(
            P, Q, n, m,
            [&](const TypeVector& r, const TypeVector& s) {
                return dk(r.pmf(), s.pmf()) <= gamma;
            },
            cap);
        ErrorCurvePoint pt;
        pt.n = n;
        pt.m = m;
        pt.log_beta = lb;
        pt.beta = std::exp(lb);
        pt.rate = -lb / static_cast<double>(n + m);
        pt.dstar = dstar(P, Q, static_cast<double>(n) / (n + m)).value;
        out.push_back(pt);
    }
    return out;
}

// --- partitions and the partition form of the KLD ---------------------------

// Assignment of each alphabet symbol to one of num_cells cells; cells must be
// nonempty, disjointness/exhaustiveness hold by construction.
struct Partition {
    std::vector<int> cell_of;
    int num_cells = 0;

    Partition() = default;
    Partition(std::vector<int> assignment, int cells)
        : cell_of(std::move(assignment)), num_cells(cells) {
        if (num_cells < 1 || num_cells > static_cast<int>(cell_of.size()))
            throw std::invalid_argument("Partition: bad cell count");
        std::vector<bool> seen(static_cast<std::size_t>(num_cells), false);
        for (int c : cell_of) {
            if (c < 0 || c >= num_cells) throw std::invalid_argument("Partition: cell out of range");
            seen[static_cast<std::size_t>(c)] = true;
        }
        for (bool s : seen)
            if (!s) throw std::invalid_argument("Partition: empty cell");
    }

    static Partition finest(int t) {
        std::vector<int> a(static_cast<std::size_t>(t));
        for (int i = 0; i < t; ++i) a[static_cast<std::size_t>(i)] = i;
        return Partition(std::move(a), t);
    }

    static Partition single_cell(int t) {
        return Partition(std::vector<int>(static_cast<std::size_t>(t), 0), 1);
    }
};

// D(P^A || Q^A): KLD of the cell-aggregated distributions.
inline double kld_partition(const DiscreteDistribution& P, const DiscreteDistribution& Q,
                            const Partition& part) {
    if (P.support != Q.support)
        throw std::invalid_argument("kld_partition: alphabets must be aligned");
    if (static_cast<int>(P.size()) != static_cast<int>(part.cell_of.size()))
        throw std::invalid_argument("kld_partition: partition size mismatch");
    Eigen::VectorXd pa = Eigen::VectorXd::Zero(part.num_cells);
    Eigen::VectorXd qa = Eigen::VectorXd::Zero(part.num_cells);
    for (Index i = 0; i < P.size(); ++i) {
        pa(part.cell_of[static_cast<std::size_t>(i)]) += P.pmf(i);
        qa(part.cell_of[static_cast<std::size_t>(i)]) += Q.pmf(i);
    }
    return kld_aligned(pa, qa);
}

}  // namespace mmdtest

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmdtest/accumulate.hpp"
#include "mmdtest/distributions.hpp"

namespace mmdtest {

enum class Regime { balanced, degenerate };
enum class Normalization { per_total_samples, per_smaller_sample };

struct ExponentReport {
    double c = 0.5;
    Regime regime = Regime::balanced;
    double exponent = 0.0;
    Normalization normalization = Normalization::per_total_samples;
    std::optional<DiscreteDistribution> minimizer;  // finite-alphabet balanced case
};

struct DstarResult {
    double value = 0.0;
    std::optional<DiscreteDistribution> minimizer;
};

namespace detail {
inline void check_ratio(double c) {
    if (!(c > 0 && c < 1)) throw std::invalid_argument("dstar: c must be in (0,1)");
}
}  // namespace detail

// D* = inf_R c D(R||P) + (1-c) D(R||Q).
//
// For finite alphabets the infimum is attained by the geometric mixture
// R* proportional to P^c Q^(1-c), giving -log sum_x P(x)^c Q(x)^(1-c).
// That closed form is a derived consequence of the variational definition,
// so dstar_oracle below certifies it by independent descent before anything
// downstream trusts it. Evaluated by log-sum-exp; +inf on disjoint supports.
inline DstarResult dstar(const DiscreteDistribution& P, const DiscreteDistribution& Q, double c) {
    detail::check_ratio(c);
    const AlignedPair a = align_supports(P, Q);
    const Index t = a.p.size();
    std::vector<double> log_terms(static_cast<std::size_t>(t),
                                  -std::numeric_limits<double>::infinity());
    LogSumExp lse;
    bool any = false;
    for (Index i = 0; i < t; ++i) {
        if (a.p(i) > 0 && a.q(i) > 0) {
            const double l = c * std::log(a.p(i)) + (1.0 - c) * std::log(a.q(i));
            log_terms[static_cast<std::size_t>(i)] = l;
            lse.add(l);
            any = true;
        }
    }
    if (!any) return {kInf, std::nullopt};
    const double log_z = lse.value();

    Eigen::VectorXd r(t);
    for (Index i = 0; i < t; ++i)
        r(i) = std::exp(log_terms[static_cast<std::size_t>(i)] - log_z);
    r /= r.sum();
    return {-log_z, DiscreteDistribution(a.support, std::move(r))};
}

// Equal-covariance Gaussians: D* = c(1-c)/2 (mu_P - mu_Q)^T Sigma^-1 (mu_P - mu_Q).
// Unequal covariances are not supported in closed form here; discretize and
// use the finite-alphabet oracle instead.
inline double dstar(const GaussianSpec& P, const GaussianSpec& Q, double c) {
    detail::check_ratio(c);
    if (P.dim() != Q.dim()) throw std::invalid_argument("dstar: dimension mismatch");
    const double scale = std::max(1.0, P.cov.cwiseAbs().maxCoeff());
    if (((P.cov - Q.cov).array().abs() > 1e-12 * scale).any())
        throw std::invalid_argument(
            "dstar: covariances differ; no closed form here, use the finite-alphabet oracle");
    const Eigen::VectorXd dm = P.mean - Q.mean;
    return 0.5 * c * (1.0 - c) * dm.dot(Eigen::LLT<Eigen::MatrixXd>(P.cov).solve(dm));
}

// --- independent brute-force oracle ----------------------------------------

struct DstarOracleOptions {
    int max_iterations = 20000;
    double gradient_tolerance = 1e-8;  // KKT spread on active coordinates
    int grid_points = 64;              // coarse-grid init per barycentric axis, t <= 3
};

struct DstarOracleResult {
    double value = 0.0;
    bool certified = false;  // first-order optimality reached at tolerance
    int iterations = 0;
    double kkt_residual = 0.0;
};

namespace detail {

// Euclidean projection onto the probability simplex (sort-based).
inline Eigen::VectorXd project_simplex(Eigen::VectorXd v) {
    const Index t = v.size();
    std::vector<double> u(v.data(), v.data() + t);
    std::sort(u.begin(), u.end(), std::greater<>());
    double css = 0.0, tau = 0.0;
    int rho = 0;
    for (Index j = 0; j < t; ++j) {
        css += u[static_cast<std::size_t>(j)];
        const double cand = (1.0 - css) / static_cast<double>(j + 1);
        if (u[static_cast<std::size_t>(j)] + cand > 0) {
            rho = static_cast<int>(j + 1);
            tau = cand;
        }
    }
    (void)rho;
    for (Index i = 0; i < t; ++i) v(i) = std::max(v(i) + tau, 0.0);
    return v;
}

// objective F(R) = sum_i R_i (log R_i - g_i) with g = c log p + (1-c) log q
inline double oracle_objective(const Eigen::VectorXd& r, const Eigen::VectorXd& g) {
    CompensatedSum s;
    for (Index i = 0; i < r.size(); ++i) {
        if (r(i) <= 0) continue;
        s.add(r(i) * (std::log(r(i)) - g(i)));
    }
    return s.value();
}

}  // namespace detail

// Minimizes c D(R||P) + (1-c) D(R||Q) over the simplex by projected gradient
// descent with backtracking, coarse-grid initialized for tiny alphabets.
// Deliberately does not use the geometric-mixture identity: agreement with
// dstar() is the check, not an assumption.
inline DstarOracleResult dstar_oracle(const DiscreteDistribution& P,
                                      const DiscreteDistribution& Q, double c,
                                      const DstarOracleOptions& opt = {}) {
    detail::check_ratio(c);
    const AlignedPair a = align_supports(P, Q);
    if (a.p.size() > 6)
        throw std::invalid_argument("dstar_oracle: alphabet too large (t <= 6)");

    // optimal R lives on the common support: mass elsewhere costs +inf
    std::vector<Index> keep;
    for (Index i = 0; i < a.p.size(); ++i)
        if (a.p(i) > 0 && a.q(i) > 0) keep.push_back(i);
    if (keep.empty()) return {kInf, true, 0, 0.0};

    const Index s = static_cast<Index>(keep.size());
    Eigen::VectorXd g(s);
    for (Index i = 0; i < s; ++i)
        g(i) = c * std::log(a.p(keep[static_cast<std::size_t>(i)])) +
               (1.0 - c) * std::log(a.q(keep[static_cast<std::size_t>(i)]));

    if (s == 1) return {-g(0), true, 0, 0.0};

    Eigen::VectorXd r = Eigen::VectorXd::Constant(s, 1.0 / static_cast<double>(s));
    if (s <= 3 && opt.grid_points >= 2) {
        // coarse barycentric grid pick for the starting point
        double best = detail::oracle_objective(r, g);
        const int gp = opt.grid_points;
        for (int i = 0; i <= gp; ++i) {
            for (int j = 0; j <= gp - i; ++j) {
                Eigen::VectorXd cand(s);
                if (s == 2) {
                    if (j > 0) continue;
                    cand << i / double(gp), 1.0 - i / double(gp);
                } else {
                    cand << i / double(gp), j / double(gp), 1.0 - (i + j) / double(gp);
                }
                const double f = detail::oracle_objective(cand, g);
                if (f < best) {
                    best = f;
                    r = cand;
                }
            }
        }
    }

    const double floor_log = 1e-18;  // keeps log gradients finite at the boundary
    double f_cur = detail::oracle_objective(r, g);
    double step = 1.0;
    int it = 0;
    double kkt = kInf;
    for (; it < opt.max_iterations; ++it) {
        Eigen::VectorXd grad(s);
        for (Index i = 0; i < s; ++i)
            grad(i) = std::log(std::max(r(i), floor_log)) - g(i) + 1.0;

        // KKT residual: active gradients equal, inactive no smaller
        double lo = kInf, hi = -kInf;
        for (Index i = 0; i < s; ++i) {
            if (r(i) > 1e-12) {
                lo = std::min(lo, grad(i));
                hi = std::max(hi, grad(i));
            }
        }
        double viol = 0.0;
        for (Index i = 0; i < s; ++i)
            if (r(i) <= 1e-12) viol = std::max(viol, std::max(0.0, lo - grad(i)));
        kkt = (hi - lo) + viol;
        if (kkt <= opt.gradient_tolerance) break;

        bool moved = false;
        for (int bt = 0; bt < 60; ++bt) {
            const Eigen::VectorXd cand = detail::project_simplex(r - step * grad);
            const double f_cand = detail::oracle_objective(cand, g);
            if (f_cand < f_cur - 1e-16) {
                r = cand;
                f_cur = f_cand;
                step = std::min(step * 2.0, 1.0);
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;  // no descent direction at float resolution
    }

    DstarOracleResult out;
    out.value = f_cur;
    out.iterations = it;
    out.kkt_residual = kkt;
    out.certified = kkt <= std::max(opt.gradient_tolerance, 1e-6);
    return out;
}

// --- regime classification ---------------------------------------------------
//
// The balanced/degenerate distinction is asymptotic (n/(n+m) -> c in (0,1)
// versus n/m -> inf), so the caller declares it; finite n, m only set the
// reported c and the normalization.

inline ExponentReport exponent_report_at(const DiscreteDistribution& P,
                                         const DiscreteDistribution& Q, double c,
                                         Regime regime = Regime::balanced) {
    ExponentReport rep;
    rep.c = c;
    rep.regime = regime;
    if (regime == Regime::balanced) {
        DstarResult d = dstar(P, Q, c);
        rep.exponent = d.value;
        rep.normalization = Normalization::per_total_samples;
        rep.minimizer = std::move(d.minimizer);
    } else {
        rep.exponent = kld(P, Q);
        rep.normalization = Normalization::per_smaller_sample;
    }
    return rep;
}

inline ExponentReport exponent_report_at(const GaussianSpec& P, const GaussianSpec& Q, double c,
                                         Regime regime = Regime::balanced) {
    ExponentReport rep;
    rep.c = c;
    rep.regime = regime;
    if (regime == Regime::balanced) {
        rep.exponent = dstar(P, Q, c);
        rep.normalization = Normalization::per_total_samples;
    } else {
        rep.exponent = kld(P, Q);
        rep.normalization = Normalization::per_smaller_sample;
    }
    return rep;
}

inline ExponentReport exponent_report(const DiscreteDistribution& P,
                                      const DiscreteDistribution& Q, Index n, Index m,
                                      Regime regime = Regime::balanced) {
    if (n < 1 || m < 1) throw std::invalid_argument("exponent_report: need n, m >= 1");
    return exponent_report_at(P, Q, static_cast<double>(n) / static_cast<double>(n + m), regime);
}

inline ExponentReport exponent_report(const GaussianSpec& P, const GaussianSpec& Q, Index n,
                                      Index m, Regime regime = Regime::balanced) {
    if (n < 1 || m < 1) throw std::invalid_argument("exponent_report: need n, m >= 1");
    return exponent_report_at(P, Q, static_cast<double>(n) / static_cast<double>(n + m), regime);
}

inline std::string to_string(Regime r) {
    return r == Regime::balanced ? "balanced" : "degenerate";
}

inline std::string to_string(Normalization n) {
    return n == Normalization::per_total_samples ? "per_total_samples" : "per_smaller_sample";
}

}  // namespace mmdtest

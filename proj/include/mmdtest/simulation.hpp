#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mmdtest/changepoint.hpp"
#include "mmdtest/distributions.hpp"
#include "mmdtest/parallel.hpp"
#include "mmdtest/two_sample.hpp"

namespace mmdtest {

using AnyDistribution = std::variant<DiscreteDistribution, GaussianSpec, GaussianMixture>;

inline Sample sample(const AnyDistribution& dist, Index n, std::uint64_t seed) {
    return std::visit([&](const auto& d) { return sample(d, n, seed); }, dist);
}

inline bool same_distribution(const AnyDistribution& a, const AnyDistribution& b) {
    if (a.index() != b.index()) return false;
    if (const auto* d = std::get_if<DiscreteDistribution>(&a)) {
        const auto& e = std::get<DiscreteDistribution>(b);
        return d->support == e.support && d->pmf == e.pmf;
    }
    if (const auto* g = std::get_if<GaussianSpec>(&a)) {
        const auto& h = std::get<GaussianSpec>(b);
        return g->mean == h.mean && g->cov == h.cov;
    }
    const auto& x = std::get<GaussianMixture>(a);
    const auto& y = std::get<GaussianMixture>(b);
    if (x.weights != y.weights || x.components.size() != y.components.size()) return false;
    for (std::size_t i = 0; i < x.components.size(); ++i)
        if (x.components[i].mean != y.components[i].mean ||
            x.components[i].cov != y.components[i].cov)
            return false;
    return true;
}

// Fixed bandwidth or per-trial median heuristic on the pooled sample.
struct BandwidthRule {
    bool median = false;
    double fixed = 1.0;

    KernelSpec resolve(const Sample& X, const Sample& Y) const {
        if (!median) return KernelSpec(fixed);
        Eigen::MatrixXd pooled(X.n() + Y.n(), X.dim());
        pooled.topRows(X.n()) = X.data;
        pooled.bottomRows(Y.n()) = Y.data;
        return KernelSpec(median_heuristic(Sample(std::move(pooled))));
    }

    std::string label() const { return median ? "median" : std::to_string(fixed); }
};

// --- two-sample error curves -------------------------------------------------

struct TwoSampleConfig {
    AnyDistribution p;
    AnyDistribution q;
    std::vector<Index> n_grid;   // n = m along the grid
    int trials = 500;
    double alpha = 0.05;
    BandwidthRule bandwidth;
    ThresholdPolicy policy = ThresholdPolicy::permutation;
    int B = 1000;
    StatisticKind statistic = StatisticKind::biased;

    void validate() const {
        if (n_grid.empty()) throw std::invalid_argument("two_sample config: empty n grid");
        if (trials < 1) throw std::invalid_argument("two_sample config: trials >= 1");
        if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("two_sample config: alpha");
        if (B < 1) throw std::invalid_argument("two_sample config: B >= 1");
        if (!bandwidth.median && !(bandwidth.fixed > 0))
            throw std::invalid_argument("two_sample config: bandwidth must be positive");
    }
};

struct ErrorCurveRow {
    Index n = 0;
    Index m = 0;
    int trials = 0;
    double type_I_rate = 0.0;
    double type_II_rate = std::numeric_limits<double>::quiet_NaN();  // NaN when P = Q
    std::string threshold_policy;
    std::string bandwidth_rule;
};

struct ErrorCurve {
    std::vector<ErrorCurveRow> rows;
    std::uint64_t seed = 0;
    std::string experiment = "two_sample";
};

namespace detail {

inline bool run_one_pair(const Sample& X, const Sample& Y, const TwoSampleConfig& cfg,
                         std::uint64_t perm_seed) {
    const KernelSpec kernel = cfg.bandwidth.resolve(X, Y);
    ThresholdSpec spec;
    spec.policy = cfg.policy;
    spec.alpha = cfg.alpha;
    spec.B = cfg.B;
    spec.seed = perm_seed;
    return decide(X, Y, kernel, spec, cfg.statistic).reject;
}

}  // namespace detail

// Per-n type-I and type-II rejection rates; a pure function of (config, seed).
// Trials run in parallel with per-trial derived streams; aggregation is
// order-independent counting.
inline ErrorCurve run_two_sample_experiment(const TwoSampleConfig& cfg, std::uint64_t seed,
                                            int threads = 1) {
    cfg.validate();
    const bool null_config = same_distribution(cfg.p, cfg.q);
    ErrorCurve curve;
    curve.seed = seed;
    for (std::size_t cell = 0; cell < cfg.n_grid.size(); ++cell) {
        const Index n = cfg.n_grid[cell];
        std::vector<std::uint8_t> reject_null(static_cast<std::size_t>(cfg.trials), 0);
        std::vector<std::uint8_t> accept_alt(static_cast<std::size_t>(cfg.trials), 0);
        parallel_for(0, cfg.trials, threads, [&](std::int64_t trial) {
            const std::uint64_t base =
                (static_cast<std::uint64_t>(cell) << 32) ^ static_cast<std::uint64_t>(trial);
            // type-I side: both samples from P
            {
                const Sample X = sample(cfg.p, n, Rng::derive(seed, base, 1).next_u64());
                const Sample Y = sample(cfg.p, n, Rng::derive(seed, base, 2).next_u64());
                reject_null[static_cast<std::size_t>(trial)] =
                    detail::run_one_pair(X, Y, cfg, Rng::derive(seed, base, 3).next_u64());
            }
            // type-II side: (P, Q) pair, skipped for a null config
            if (!null_config) {
                const Sample X = sample(cfg.p, n, Rng::derive(seed, base, 4).next_u64());
                const Sample Y = sample(cfg.q, n, Rng::derive(seed, base, 5).next_u64());
                accept_alt[static_cast<std::size_t>(trial)] =
                    !detail::run_one_pair(X, Y, cfg, Rng::derive(seed, base, 6).next_u64());
            }
        });
        ErrorCurveRow row;
        row.n = n;
        row.m = n;
        row.trials = cfg.trials;
        int r1 = 0, a2 = 0;
        for (int t = 0; t < cfg.trials; ++t) {
            r1 += reject_null[static_cast<std::size_t>(t)];
            a2 += accept_alt[static_cast<std::size_t>(t)];
        }
        row.type_I_rate = static_cast<double>(r1) / cfg.trials;
        if (!null_config) row.type_II_rate = static_cast<double>(a2) / cfg.trials;
        row.threshold_policy = to_string(cfg.policy);
        row.bandwidth_rule = cfg.bandwidth.label();
        curve.rows.push_back(std::move(row));
    }
    return curve;
}

// --- exponent slope fit -------------------------------------------------------

struct ExponentFit {
    double slope = 0.0;
    double stderr_slope = 0.0;
    double intercept = 0.0;
    int used_rows = 0;
    std::vector<Index> excluded_n;  // rows with rate 0 or 1, reported not fitted
};

// Least-squares slope of -log(type_II_rate) against the chosen sample-size
// normalization ((n+m) or m).
inline ExponentFit fit_exponent(const ErrorCurve& curve,
                                Normalization norm = Normalization::per_total_samples) {
    std::vector<double> xs, ys;
    ExponentFit fit;
    for (const auto& row : curve.rows) {
        const double r = row.type_II_rate;
        if (!(r > 0.0) || !(r < 1.0)) {
            fit.excluded_n.push_back(row.n);
            continue;
        }
        xs.push_back(norm == Normalization::per_total_samples
                         ? static_cast<double>(row.n + row.m)
                         : static_cast<double>(row.m));
        ys.push_back(-std::log(r));
    }
    const int k = static_cast<int>(xs.size());
    if (k < 3) throw std::invalid_argument("fit_exponent: fewer than 3 usable rows");
    double mx = 0, my = 0;
    for (int i = 0; i < k; ++i) {
        mx += xs[static_cast<std::size_t>(i)];
        my += ys[static_cast<std::size_t>(i)];
    }
    mx /= k;
    my /= k;
    double sxx = 0, sxy = 0;
    for (int i = 0; i < k; ++i) {
        const double dx = xs[static_cast<std::size_t>(i)] - mx;
        sxx += dx * dx;
        sxy += dx * (ys[static_cast<std::size_t>(i)] - my);
    }
    if (sxx == 0) throw std::invalid_argument("fit_exponent: degenerate sample sizes");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0;
    for (int i = 0; i < k; ++i) {
        const double resid = ys[static_cast<std::size_t>(i)] -
                             (fit.intercept + fit.slope * xs[static_cast<std::size_t>(i)]);
        rss += resid * resid;
    }
    fit.stderr_slope = k > 2 ? std::sqrt(rss / (k - 2) / sxx) : 0.0;
    fit.used_rows = k;
    return fit;
}

// --- bandwidth sweeps ----------------------------------------------------------

// 3x3 grid of 2D standard normals with spacing 10; Q laid out identically but
// with correlation rho = (eps-1)/(eps+1) between the coordinates.
inline std::pair<GaussianMixture, GaussianMixture> make_grid_pair(double eps = 6.0) {
    const double rho = (eps - 1.0) / (eps + 1.0);
    std::vector<double> w(9, 1.0 / 9.0);
    std::vector<GaussianSpec> comps_p, comps_q;
    Eigen::MatrixXd cov_q(2, 2);
    cov_q << 1.0, rho, rho, 1.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            Eigen::VectorXd mu(2);
            mu << 10.0 * i, 10.0 * j;
            comps_p.emplace_back(mu, Eigen::MatrixXd::Identity(2, 2));
            comps_q.emplace_back(mu, cov_q);
        }
    }
    return {GaussianMixture(w, std::move(comps_p)), GaussianMixture(std::move(w), std::move(comps_q))};
}

// 1D five-component mixture with means Uniform[0,10]; Q perturbs each mean by
// standard Gaussian noise. One fixed pair per seed, trials resample data.
inline std::pair<GaussianMixture, GaussianMixture> make_mixture_pair(std::uint64_t seed,
                                                                     int components = 5) {
    Rng rng = Rng::derive(seed, 0x6d6f67ull);
    std::vector<double> w(static_cast<std::size_t>(components), 1.0 / components);
    std::vector<GaussianSpec> comps_p, comps_q;
    const Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);
    for (int k = 0; k < components; ++k) {
        Eigen::VectorXd mu(1);
        mu << 10.0 * rng.uniform01();
        Eigen::VectorXd mu_q = mu;
        mu_q(0) += rng.normal();
        comps_p.emplace_back(mu, one);
        comps_q.emplace_back(mu_q, one);
    }
    return {GaussianMixture(w, std::move(comps_p)), GaussianMixture(std::move(w), std::move(comps_q))};
}

struct SweepConfig {
    AnyDistribution p;
    AnyDistribution q;
    std::vector<double> bandwidths;
    std::vector<Index> n_grid;
    int trials = 200;
    double alpha = 0.05;
    int B = 500;
    StatisticKind statistic = StatisticKind::unbiased;

    void validate() const {
        if (bandwidths.empty()) throw std::invalid_argument("sweep config: empty bandwidth grid");
        if (n_grid.empty()) throw std::invalid_argument("sweep config: empty n grid");
        if (trials < 1 || B < 1) throw std::invalid_argument("sweep config: trials and B >= 1");
        if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("sweep config: alpha");
        for (double w : bandwidths)
            if (!(w > 0)) throw std::invalid_argument("sweep config: bandwidths must be positive");
    }
};

struct SweepRow {
    double bandwidth = 0.0;
    Index n = 0;
    Index m = 0;
    int trials = 0;
    double type_II_rate = 0.0;
};

struct SweepTable {
    std::vector<SweepRow> rows;
    std::uint64_t seed = 0;
    double median_bandwidth_reference = 0.0;  // median heuristic on one pooled draw
};

inline SweepTable run_bandwidth_sweep(const SweepConfig& cfg, std::uint64_t seed,
                                      int threads = 1) {
    cfg.validate();
    SweepTable table;
    table.seed = seed;
    {
        const Index n0 = cfg.n_grid.front();
        const Sample X = sample(cfg.p, n0, Rng::derive(seed, 0xabc, 1).next_u64());
        const Sample Y = sample(cfg.q, n0, Rng::derive(seed, 0xabc, 2).next_u64());
        Eigen::MatrixXd pooled(X.n() + Y.n(), X.dim());
        pooled.topRows(X.n()) = X.data;
        pooled.bottomRows(Y.n()) = Y.data;
        table.median_bandwidth_reference = median_heuristic(Sample(std::move(pooled)));
    }
    for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
        const Index n = cfg.n_grid[ni];
        // one set of sample pairs per n, shared across the bandwidth grid so
        // rate differences reflect the kernel, not resampling noise
        std::vector<std::vector<std::uint8_t>> accept(
            cfg.bandwidths.size(),
            std::vector<std::uint8_t>(static_cast<std::size_t>(cfg.trials), 0));
        parallel_for(0, cfg.trials, threads, [&](std::int64_t trial) {
            const std::uint64_t base =
                (static_cast<std::uint64_t>(ni) << 32) ^ static_cast<std::uint64_t>(trial);
            const Sample X = sample(cfg.p, n, Rng::derive(seed, base, 11).next_u64());
            const Sample Y = sample(cfg.q, n, Rng::derive(seed, base, 12).next_u64());
            for (std::size_t wi = 0; wi < cfg.bandwidths.size(); ++wi) {
                const KernelSpec kernel(cfg.bandwidths[wi]);
                ThresholdSpec spec;
                spec.policy = ThresholdPolicy::permutation;
                spec.alpha = cfg.alpha;
                spec.B = cfg.B;
                spec.seed = Rng::derive(seed, base, 13 + wi).next_u64();
                accept[wi][static_cast<std::size_t>(trial)] =
                    !decide(X, Y, kernel, spec, cfg.statistic).reject;
            }
        });
        for (std::size_t wi = 0; wi < cfg.bandwidths.size(); ++wi) {
            int acc = 0;
            for (int t = 0; t < cfg.trials; ++t) acc += accept[wi][static_cast<std::size_t>(t)];
            SweepRow row;
            row.bandwidth = cfg.bandwidths[wi];
            row.n = n;
            row.m = n;
            row.trials = cfg.trials;
            row.type_II_rate = static_cast<double>(acc) / cfg.trials;
            table.rows.push_back(row);
        }
    }
    return table;
}

// --- change-point experiments ----------------------------------------------------

struct ChangepointConfig {
    std::vector<double> shifts;
    std::vector<Index> n_grid;
    int trials = 200;
    double alpha = 0.05;
    BandwidthRule bandwidth{true, 1.0};  // median by default
    std::optional<std::pair<Index, Index>> window;  // default_window(n) if unset
    double change_fraction = 0.5;                   // change-point at floor(f * n)

    void validate() const {
        if (shifts.empty() || n_grid.empty())
            throw std::invalid_argument("changepoint config: empty grid");
        if (trials < 1) throw std::invalid_argument("changepoint config: trials >= 1");
        if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("changepoint config: alpha");
        if (!(change_fraction > 0 && change_fraction < 1))
            throw std::invalid_argument("changepoint config: change fraction in (0,1)");
    }
};

struct ChangepointRow {
    double shift = 0.0;
    Index n = 0;
    int trials = 0;
    double detection_rate = 0.0;
    // mean |estimated - true| over detected trials; NaN when nothing detected
    double mean_abs_error = std::numeric_limits<double>::quiet_NaN();
};

struct ChangepointTable {
    std::vector<ChangepointRow> rows;
    std::uint64_t seed = 0;
};

inline ChangepointTable run_changepoint_experiment(const ChangepointConfig& cfg,
                                                   std::uint64_t seed, int threads = 1) {
    cfg.validate();
    ChangepointTable table;
    table.seed = seed;
    std::size_t cell = 0;
    for (const Index n : cfg.n_grid) {
        const auto [wa, wb] = cfg.window ? *cfg.window : default_window(n);
        const Index t0 = static_cast<Index>(std::floor(cfg.change_fraction * n));
        for (const double shift : cfg.shifts) {
            std::vector<std::uint8_t> detected(static_cast<std::size_t>(cfg.trials), 0);
            std::vector<double> abs_err(static_cast<std::size_t>(cfg.trials), 0.0);
            parallel_for(0, cfg.trials, threads, [&](std::int64_t trial) {
                const std::uint64_t base =
                    (static_cast<std::uint64_t>(cell) << 32) ^ static_cast<std::uint64_t>(trial);
                Rng rng = Rng::derive(seed, base, 21);
                Eigen::MatrixXd z(n, 1);
                for (Index i = 0; i < n; ++i)
                    z(i, 0) = rng.normal() + (i >= t0 ? shift : 0.0);
                const Sample Z{std::move(z)};
                const KernelSpec kernel =
                    cfg.bandwidth.median
                        ? KernelSpec(median_heuristic(Z))
                        : KernelSpec(cfg.bandwidth.fixed);
                const ChangePointResult res = detect(Z, kernel, wa, wb, cfg.alpha);
                if (res.detected) {
                    detected[static_cast<std::size_t>(trial)] = 1;
                    abs_err[static_cast<std::size_t>(trial)] =
                        std::abs(static_cast<double>(*res.estimated_index - t0));
                }
            });
            ChangepointRow row;
            row.shift = shift;
            row.n = n;
            row.trials = cfg.trials;
            int det = 0;
            double err = 0.0;
            for (int t = 0; t < cfg.trials; ++t) {
                if (detected[static_cast<std::size_t>(t)]) {
                    ++det;
                    err += abs_err[static_cast<std::size_t>(t)];
                }
            }
            row.detection_rate = static_cast<double>(det) / cfg.trials;
            if (det > 0) row.mean_abs_error = err / det;
            table.rows.push_back(row);
            ++cell;
        }
    }
    return table;
}

}  // namespace mmdtest

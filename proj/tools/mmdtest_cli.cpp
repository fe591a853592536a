// Command-line front end: two-sample tests, off-line change detection,
// optimal error exponents, method-of-types verification, and the Monte Carlo
// experiment harness. Structured single results print as JSON; curves and
// tables land in CSV files (written atomically).

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "mmdtest/io.hpp"
#include "mmdtest/mmdtest.hpp"

namespace {

using namespace mmdtest;

struct CommonTestOptions {
    std::string x_path;
    std::string y_path;
    bool header = false;
    std::string kernel_family = "gaussian";
    std::string bandwidth = "median";
    std::string threshold = "permutation";
    std::string statistic = "biased";
    double alpha = 0.05;
    int B = 1000;
    std::uint64_t seed = 0;
    std::string out;
};

KernelSpec resolve_kernel(const std::string& bandwidth, const Sample& X, const Sample& Y) {
    if (bandwidth == "median") {
        Eigen::MatrixXd pooled(X.n() + Y.n(), X.dim());
        pooled.topRows(X.n()) = X.data;
        pooled.bottomRows(Y.n()) = Y.data;
        return KernelSpec(median_heuristic(Sample(std::move(pooled))));
    }
    try {
        const double w = std::stod(bandwidth);
        return KernelSpec(w);
    } catch (const std::exception&) {
        throw ConfigError("--bandwidth: expected a positive number or \"median\"");
    }
}

void emit(const json& j, const std::string& out_path) {
    const std::string text = j.dump(2) + "\n";
    std::cout << text;
    if (!out_path.empty()) atomic_write_file(out_path, text);
}

int run_test(const CommonTestOptions& opt) {
    if (opt.kernel_family != "gaussian")
        throw ConfigError("--kernel: only the gaussian family is supported");
    const Sample X = read_sample_csv(opt.x_path, opt.header);
    const Sample Y = read_sample_csv(opt.y_path, opt.header);
    const KernelSpec kernel = resolve_kernel(opt.bandwidth, X, Y);
    ThresholdSpec spec;
    try {
        spec.policy = threshold_policy_from_string(opt.threshold);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    spec.alpha = opt.alpha;
    spec.B = opt.B;
    spec.seed = opt.seed;
    StatisticKind kind;
    try {
        kind = statistic_kind_from_string(opt.statistic);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    // the unbiased-threshold policy implies the unbiased statistic
    if (spec.policy == ThresholdPolicy::unbiased_ldb) kind = StatisticKind::unbiased;
    TestOutcome outcome;
    try {
        outcome = decide(X, Y, kernel, spec, kind);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    json j = to_json(outcome);
    j["kernel"] = to_json(kernel);
    emit(j, opt.out);
    return 0;
}

struct ChangepointOptions {
    std::string input;
    bool header = false;
    std::string bandwidth = "median";
    std::vector<Index> window;
    double alpha = 0.05;
    bool per_index = false;
    std::string out;
};

int run_changepoint(const ChangepointOptions& opt) {
    const Sample Z = read_sample_csv(opt.input, opt.header);
    Index a, b;
    if (opt.window.empty()) {
        std::tie(a, b) = default_window(Z.n());
    } else if (opt.window.size() == 2) {
        a = opt.window[0];
        b = opt.window[1];
    } else {
        throw ConfigError("--window: expected two comma-separated indices a,b");
    }
    KernelSpec kernel = [&] {
        if (opt.bandwidth == "median") return KernelSpec(median_heuristic(Z));
        try {
            return KernelSpec(std::stod(opt.bandwidth));
        } catch (const std::exception&) {
            throw ConfigError("--bandwidth: expected a positive number or \"median\"");
        }
    }();
    ChangePointResult res;
    try {
        res = detect(Z, kernel, a, b, opt.alpha);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    json j = to_json(res, opt.per_index);
    j["n"] = Z.n();
    j["window"] = json::array({a, b});
    j["kernel"] = to_json(kernel);
    emit(j, opt.out);
    return 0;
}

struct ExponentOptions {
    std::string p_path;
    std::string q_path;
    double c = 0.5;
    std::string regime = "balanced";
    bool oracle = false;
    std::string out;
};

int run_exponent(const ExponentOptions& opt) {
    const AnyDistribution P = load_distribution(opt.p_path);
    const AnyDistribution Q = load_distribution(opt.q_path);
    Regime regime;
    if (opt.regime == "balanced") {
        regime = Regime::balanced;
    } else if (opt.regime == "degenerate") {
        regime = Regime::degenerate;
    } else {
        throw ConfigError("--regime: expected balanced or degenerate");
    }
    if (regime == Regime::balanced && !(opt.c > 0 && opt.c < 1))
        throw ConfigError("--c: must lie in (0,1)");

    json j;
    try {
        if (std::holds_alternative<DiscreteDistribution>(P) &&
            std::holds_alternative<DiscreteDistribution>(Q)) {
            const auto& p = std::get<DiscreteDistribution>(P);
            const auto& q = std::get<DiscreteDistribution>(Q);
            j = to_json(exponent_report_at(p, q, opt.c, regime));
            if (opt.oracle) {
                const DstarOracleResult o = dstar_oracle(p, q, opt.c);
                j["oracle"] = {{"value", std::isinf(o.value) ? json("inf") : json(o.value)},
                               {"certified", o.certified},
                               {"iterations", o.iterations}};
            }
        } else if (std::holds_alternative<GaussianSpec>(P) &&
                   std::holds_alternative<GaussianSpec>(Q)) {
            j = to_json(exponent_report_at(std::get<GaussianSpec>(P),
                                           std::get<GaussianSpec>(Q), opt.c, regime));
            if (opt.oracle)
                throw ConfigError("--oracle: only available for discrete distributions");
        } else {
            throw ConfigError(
                "exponent: needs two discrete or two gaussian distributions (mixtures unsupported)");
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    emit(j, opt.out);
    return 0;
}

struct SanovOptions {
    std::string out;
    std::vector<int> n_list{25, 50, 100, 200};
    double alpha = 0.05;
    double bandwidth = 1.0;
    std::string p_path;
    std::string q_path;
    std::vector<int> sandwich_t{2, 3};
    int sandwich_n = 30;
    int sandwich_trials = 20;
    std::uint64_t seed = 0;
};

DiscreteDistribution as_discrete(const AnyDistribution& d, const char* what) {
    if (const auto* dd = std::get_if<DiscreteDistribution>(&d)) return *dd;
    throw ConfigError(std::string(what) + ": expected a discrete distribution");
}

int run_sanov(const SanovOptions& opt) {
    DiscreteDistribution P = opt.p_path.empty()
                                 ? DiscreteDistribution::on_integers(Eigen::Vector2d(0.5, 0.5))
                                 : as_discrete(load_distribution(opt.p_path), "--p");
    DiscreteDistribution Q = opt.q_path.empty()
                                 ? DiscreteDistribution::on_integers(Eigen::Vector2d(0.9, 0.1))
                                 : as_discrete(load_distribution(opt.q_path), "--q");
    if (P.support != Q.support)
        throw ConfigError("sanov: P and Q must share one aligned alphabet");

    // Type-probability sandwich verification over random distributions
    json sandwich;
    long long types_checked = 0;
    double worst_margin = kInf;  // min over types of slack in the two bounds, in log domain
    bool ok = true;
    for (int t : opt.sandwich_t) {
        for (int rep = 0; rep < opt.sandwich_trials; ++rep) {
            Rng rng = Rng::derive(opt.seed, static_cast<std::uint64_t>(t),
                                  static_cast<std::uint64_t>(rep));
            Eigen::VectorXd pmf(t);
            double s = 0;
            for (int i = 0; i < t; ++i) {
                pmf(i) = rng.uniform01_open_left();
                s += pmf(i);
            }
            pmf /= s;
            pmf(t - 1) += 1.0 - pmf.sum();
            const DiscreteDistribution D = DiscreteDistribution::on_integers(pmf);
            for (int n = 1; n <= opt.sandwich_n; ++n) {
                for (const TypeVector& tv : enumerate_types(n, t)) {
                    const double lp = log_type_probability(D, tv);
                    const double d = kld_aligned(tv.pmf(), D.pmf);
                    if (std::isinf(d)) continue;  // outside support, prob 0
                    const double ub = -n * d;
                    const double lb = ub - t * std::log(static_cast<double>(n) + 1.0);
                    worst_margin = std::min({worst_margin, ub - lp, lp - lb});
                    if (lp > ub + 1e-9 || lp < lb - 1e-9) ok = false;
                    ++types_checked;
                }
            }
        }
    }
    sandwich["ok"] = ok;
    sandwich["types_checked"] = types_checked;
    sandwich["worst_log_margin"] = worst_margin;

    // Exact type-II error curve for the distribution-free rule
    const KernelSpec kernel(opt.bandwidth);
    std::vector<std::pair<int, int>> sizes;
    for (int n : opt.n_list) sizes.emplace_back(n, n);
    const auto curve = exact_error_curve(
        P, Q, kernel,
        [&](int n, int m) { return ldb_threshold(n, m, kernel.bound, opt.alpha); }, sizes);

    json cfg{{"n_list", opt.n_list},
             {"alpha", opt.alpha},
             {"bandwidth", opt.bandwidth},
             {"p", to_json(P)},
             {"q", to_json(Q)}};
    if (!opt.out.empty()) atomic_write_file(opt.out, to_csv(curve, config_hash(cfg), opt.seed));

    json j{{"sandwich", sandwich},
           {"dstar", dstar(P, Q, 0.5).value},
           {"curve_rows", curve.size()},
           {"output", opt.out}};
    std::cout << j.dump(2) << "\n";
    return ok ? 0 : 1;
}

struct HarnessOptions {
    std::string config_path;
    std::string out;
    std::uint64_t seed = 0;
    int threads = 1;
};

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return j;
}

int run_simulate(const HarnessOptions& opt) {
    const json j = load_config(opt.config_path);
    const std::string kind = j.value("experiment", "two_sample");
    std::string csv;
    if (kind == "two_sample") {
        const TwoSampleConfig cfg = two_sample_config_from_json(j);
        const ErrorCurve curve = run_two_sample_experiment(cfg, opt.seed, opt.threads);
        csv = to_csv(curve, config_hash(j));
    } else if (kind == "changepoint") {
        const ChangepointConfig cfg = changepoint_config_from_json(j);
        const ChangepointTable table = run_changepoint_experiment(cfg, opt.seed, opt.threads);
        csv = to_csv(table, config_hash(j));
    } else {
        throw ConfigError("simulate: unknown experiment \"" + kind +
                          "\" (expected two_sample or changepoint)");
    }
    atomic_write_file(opt.out, csv);
    std::cout << "{\"output\": \"" << opt.out << "\"}\n";
    return 0;
}

int run_sweep(const HarnessOptions& opt) {
    const json j = load_config(opt.config_path);
    const SweepConfig cfg = sweep_config_from_json(j, opt.seed);
    const SweepTable table = run_bandwidth_sweep(cfg, opt.seed, opt.threads);
    atomic_write_file(opt.out, to_csv(table, config_hash(j)));
    std::cout << "{\"output\": \"" << opt.out << "\"}\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernel two-sample tests, change detection, and error exponents"};
    app.require_subcommand(1);

    CommonTestOptions test_opt;
    CLI::App* test_cmd = app.add_subcommand("test", "Two-sample test on two CSV sample files");
    test_cmd->add_option("--x", test_opt.x_path, "CSV file with X observations (rows)")->required();
    test_cmd->add_option("--y", test_opt.y_path, "CSV file with Y observations (rows)")->required();
    test_cmd->add_flag("--header", test_opt.header, "Skip one header row in the CSV inputs");
    test_cmd->add_option("--kernel", test_opt.kernel_family, "Kernel family (gaussian)")
        ->capture_default_str();
    test_cmd->add_option("--bandwidth", test_opt.bandwidth, "Bandwidth w, or: median")
        ->capture_default_str();
    test_cmd
        ->add_option("--threshold", test_opt.threshold,
                     "Threshold policy: ldb, permutation, combined, unbiased")
        ->capture_default_str();
    test_cmd->add_option("--statistic", test_opt.statistic, "Statistic: biased, unbiased")
        ->capture_default_str();
    test_cmd->add_option("--alpha", test_opt.alpha, "Significance level")->capture_default_str();
    test_cmd->add_option("--B", test_opt.B, "Permutation replicates")->capture_default_str();
    test_cmd->add_option("--seed", test_opt.seed, "Permutation seed")->capture_default_str();
    test_cmd->add_option("--out", test_opt.out, "Also write the JSON result to this file");

    ChangepointOptions cp_opt;
    CLI::App* cp_cmd =
        app.add_subcommand("changepoint", "Off-line change-point scan over one CSV sequence");
    cp_cmd->add_option("--input", cp_opt.input, "CSV file with the observation sequence")
        ->required();
    cp_cmd->add_flag("--header", cp_opt.header, "Skip one header row");
    cp_cmd->add_option("--bandwidth", cp_opt.bandwidth, "Bandwidth w, or: median")
        ->capture_default_str();
    cp_cmd->add_option("--window", cp_opt.window, "Search window a,b (default 0.2n,0.8n)")
        ->delimiter(',');
    cp_cmd->add_option("--alpha", cp_opt.alpha, "Significance level")->capture_default_str();
    cp_cmd->add_flag("--per-index", cp_opt.per_index, "Include per-index scan statistics");
    cp_cmd->add_option("--out", cp_opt.out, "Also write the JSON result to this file");

    ExponentOptions exp_opt;
    CLI::App* exp_cmd =
        app.add_subcommand("exponent", "Optimal type-II error exponent D* for a pair (P, Q)");
    exp_cmd->add_option("--p", exp_opt.p_path, "Distribution JSON for P")->required();
    exp_cmd->add_option("--q", exp_opt.q_path, "Distribution JSON for Q")->required();
    exp_cmd->add_option("--c", exp_opt.c, "Asymptotic sample ratio n/(n+m)")
        ->capture_default_str();
    exp_cmd->add_option("--regime", exp_opt.regime, "balanced or degenerate (n/m -> inf)")
        ->capture_default_str();
    exp_cmd->add_flag("--oracle", exp_opt.oracle,
                      "Also run the simplex-descent oracle (discrete only)");
    exp_cmd->add_option("--out", exp_opt.out, "Also write the JSON result to this file");

    SanovOptions sanov_opt;
    CLI::App* sanov_cmd = app.add_subcommand(
        "sanov", "Method-of-types verification and the exact type-II error curve");
    sanov_cmd->add_option("--out", sanov_opt.out, "CSV output path for the exact error curve");
    sanov_cmd->add_option("--nlist", sanov_opt.n_list, "Sample sizes n=m for the curve")
        ->delimiter(',');
    sanov_cmd->add_option("--alpha", sanov_opt.alpha, "Significance level")
        ->capture_default_str();
    sanov_cmd->add_option("--bandwidth", sanov_opt.bandwidth, "Gaussian kernel bandwidth")
        ->capture_default_str();
    sanov_cmd->add_option("--p", sanov_opt.p_path, "Discrete distribution JSON for P");
    sanov_cmd->add_option("--q", sanov_opt.q_path, "Discrete distribution JSON for Q");
    sanov_cmd->add_option("--sandwich-t", sanov_opt.sandwich_t, "Alphabet sizes to verify")
        ->delimiter(',');
    sanov_cmd->add_option("--sandwich-n", sanov_opt.sandwich_n, "Verify all n up to this")
        ->capture_default_str();
    sanov_cmd
        ->add_option("--sandwich-trials", sanov_opt.sandwich_trials,
                     "Random distributions per alphabet size")
        ->capture_default_str();
    sanov_cmd->add_option("--seed", sanov_opt.seed, "Seed for the random distributions")
        ->capture_default_str();

    HarnessOptions sim_opt;
    CLI::App* sim_cmd =
        app.add_subcommand("simulate", "Run a configured Monte Carlo experiment, write CSV");
    sim_cmd->add_option("--config", sim_opt.config_path, "Experiment config JSON")->required();
    sim_cmd->add_option("--out", sim_opt.out, "CSV output path")->required();
    sim_cmd->add_option("--seed", sim_opt.seed, "Master seed")->capture_default_str();
    sim_cmd->add_option("--threads", sim_opt.threads, "Worker threads (output is thread-count independent)")
        ->capture_default_str();

    HarnessOptions sweep_opt;
    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "Bandwidth sweep over a configured setup, write CSV");
    sweep_cmd->add_option("--config", sweep_opt.config_path, "Sweep config JSON")->required();
    sweep_cmd->add_option("--out", sweep_opt.out, "CSV output path")->required();
    sweep_cmd->add_option("--seed", sweep_opt.seed, "Master seed")->capture_default_str();
    sweep_cmd->add_option("--threads", sweep_opt.threads, "Worker threads (output is thread-count independent)")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, exits 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (test_cmd->parsed()) return run_test(test_opt);
        if (cp_cmd->parsed()) return run_changepoint(cp_opt);
        if (exp_cmd->parsed()) return run_exponent(exp_opt);
        if (sanov_cmd->parsed()) return run_sanov(sanov_opt);
        if (sim_cmd->parsed()) return run_simulate(sim_opt);
        if (sweep_cmd->parsed()) return run_sweep(sweep_opt);
    } catch (const mmdtest::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

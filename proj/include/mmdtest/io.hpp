#pragma once

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "mmdtest/changepoint.hpp"
#include "mmdtest/exponents.hpp"
#include "mmdtest/sanov.hpp"
#include "mmdtest/simulation.hpp"

namespace mmdtest {

using nlohmann::json;

// Bad user input (malformed files, invalid flag combinations). The CLI maps
// this to exit status 2; everything else that throws maps to 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- JSON: distributions -----------------------------------------------------

inline json to_json(const DiscreteDistribution& d) {
    json support = json::array();
    for (Index i = 0; i < d.size(); ++i) {
        json row = json::array();
        for (Index j = 0; j < d.dim(); ++j) row.push_back(d.support(i, j));
        support.push_back(std::move(row));
    }
    json pmf = json::array();
    for (Index i = 0; i < d.size(); ++i) pmf.push_back(d.pmf(i));
    return {{"type", "discrete"}, {"support", std::move(support)}, {"pmf", std::move(pmf)}};
}

inline json to_json(const GaussianSpec& g) {
    json mean = json::array();
    for (Index i = 0; i < g.dim(); ++i) mean.push_back(g.mean(i));
    json cov = json::array();
    for (Index i = 0; i < g.dim(); ++i) {
        json row = json::array();
        for (Index j = 0; j < g.dim(); ++j) row.push_back(g.cov(i, j));
        cov.push_back(std::move(row));
    }
    return {{"type", "gaussian"}, {"mean", std::move(mean)}, {"cov", std::move(cov)}};
}

inline json to_json(const GaussianMixture& m) {
    json comps = json::array();
    for (const auto& c : m.components) comps.push_back(to_json(c));
    return {{"type", "mixture"}, {"weights", m.weights}, {"components", std::move(comps)}};
}

inline json to_json(const AnyDistribution& d) {
    return std::visit([](const auto& x) { return to_json(x); }, d);
}

namespace detail {

inline Eigen::VectorXd vector_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.empty()) throw ConfigError(std::string(what) + ": expected array");
    Eigen::VectorXd v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ConfigError(std::string(what) + ": expected number");
        v(static_cast<Index>(i)) = j[i].get<double>();
    }
    return v;
}

inline Eigen::MatrixXd matrix_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.empty()) throw ConfigError(std::string(what) + ": expected 2d array");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0) throw ConfigError(std::string(what) + ": expected 2d array");
    Eigen::MatrixXd m(static_cast<Index>(j.size()), static_cast<Index>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            throw ConfigError(std::string(what) + ": ragged rows");
        for (std::size_t k = 0; k < cols; ++k)
            m(static_cast<Index>(i), static_cast<Index>(k)) = j[i][k].get<double>();
    }
    return m;
}

}  // namespace detail

inline GaussianSpec gaussian_from_json(const json& j) {
    try {
        return GaussianSpec(detail::vector_from_json(j.at("mean"), "gaussian.mean"),
                            detail::matrix_from_json(j.at("cov"), "gaussian.cov"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("gaussian: ") + e.what());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("gaussian: ") + e.what());
    }
}

inline AnyDistribution distribution_from_json(const json& j) {
    if (!j.is_object() || !j.contains("type"))
        throw ConfigError("distribution: expected object with a \"type\" field");
    const std::string type = j.at("type").get<std::string>();
    try {
        if (type == "discrete") {
            return DiscreteDistribution(
                detail::matrix_from_json(j.at("support"), "discrete.support"),
                detail::vector_from_json(j.at("pmf"), "discrete.pmf"));
        }
        if (type == "gaussian") return gaussian_from_json(j);
        if (type == "mixture") {
            std::vector<double> w = j.at("weights").get<std::vector<double>>();
            std::vector<GaussianSpec> comps;
            for (const auto& c : j.at("components")) comps.push_back(gaussian_from_json(c));
            return GaussianMixture(std::move(w), std::move(comps));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("distribution: ") + e.what());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("distribution: ") + e.what());
    }
    throw ConfigError("distribution: unknown type \"" + type + "\"");
}

inline AnyDistribution load_distribution(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open distribution file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return distribution_from_json(j);
}

// --- JSON: kernels, thresholds, results ---------------------------------------

inline json to_json(const KernelSpec& k) {
    return {{"family", "gaussian"}, {"bandwidth", k.bandwidth}};
}

inline KernelSpec kernel_from_json(const json& j) {
    if (j.contains("family") && j.at("family").get<std::string>() != "gaussian")
        throw ConfigError("kernel: only the gaussian family is supported");
    try {
        return KernelSpec(j.at("bandwidth").get<double>());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("kernel: ") + e.what());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("kernel: ") + e.what());
    }
}

inline json to_json(const ThresholdSpec& s) {
    return {{"policy", to_string(s.policy)},
            {"alpha", s.alpha},
            {"B", s.B},
            {"seed", s.seed}};
}

inline json to_json(const TestOutcome& o) {
    return {{"decision", o.reject ? "reject_H0" : "accept_H0"},
            {"statistic", o.statistic},
            {"threshold", o.threshold},
            {"statistic_kind", to_string(o.statistic_kind)},
            {"threshold_policy", to_string(o.threshold_policy)},
            {"n", o.n},
            {"m", o.m}};
}

inline json to_json(const ChangePointResult& r, bool include_per_index = false) {
    json j = {{"detected", r.detected},
              {"scan_statistic", r.scan_statistic},
              {"threshold", r.threshold},
              {"estimated_index", r.estimated_index ? json(*r.estimated_index) : json(nullptr)}};
    if (include_per_index) {
        json per = json::array();
        for (const auto& [i, d] : r.per_index_statistics) per.push_back(json::array({i, d}));
        j["per_index_statistics"] = std::move(per);
    }
    return j;
}

inline json to_json(const ExponentReport& r) {
    json j = {{"c", r.c},
              {"regime", to_string(r.regime)},
              {"exponent", std::isinf(r.exponent) ? json("inf") : json(r.exponent)},
              {"normalization", to_string(r.normalization)}};
    j["minimizer"] = r.minimizer ? to_json(*r.minimizer) : json(nullptr);
    return j;
}

// --- CSV samples ----------------------------------------------------------------

// One observation per row, comma-separated reals; optional header row.
// Parse failures name the offending row.
inline Sample read_sample_csv(const std::string& path, bool has_header = false) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open sample file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && has_header) continue;
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
                    ++used;
                if (used != cell.size()) throw std::invalid_argument("trailing characters");
                row.push_back(v);
            } catch (const std::exception&) {
                throw ConfigError(path + ": row " + std::to_string(lineno) +
                                  ": cannot parse \"" + cell + "\" as a real number");
            }
        }
        if (row.empty())
            throw ConfigError(path + ": row " + std::to_string(lineno) + ": empty row");
        if (!rows.empty() && row.size() != rows.front().size())
            throw ConfigError(path + ": row " + std::to_string(lineno) +
                              ": expected " + std::to_string(rows.front().size()) + " columns, got " +
                              std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ConfigError(path + ": no observations");
    Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.front().size(); ++j)
            m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    try {
        return Sample(std::move(m));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

// --- deterministic CSV emission ---------------------------------------------------

namespace detail {
inline std::string fmt_double(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace detail

inline std::uint64_t config_hash(const json& j) {
    // FNV-1a over the compact dump
    const std::string s = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string csv_header_comment(std::uint64_t hash, std::uint64_t seed) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "# config_hash=%016llx seed=%llu\n",
                  static_cast<unsigned long long>(hash), static_cast<unsigned long long>(seed));
    return buf;
}

inline std::string to_csv(const ErrorCurve& curve, std::uint64_t hash) {
    std::string out = csv_header_comment(hash, curve.seed);
    out += "n,m,trials,type_I_rate,type_II_rate,threshold_policy,bandwidth_rule\n";
    for (const auto& r : curve.rows) {
        out += std::to_string(r.n) + "," + std::to_string(r.m) + "," + std::to_string(r.trials) +
               "," + detail::fmt_double(r.type_I_rate) + "," + detail::fmt_double(r.type_II_rate) +
               "," + r.threshold_policy + "," + r.bandwidth_rule + "\n";
    }
    return out;
}

inline std::string to_csv(const SweepTable& table, std::uint64_t hash) {
    std::string out = csv_header_comment(hash, table.seed);
    out += "# median_heuristic_bandwidth=" +
           detail::fmt_double(table.median_bandwidth_reference) + "\n";
    out += "bandwidth,n,m,trials,type_II_rate\n";
    for (const auto& r : table.rows) {
        out += detail::fmt_double(r.bandwidth) + "," + std::to_string(r.n) + "," +
               std::to_string(r.m) + "," + std::to_string(r.trials) + "," +
               detail::fmt_double(r.type_II_rate) + "\n";
    }
    return out;
}

inline std::string to_csv(const ChangepointTable& table, std::uint64_t hash) {
    std::string out = csv_header_comment(hash, table.seed);
    out += "shift,n,trials,detection_rate,mean_abs_localization_error\n";
    for (const auto& r : table.rows) {
        out += detail::fmt_double(r.shift) + "," + std::to_string(r.n) + "," +
               std::to_string(r.trials) + "," + detail::fmt_double(r.detection_rate) + "," +
               detail::fmt_double(r.mean_abs_error) + "\n";
    }
    return out;
}

inline std::string to_csv(const std::vector<ErrorCurvePoint>& curve, std::uint64_t hash,
                          std::uint64_t seed) {
    std::string out = csv_header_comment(hash, seed);
    out += "n,m,beta,rate,dstar\n";
    for (const auto& p : curve) {
        out += std::to_string(p.n) + "," + std::to_string(p.m) + "," +
               detail::fmt_double(p.beta) + "," + detail::fmt_double(p.rate) + "," +
               detail::fmt_double(p.dstar) + "\n";
    }
    return out;
}

// Write-to-temp then rename: no partial output survives a failure.
inline void atomic_write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open output file: " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, target);
}

// --- experiment config parsing ------------------------------------------------------

inline BandwidthRule bandwidth_rule_from_json(const json& j) {
    BandwidthRule rule;
    if (j.is_string()) {
        if (j.get<std::string>() != "median")
            throw ConfigError("bandwidth: expected a number or \"median\"");
        rule.median = true;
        return rule;
    }
    if (!j.is_number() || !(j.get<double>() > 0))
        throw ConfigError("bandwidth: expected a positive number or \"median\"");
    rule.fixed = j.get<double>();
    return rule;
}

inline TwoSampleConfig two_sample_config_from_json(const json& j) {
    TwoSampleConfig cfg;
    try {
        cfg.p = distribution_from_json(j.at("p"));
        cfg.q = distribution_from_json(j.at("q"));
        cfg.n_grid = j.at("n_grid").get<std::vector<Index>>();
        cfg.trials = j.value("trials", 500);
        cfg.alpha = j.value("alpha", 0.05);
        if (j.contains("kernel")) {
            const auto& k = j.at("kernel");
            cfg.bandwidth = bandwidth_rule_from_json(k.is_object() ? k.at("bandwidth") : k);
        }
        if (j.contains("threshold")) {
            const auto& t = j.at("threshold");
            cfg.policy = threshold_policy_from_string(t.at("policy").get<std::string>());
            cfg.B = t.value("B", 1000);
        }
        cfg.statistic = statistic_kind_from_string(j.value("statistic", "biased"));
        cfg.validate();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("two_sample config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("two_sample config: ") + e.what());
    }
    return cfg;
}

inline SweepConfig sweep_config_from_json(const json& j, std::uint64_t seed) {
    SweepConfig cfg;
    try {
        if (j.contains("setup")) {
            const std::string setup = j.at("setup").get<std::string>();
            if (setup == "grid") {
                auto [p, q] = make_grid_pair(j.value("epsilon", 6.0));
                cfg.p = std::move(p);
                cfg.q = std::move(q);
            } else if (setup == "mixture") {
                auto [p, q] = make_mixture_pair(seed, j.value("components", 5));
                cfg.p = std::move(p);
                cfg.q = std::move(q);
            } else {
                throw ConfigError("sweep config: unknown setup \"" + setup + "\"");
            }
        } else {
            cfg.p = distribution_from_json(j.at("p"));
            cfg.q = distribution_from_json(j.at("q"));
        }
        cfg.bandwidths = j.at("bandwidths").get<std::vector<double>>();
        cfg.n_grid = j.at("n_grid").get<std::vector<Index>>();
        cfg.trials = j.value("trials", 200);
        cfg.alpha = j.value("alpha", 0.05);
        cfg.B = j.value("B", 500);
        cfg.statistic = statistic_kind_from_string(j.value("statistic", "unbiased"));
        cfg.validate();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("sweep config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("sweep config: ") + e.what());
    }
    return cfg;
}

inline ChangepointConfig changepoint_config_from_json(const json& j) {
    ChangepointConfig cfg;
    try {
        cfg.shifts = j.at("shifts").get<std::vector<double>>();
        cfg.n_grid = j.at("n_grid").get<std::vector<Index>>();
        cfg.trials = j.value("trials", 200);
        cfg.alpha = j.value("alpha", 0.05);
        if (j.contains("kernel")) {
            const auto& k = j.at("kernel");
            cfg.bandwidth = bandwidth_rule_from_json(k.is_object() ? k.at("bandwidth") : k);
        }
        if (j.contains("window") && !j.at("window").is_string()) {
            const auto w = j.at("window").get<std::vector<Index>>();
            if (w.size() != 2) throw ConfigError("changepoint config: window needs two entries");
            cfg.window = {w[0], w[1]};
        }
        cfg.change_fraction = j.value("change_fraction", 0.5);
        cfg.validate();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("changepoint config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("changepoint config: ") + e.what());
    }
    return cfg;
}

}  // namespace mmdtest

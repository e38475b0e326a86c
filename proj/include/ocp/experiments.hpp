#pragma once

// Experiment drivers: configuration parsing, the convergence experiments for
// the two asymptotic statements, the decoupling sweep and the oracle battery.
// Outputs are CSV (with the resolved configuration embedded as a '#' header
// line) or JSON. Exit codes: 0 success, 1 acceptance failure, 2 invalid or
// inadmissible configuration, 3 numerical failure.

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ocp/configuration.hpp"
#include "ocp/free_energy.hpp"
#include "ocp/kernel.hpp"
#include "ocp/meanfield.hpp"
#include "ocp/numerics.hpp"
#include "ocp/oracle.hpp"

namespace ocp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAcceptanceFailure = 1;
inline constexpr int kExitInvalidConfig = 2;
inline constexpr int kExitNumericalFailure = 3;

struct ExperimentConfig {
    std::string experiment = "translate";
    std::vector<double> scale_grid{100.0, 200.0, 400.0};
    std::vector<double> c_list{0.02};
    std::vector<Complex> centers{Complex(0.0, 0.0)};
    std::vector<Complex> translations{Complex(0.0, 0.0), Complex(0.05, 0.0)};
    std::vector<double> rotations{0.0, 0.3, 1.2};
    std::vector<double> separations{0.5, 1.0, 1.5, 2.0};
    long long points_per_cluster = 1;  // decouple sweep only
    KernelMode kernel_mode = KernelMode::finite;
    double r1 = 0.25;
    double r2 = 1.0;
    std::uint64_t seed = 20260823ULL;
    std::uint64_t samples = 1000000ULL;
    std::string format = "csv";
};

struct RunResult {
    int exit_code = kExitOk;
    std::string output;
    std::string message;
};

namespace detail {

inline std::vector<Complex> parse_point_list(const nlohmann::json& j, const char* field) {
    std::vector<Complex> out;
    for (const auto& p : j) {
        if (!p.is_array() || p.size() != 2)
            throw Error(std::string("config: ") + field + " entries must be [re, im]");
        out.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    return out;
}

inline std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace detail

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["experiment"] = cfg.experiment;
    j["scale_grid"] = cfg.scale_grid;
    j["c_list"] = cfg.c_list;
    j["centers"] = nlohmann::json::array();
    for (const auto& z : cfg.centers) j["centers"].push_back({z.real(), z.imag()});
    j["translations"] = nlohmann::json::array();
    for (const auto& z : cfg.translations) j["translations"].push_back({z.real(), z.imag()});
    j["rotations"] = cfg.rotations;
    j["separations"] = cfg.separations;
    j["points_per_cluster"] = cfg.points_per_cluster;
    j["kernel_mode"] = cfg.kernel_mode == KernelMode::finite ? "finite" : "infinite";
    j["r1"] = cfg.r1;
    j["r2"] = cfg.r2;
    j["seed"] = cfg.seed;
    j["samples"] = cfg.samples;
    j["format"] = cfg.format;
    j["generator"] = kGeneratorName;
    j["kernel_index_convention"] = "top index = particle count - 1 (integer trace)";
    return j;
}

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
    ExperimentConfig cfg;
    if (j.contains("experiment")) cfg.experiment = j["experiment"].get<std::string>();
    if (j.contains("scale_grid")) cfg.scale_grid = j["scale_grid"].get<std::vector<double>>();
    if (j.contains("c")) cfg.c_list = {j["c"].get<double>()};
    if (j.contains("c_list")) cfg.c_list = j["c_list"].get<std::vector<double>>();
    if (j.contains("centers")) cfg.centers = detail::parse_point_list(j["centers"], "centers");
    if (j.contains("translations"))
        cfg.translations = detail::parse_point_list(j["translations"], "translations");
    if (j.contains("rotations")) cfg.rotations = j["rotations"].get<std::vector<double>>();
    if (j.contains("separations")) cfg.separations = j["separations"].get<std::vector<double>>();
    if (j.contains("points_per_cluster"))
        cfg.points_per_cluster = j["points_per_cluster"].get<long long>();
    if (j.contains("kernel_mode")) {
        std::string m = j["kernel_mode"].get<std::string>();
        if (m == "finite")
            cfg.kernel_mode = KernelMode::finite;
        else if (m == "infinite")
            cfg.kernel_mode = KernelMode::infinite;
        else
            throw Error("config: kernel_mode must be finite or infinite");
    }
    if (j.contains("r1")) cfg.r1 = j["r1"].get<double>();
    if (j.contains("r2")) cfg.r2 = j["r2"].get<double>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("samples")) cfg.samples = j["samples"].get<std::uint64_t>();
    if (j.contains("format")) cfg.format = j["format"].get<std::string>();

    for (std::size_t i = 1; i < cfg.scale_grid.size(); ++i)
        if (!(cfg.scale_grid[i] > cfg.scale_grid[i - 1]))
            throw Error("config: scale_grid must be strictly increasing");
    for (double n : cfg.scale_grid) {
        if (!(n > 0.0)) throw Error("config: scales must be positive");
        for (double c : cfg.c_list) {
            double m = c * n;
            if (std::abs(m - std::round(m)) > 1e-9 || std::round(m) < 1.0)
                throw Error("config: c * N must be a positive integer for every N");
        }
    }
    return cfg;
}

namespace detail {

inline std::string csv_header_line(const ExperimentConfig& cfg) {
    return "# " + config_to_json(cfg).dump() + "\n";
}

inline std::vector<PointCluster> build_clusters(const ExperimentConfig& cfg, double n) {
    BackgroundScale scale(n);
    std::vector<PointCluster> clusters;
    for (std::size_t i = 0; i < cfg.c_list.size(); ++i) {
        long long m = (long long)std::llround(cfg.c_list[i] * n);
        Complex center = i < cfg.centers.size() ? cfg.centers[i] : Complex(0.0);
        clusters.push_back(generate_lattice_disk(scale, m, center));
    }
    return clusters;
}

}  // namespace detail

/// Theorem check: F^Corr(a) - F^Corr(0) over a translation sweep, one row per
/// (N, a). Asserts that the largest residual magnitude shrinks along the
/// scale grid.
inline RunResult run_translate(const ExperimentConfig& cfg) {
    RunResult res;
    std::ostringstream csv;
    csv << detail::csv_header_line(cfg);
    csv << "n,a_re,a_im,residual,log10_abs_residual\n";
    std::vector<double> max_log10(cfg.scale_grid.size(),
                                  -std::numeric_limits<double>::infinity());
    for (std::size_t gi = 0; gi < cfg.scale_grid.size(); ++gi) {
        double n = cfg.scale_grid[gi];
        BackgroundScale scale(n);
        auto clusters = detail::build_clusters(cfg, n);
        if (clusters.size() != 1) {
            res.exit_code = kExitInvalidConfig;
            res.message = "translate requires exactly one cluster";
            return res;
        }
        for (const auto& a : cfg.translations) {
            PointCluster moved = clusters[0];
            moved.translation += a;
            auto rep = separation_check({moved}, scale, cfg.r1, cfg.r2);
            if (!rep.ok()) {
                res.exit_code = kExitInvalidConfig;
                res.message = "assumption check failed at N=" + detail::fmt(n);
                return res;
            }
            double value, log10_abs;
            if (cfg.kernel_mode == KernelMode::finite) {
                LogValue r = translate_residual(clusters[0], scale, a);
                value = r.to_double();
                log10_abs = r.is_zero() ? -std::numeric_limits<double>::infinity()
                                        : r.log_mag / std::log(10.0);
            } else {
                double f0 = correlation_energy({clusters[0]}, scale, KernelMode::infinite);
                double fa = correlation_energy({moved}, scale, KernelMode::infinite);
                value = fa - f0;
                log10_abs = value == 0.0 ? -std::numeric_limits<double>::infinity()
                                         : std::log10(std::abs(value));
            }
            if (std::isnan(value)) {
                res.exit_code = kExitNumericalFailure;
                res.message = "NaN residual";
                return res;
            }
            if (a != Complex(0.0)) max_log10[gi] = std::max(max_log10[gi], log10_abs);
            csv << detail::fmt(n) << "," << detail::fmt(a.real()) << "," << detail::fmt(a.imag())
                << "," << detail::fmt(value) << "," << detail::fmt(log10_abs) << "\n";
        }
    }
    for (std::size_t i = 1; i < max_log10.size(); ++i)
        if (!(max_log10[i] < max_log10[i - 1])) {
            res.exit_code = kExitAcceptanceFailure;
            res.message = "residual did not shrink along the scale grid";
        }
    res.output = csv.str();
    return res;
}

/// Rotation-invariance check of the correlation energy, one row per (N, angle).
inline RunResult run_rotate(const ExperimentConfig& cfg) {
    RunResult res;
    std::ostringstream csv;
    csv << detail::csv_header_line(cfg);
    csv << "n,angle,residual\n";
    for (double n : cfg.scale_grid) {
        BackgroundScale scale(n);
        auto clusters = detail::build_clusters(cfg, n);
        auto rep = separation_check(clusters, scale, cfg.r1, cfg.r2);
        if (!rep.ok()) {
            res.exit_code = kExitInvalidConfig;
            res.message = "assumption check failed at N=" + detail::fmt(n);
            return res;
        }
        double f0 = correlation_energy(clusters, scale, cfg.kernel_mode);
        for (double th : cfg.rotations) {
            auto rotated = clusters;
            Complex phase = std::polar(1.0, th);
            for (auto& cl : rotated) {
                for (auto& p : cl.points) p *= phase;
                cl.translation *= phase;
            }
            double fr = correlation_energy(rotated, scale, cfg.kernel_mode);
            double residual = fr - f0;
            if (std::isnan(residual)) {
                res.exit_code = kExitNumericalFailure;
                res.message = "NaN residual";
                return res;
            }
            if (std::abs(residual) > 1e-8 * std::max(1.0, std::abs(f0))) {
                res.exit_code = kExitAcceptanceFailure;
                res.message = "rotation residual above tolerance";
            }
            csv << detail::fmt(n) << "," << detail::fmt(th) << "," << detail::fmt(residual)
                << "\n";
        }
    }
    res.output = csv.str();
    return res;
}

/// Determinant decoupling sweep: gap between the full infinite-kernel
/// determinant and the per-cluster block sum, over separations.
inline RunResult run_decouple(const ExperimentConfig& cfg) {
    RunResult res;
    std::ostringstream csv;
    csv << detail::csv_header_line(cfg);
    csv << "n,separation,gap,two_point_closed_form\n";
    for (double n : cfg.scale_grid) {
        BackgroundScale scale(n);
        double prev_abs_gap = std::numeric_limits<double>::infinity();
        for (double d : cfg.separations) {
            std::vector<PointCluster> clusters(2);
            if (cfg.points_per_cluster == 1) {
                clusters[0].points = {Complex(-0.5 * d, 0.0)};
                clusters[1].points = {Complex(0.5 * d, 0.0)};
            } else {
                clusters[0] =
                    generate_lattice_disk(scale, cfg.points_per_cluster, Complex(-0.5 * d, 0.0));
                clusters[1] =
                    generate_lattice_disk(scale, cfg.points_per_cluster, Complex(0.5 * d, 0.0));
            }
            auto dec = decoupled_logdet(clusters, scale);
            double closed = cfg.points_per_cluster == 1
                                ? std::log1p(-std::exp(-n * d * d))
                                : std::numeric_limits<double>::quiet_NaN();
            if (std::isnan(dec.gap)) {
                res.exit_code = kExitNumericalFailure;
                res.message = "NaN gap";
                return res;
            }
            if (std::abs(dec.gap) > prev_abs_gap + 1e-12) {
                res.exit_code = kExitAcceptanceFailure;
                res.message = "gap magnitude did not shrink with separation";
            }
            prev_abs_gap = std::abs(dec.gap);
            csv << detail::fmt(n) << "," << detail::fmt(d) << "," << detail::fmt(dec.gap) << ","
                << detail::fmt(closed) << "\n";
        }
    }
    res.output = csv.str();
    return res;
}

/// Theorem check: F^Corr(all) - sum_j F^Corr(j) against the predicted
/// expansion; one row per N, with the residual required to shrink.
inline RunResult run_multihole(const ExperimentConfig& cfg) {
    RunResult res;
    std::ostringstream csv;
    csv << detail::csv_header_line(cfg);
    csv << "n,lhs,prediction,residual\n";
    if (cfg.c_list.size() < 2) {
        res.exit_code = kExitInvalidConfig;
        res.message = "multihole requires at least two clusters";
        return res;
    }
    double prev = std::numeric_limits<double>::infinity();
    bool shrinking = true;
    for (double n : cfg.scale_grid) {
        BackgroundScale scale(n);
        auto clusters = detail::build_clusters(cfg, n);
        auto rep = separation_check(clusters, scale, cfg.r1, cfg.r2);
        if (!rep.ok()) {
            res.exit_code = kExitInvalidConfig;
            res.message = "assumption check failed at N=" + detail::fmt(n);
            return res;
        }
        double lhs = correlation_energy(clusters, scale, cfg.kernel_mode);
        for (const auto& cl : clusters) lhs -= correlation_energy({cl}, scale, cfg.kernel_mode);
        double c_total = 0.0;
        for (double c : cfg.c_list) c_total += c;
        double pred = multihole_prediction(n, c_total, cfg.c_list).total;
        double residual = lhs - pred;
        if (std::isnan(residual)) {
            res.exit_code = kExitNumericalFailure;
            res.message = "NaN residual";
            return res;
        }
        if (!(std::abs(residual) < prev)) shrinking = false;
        prev = std::abs(residual);
        csv << detail::fmt(n) << "," << detail::fmt(lhs) << "," << detail::fmt(pred) << ","
            << detail::fmt(residual) << "\n";
    }
    if (!shrinking) {
        res.exit_code = kExitAcceptanceFailure;
        res.message = "residual did not shrink along the scale grid";
    }
    res.output = csv.str();
    return res;
}

/// Fixture battery of oracle cross-checks; JSON output, exit 1 on any failure.
inline RunResult run_oracle_battery(const ExperimentConfig& cfg) {
    RunResult res;
    nlohmann::json out;
    out["config"] = config_to_json(cfg);
    out["items"] = nlohmann::json::array();
    bool all_pass = true;
    auto add = [&](const std::string& name, bool pass, double observed, double expected,
                   double tolerance) {
        out["items"].push_back({{"name", name},
                                {"pass", pass},
                                {"observed", observed},
                                {"expected", expected},
                                {"tolerance", tolerance}});
        all_pass = all_pass && pass;
    };
    const std::uint64_t s = cfg.samples;

    try {
        {
            auto est = mc_partition(1, {}, BackgroundScale(1.0), s, cfg.seed);
            double expect = std::log(M_PI);
            add("mc-partition-gaussian", std::abs(est.mean - expect) <= 3.0 * est.stderr_,
                est.mean, expect, 3.0 * est.stderr_);
        }
        {
            auto est = mc_partition(2, {}, BackgroundScale(1.0), s, cfg.seed + 1);
            double expect = ginibre_log_z_exact(2, 1.0);
            add("mc-partition-two-particle", std::abs(est.mean - expect) <= 3.0 * est.stderr_,
                est.mean, expect, 3.0 * est.stderr_);
        }
        {
            PointCluster cl;
            cl.points = {Complex(0.3, 0.0)};
            BackgroundScale scale(2.0);
            auto est = mc_partition(2, {cl}, scale, s, cfg.seed + 2);
            double expect = log_z_pinned({cl}, scale, KernelMode::finite).log_z.log_mag;
            add("mc-partition-pinned", std::abs(est.mean - expect) <= 3.0 * est.stderr_, est.mean,
                expect, 3.0 * est.stderr_);
        }
        {
            auto est = mc_coulomb(Disk{}, Disk{}, s, cfg.seed + 3);
            double expect = disk_self_energy(1.0);
            add("mc-coulomb-unit-disk", std::abs(est.mean - expect) <= 3.0 * est.stderr_,
                est.mean, expect, 3.0 * est.stderr_);
        }
        {
            Disk half{Complex(0.0), 0.5};
            auto est = mc_coulomb(half, half, s, cfg.seed + 4);
            double expect = disk_self_energy(0.5);
            add("mc-coulomb-half-disk", std::abs(est.mean - expect) <= 3.0 * est.stderr_,
                est.mean, expect, 3.0 * est.stderr_);
        }
        {
            bool pass = true;
            double worst = 0.0;
            for (long long jt = 0; jt <= 5; ++jt)
                for (double n : {1.0, 10.0}) {
                    double tr = kernel_trace(GinibreKernel::truncated(BackgroundScale(n), jt),
                                             14.0 / std::sqrt(n), 240);
                    worst = std::max(worst, std::abs(tr - std::round(tr)));
                    pass = pass && std::abs(tr - double(jt + 1)) < 1e-6;
                }
            add("kernel-trace-integer", pass, worst, 0.0, 1e-6);
        }
        {
            BackgroundScale scale(50.0);
            auto cluster = generate_lattice_disk(scale, 3, Complex(0.2, 0.1));
            auto grad_closed = emf_gradient(
                MeanFieldProblem::make(scale, scale.n, {cluster}), 0);
            auto grad_fd = finite_difference_gradient(
                [&](Complex a) {
                    PointCluster moved = cluster;
                    moved.translation += a;
                    return emf_energy(MeanFieldProblem::make(scale, scale.n, {moved})).energy;
                },
                Complex(0.0), 1e-5);
            double rel = std::abs(grad_fd - grad_closed) / std::abs(grad_closed);
            add("meanfield-gradient-fd", rel < 1e-6, rel, 0.0, 1e-6);
        }
        {
            double worst = 0.0;
            detail::SplitMix64 rng(cfg.seed + 5);
            for (int i = 0; i < 20; ++i) {
                double c1 = 0.01 + 0.18 * rng.uniform();
                double c2 = 0.01 + 0.18 * rng.uniform();
                worst = std::max(worst, std::abs(mf_identity_check(c1, c2)));
            }
            add("meanfield-identity", worst < 1e-12, worst, 0.0, 1e-12);
        }
        {
            detail::SplitMix64 rng(cfg.seed + 6);
            BackgroundScale scale(100.0);
            double worst = 0.0;
            for (int i = 0; i < 5; ++i) {
                PointCluster a, b;
                a.points = {Complex(-0.3 + 0.02 * rng.uniform(), 0.02 * rng.uniform()),
                            Complex(-0.25, 0.03 + 0.02 * rng.uniform())};
                b.points = {Complex(0.3 + 0.02 * rng.uniform(), 0.02 * rng.uniform()),
                            Complex(0.25, -0.03 - 0.02 * rng.uniform())};
                double expansion = brute_force_det_expansion(a, b, scale);
                std::vector<PointCluster> both{a, b};
                auto pts = detail::concat_effective(both);
                auto direct =
                    det_lu(kernel_matrix(GinibreKernel::infinite(scale), pts).to_complex(), 4)
                        .real();
                worst = std::max(worst, std::abs(expansion - direct) / std::abs(direct));
            }
            add("brute-force-expansion", worst < 1e-12, worst, 0.0, 1e-12);
        }
    } catch (const Error& e) {
        res.exit_code = kExitNumericalFailure;
        res.message = e.what();
        return res;
    }

    out["all_pass"] = all_pass;
    res.exit_code = all_pass ? kExitOk : kExitAcceptanceFailure;
    res.output = out.dump(2) + "\n";
    return res;
}

namespace detail {

// Re-emit a sweep's CSV body as {"config", "columns", "rows"} JSON. Cells are
// numbers when finite; non-finite values are kept as strings.
inline std::string csv_to_json(const std::string& csv, const ExperimentConfig& cfg) {
    nlohmann::json out;
    out["config"] = config_to_json(cfg);
    out["columns"] = nlohmann::json::array();
    out["rows"] = nlohmann::json::array();
    std::istringstream in(csv);
    std::string line;
    bool header_done = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream cells(line);
        std::string cell;
        nlohmann::json row = nlohmann::json::array();
        while (std::getline(cells, cell, ',')) {
            if (!header_done) {
                out["columns"].push_back(cell);
                continue;
            }
            try {
                std::size_t used = 0;
                double v = std::stod(cell, &used);
                if (used == cell.size() && std::isfinite(v))
                    row.push_back(v);
                else
                    row.push_back(cell);
            } catch (const std::exception&) {
                row.push_back(cell);
            }
        }
        if (header_done)
            out["rows"].push_back(row);
        else
            header_done = true;
    }
    return out.dump(2) + "\n";
}

}  // namespace detail

inline RunResult run_experiment(const ExperimentConfig& cfg) {
    RunResult res;
    if (cfg.format != "csv" && cfg.format != "json") {
        res.exit_code = kExitInvalidConfig;
        res.message = "unknown format: " + cfg.format;
        return res;
    }
    if (cfg.experiment == "translate")
        res = run_translate(cfg);
    else if (cfg.experiment == "rotate")
        res = run_rotate(cfg);
    else if (cfg.experiment == "decouple")
        res = run_decouple(cfg);
    else if (cfg.experiment == "multihole")
        res = run_multihole(cfg);
    else if (cfg.experiment == "oracle-battery")
        return run_oracle_battery(cfg);  // already JSON
    else {
        res.exit_code = kExitInvalidConfig;
        res.message = "unknown experiment: " + cfg.experiment;
        return res;
    }
    if (cfg.format == "json" && !res.output.empty())
        res.output = detail::csv_to_json(res.output, cfg);
    return res;
}

}  // namespace ocp

// Command-line front door: kernel evaluation, mean-field closed forms, free
// energies, experiment drivers and Monte Carlo oracles. Exit codes: 0 ok,
// 1 acceptance failure, 2 invalid configuration, 3 numerical failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ocp/configuration.hpp"
#include "ocp/experiments.hpp"
#include "ocp/free_energy.hpp"
#include "ocp/kernel.hpp"
#include "ocp/meanfield.hpp"
#include "ocp/numerics.hpp"
#include "ocp/oracle.hpp"

namespace {

using nlohmann::json;

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw ocp::Error("cannot open output file " + out_path);
    out << text;
}

std::vector<ocp::PointCluster> load_clusters(const std::vector<std::string>& paths) {
    std::vector<ocp::PointCluster> clusters;
    for (const auto& p : paths) clusters.push_back(ocp::load_cluster(p));
    return clusters;
}

json mc_to_json(const ocp::McEstimate& est) {
    return json{{"estimate", est.mean},
                {"stderr", est.stderr_},
                {"samples", est.samples},
                {"seed", est.seed},
                {"generator_name", est.generator},
                {"bias_warning", est.bias_warning}};
}

int run(int argc, char** argv) {
    CLI::App app{"Exact and asymptotic free energies for the determinantal 2D plasma "
                 "with pinned-charge clusters"};
    app.require_subcommand(1);

    std::string config_path, out_path, format = "json";
    std::uint64_t seed = 20260823ULL;

    // ---- kernel eval
    auto* kernel_cmd = app.add_subcommand("kernel", "Correlation kernel evaluation");
    auto* kernel_eval = kernel_cmd->add_subcommand("eval", "Evaluate K(z, w)");
    double kn = 1.0, zre = 0.0, zim = 0.0, wre = 0.0, wim = 0.0;
    long long korder = -1;  // -1 = infinite
    kernel_eval->add_option("--n", kn, "background scale N");
    kernel_eval->add_option("--particles", korder, "particle count (omit for infinite kernel)");
    kernel_eval->add_option("--z-re", zre);
    kernel_eval->add_option("--z-im", zim);
    kernel_eval->add_option("--w-re", wre);
    kernel_eval->add_option("--w-im", wim);
    kernel_eval->add_option("--out", out_path, "output path (default stdout)");

    // ---- meanfield
    auto* mf_cmd = app.add_subcommand("meanfield", "Mean-field closed forms");
    auto* mf_energy = mf_cmd->add_subcommand("energy", "Equilibrium energy decomposition");
    auto* mf_gradient = mf_cmd->add_subcommand("gradient", "Translation gradient of E^MF");
    auto* mf_split = mf_cmd->add_subcommand("split", "Two-cluster splitting difference");
    double mf_n = 100.0, mf_j = 0.0;
    std::vector<std::string> cluster_paths;
    std::size_t cluster_index = 0;
    for (auto* sub : {mf_energy, mf_gradient, mf_split}) {
        sub->add_option("--n", mf_n, "background scale N");
        sub->add_option("--j", mf_j, "mobile charge J (default N)");
        sub->add_option("--cluster", cluster_paths, "cluster JSON file (repeatable)")
            ->required();
        sub->add_option("--out", out_path, "output path (default stdout)");
    }
    mf_gradient->add_option("--cluster-index", cluster_index, "cluster to differentiate");

    // ---- freeenergy
    auto* fe_cmd = app.add_subcommand("freeenergy", "Exact and asymptotic free energies");
    auto* fe_exact = fe_cmd->add_subcommand("exact", "Exact log Z for J particles");
    auto* fe_asym = fe_cmd->add_subcommand("asymptotic", "Asymptotic -log Z series");
    auto* fe_pinned = fe_cmd->add_subcommand("pinned", "Pinned-charge exact formula");
    auto* fe_pred = fe_cmd->add_subcommand("prediction", "Multi-hole prediction terms");
    long long fe_particles = 100;
    double fe_n = 100.0;
    std::string fe_mode = "finite";
    std::vector<double> fe_c_list;
    for (auto* sub : {fe_exact, fe_asym, fe_pinned, fe_pred}) {
        sub->add_option("--n", fe_n, "background scale N");
        sub->add_option("--out", out_path, "output path (default stdout)");
    }
    fe_exact->add_option("--particles", fe_particles, "particle count J")->required();
    fe_asym->add_option("--particles", fe_particles, "particle count J")->required();
    fe_pinned->add_option("--cluster", cluster_paths, "cluster JSON file (repeatable)")
        ->required();
    fe_pinned->add_option("--mode", fe_mode, "finite | infinite");
    fe_pred->add_option("--c-list", fe_c_list, "per-cluster charge fractions")->required();

    // ---- experiment
    auto* exp_cmd = app.add_subcommand("experiment", "Convergence experiments");
    std::vector<CLI::App*> exp_subs;
    for (const char* name : {"translate", "rotate", "decouple", "multihole"}) {
        auto* sub = exp_cmd->add_subcommand(name, std::string("run the ") + name + " sweep");
        sub->add_option("--config", config_path, "experiment config JSON");
        sub->add_option("--seed", seed, "RNG seed override");
        sub->add_option("--out", out_path, "output path (default stdout)");
        sub->add_option("--format", format, "csv | json");
        exp_subs.push_back(sub);
    }

    // ---- oracle
    auto* or_cmd = app.add_subcommand("oracle", "Independent verification oracles");
    auto* or_battery = or_cmd->add_subcommand("battery", "Run the fixture battery");
    auto* or_mcp = or_cmd->add_subcommand("mc-partition", "Monte Carlo partition estimate");
    auto* or_mcc = or_cmd->add_subcommand("mc-coulomb", "Monte Carlo Coulomb energy");
    int mc_particles = 2;
    double or_n = 1.0, radius_a = 1.0, radius_b = 1.0, sep = 0.0;
    std::uint64_t samples = 1000000ULL;
    for (auto* sub : {or_battery, or_mcp, or_mcc}) {
        sub->add_option("--config", config_path, "config JSON");
        sub->add_option("--seed", seed, "RNG seed");
        sub->add_option("--samples", samples, "sample count");
        sub->add_option("--out", out_path, "output path (default stdout)");
    }
    or_mcp->add_option("--particles", mc_particles, "mobile particle count (<= 4)");
    or_mcp->add_option("--n", or_n, "background scale N");
    or_mcp->add_option("--cluster", cluster_paths, "pinned cluster JSON (repeatable)");
    or_mcc->add_option("--radius-a", radius_a);
    or_mcc->add_option("--radius-b", radius_b);
    or_mcc->add_option("--separation", sep, "distance between disk centers");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return ocp::kExitInvalidConfig;
    }

    if (kernel_eval->parsed()) {
        ocp::BackgroundScale scale(kn);
        ocp::GinibreKernel k = korder < 0 ? ocp::GinibreKernel::infinite(scale)
                                          : ocp::GinibreKernel::for_particles(scale, korder);
        ocp::PhaseValue v = ocp::eval(k, {zre, zim}, {wre, wim});
        auto z = v.to_complex();
        emit(json{{"log_mag", v.log_mag}, {"phase", v.phase}, {"re", z.real()}, {"im", z.imag()}}
                 .dump(2) +
                 "\n",
             out_path);
        return 0;
    }

    if (mf_energy->parsed() || mf_gradient->parsed() || mf_split->parsed()) {
        ocp::BackgroundScale scale(mf_n);
        if (mf_j <= 0.0) mf_j = mf_n;
        auto clusters = load_clusters(cluster_paths);
        if (mf_split->parsed()) {
            if (clusters.size() != 2) throw ocp::Error("split needs exactly two clusters");
            double d = ocp::emf_split_difference(scale, clusters[0], clusters[1], mf_j);
            emit(json{{"split_difference", d}}.dump(2) + "\n", out_path);
            return 0;
        }
        auto problem = ocp::MeanFieldProblem::make(scale, mf_j, clusters);
        if (mf_gradient->parsed()) {
            auto g = ocp::emf_gradient(problem, cluster_index);
            emit(json{{"gradient", {g.real(), g.imag()}}}.dump(2) + "\n", out_path);
            return 0;
        }
        auto r = ocp::emf_energy(problem);
        emit(json{{"energy", r.energy},
                  {"c_r", r.c_r},
                  {"droplet_radius", r.droplet_radius},
                  {"disk_self", r.disk_self},
                  {"disk_hole_cross", r.disk_hole_cross},
                  {"hole_self", r.hole_self},
                  {"hole_hole_cross", r.hole_hole_cross},
                  {"d_total", r.d_total}}
                 .dump(2) +
                 "\n",
             out_path);
        return 0;
    }

    if (fe_exact->parsed()) {
        emit(json{{"log_z", ocp::ginibre_log_z_exact(fe_particles, fe_n)}}.dump(2) + "\n",
             out_path);
        return 0;
    }
    if (fe_asym->parsed()) {
        auto a = ocp::ginibre_log_z_asymptotic(fe_particles, fe_n);
        emit(json{{"minus_log_z", a.value},
                  {"mismatch_term", a.mismatch_term},
                  {"coeff_n2", a.series.coeff_n2},
                  {"coeff_nlogn", a.series.coeff_nlogn},
                  {"coeff_n", a.series.coeff_n},
                  {"coeff_sqrtn", a.series.coeff_sqrtn},
                  {"coeff_logn", a.series.coeff_logn},
                  {"coeff_const", a.series.coeff_const},
                  {"remainder_order", a.series.remainder_order}}
                 .dump(2) +
                 "\n",
             out_path);
        return 0;
    }
    if (fe_pinned->parsed()) {
        ocp::KernelMode mode =
            fe_mode == "infinite" ? ocp::KernelMode::infinite : ocp::KernelMode::finite;
        auto clusters = load_clusters(cluster_paths);
        auto rep = ocp::log_z_pinned(clusters, ocp::BackgroundScale(fe_n), mode);
        emit(json{{"log_z", rep.log_z.log_mag},
                  {"f", rep.f},
                  {"ginibre_part", rep.ginibre_part},
                  {"hamiltonian_part", rep.hamiltonian_part},
                  {"a_mn_part", rep.a_mn_part},
                  {"logdet", rep.logdet.log_mag},
                  {"logdet_sign", rep.logdet.sign},
                  {"mode", fe_mode}}
                 .dump(2) +
                 "\n",
             out_path);
        return 0;
    }
    if (fe_pred->parsed()) {
        double c_total = 0.0;
        for (double c : fe_c_list) c_total += c;
        auto p = ocp::multihole_prediction(fe_n, c_total, fe_c_list);
        emit(json{{"nlogn_term", p.nlogn_term},
                  {"n_term", p.n_term},
                  {"logn_term", p.logn_term},
                  {"zeta_term", p.zeta_term},
                  {"log2pi_term", p.log2pi_term},
                  {"charge_term", p.charge_term},
                  {"total", p.total}}
                 .dump(2) +
                 "\n",
             out_path);
        return 0;
    }

    for (auto* sub : exp_subs) {
        if (!sub->parsed()) continue;
        ocp::ExperimentConfig cfg;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ocp::Error("cannot open config " + config_path);
            json j;
            in >> j;
            cfg = ocp::parse_experiment_config(j);
        } else if (sub->get_name() == "multihole") {
            // the multihole comparison needs at least two clusters
            cfg.c_list = {0.01, 0.01};
            cfg.centers = {{0.35, 0.0}, {-0.35, 0.0}};
        }
        cfg.experiment = sub->get_name();
        if (sub->count("--seed")) cfg.seed = seed;
        if (sub->count("--format")) cfg.format = format;
        auto res = ocp::run_experiment(cfg);
        if (!res.message.empty()) std::cerr << res.message << "\n";
        emit(res.output, out_path);
        return res.exit_code;
    }

    if (or_battery->parsed()) {
        ocp::ExperimentConfig cfg;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ocp::Error("cannot open config " + config_path);
            json j;
            in >> j;
            cfg = ocp::parse_experiment_config(j);
        }
        cfg.experiment = "oracle-battery";
        if (or_battery->count("--seed")) cfg.seed = seed;
        if (or_battery->count("--samples")) cfg.samples = samples;
        auto res = ocp::run_oracle_battery(cfg);
        if (!res.message.empty()) std::cerr << res.message << "\n";
        emit(res.output, out_path);
        return res.exit_code;
    }
    if (or_mcp->parsed()) {
        auto est = ocp::mc_partition(mc_particles, load_clusters(cluster_paths),
                                     ocp::BackgroundScale(or_n), samples, seed);
        emit(mc_to_json(est).dump(2) + "\n", out_path);
        return 0;
    }
    if (or_mcc->parsed()) {
        ocp::Disk a{ocp::Complex(0.0), radius_a};
        ocp::Disk b{ocp::Complex(sep, 0.0), radius_b};
        auto est = ocp::mc_coulomb(a, b, samples, seed);
        emit(mc_to_json(est).dump(2) + "\n", out_path);
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ocp::VarianceExplosionError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return ocp::kExitNumericalFailure;
    } catch (const ocp::Error& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return ocp::kExitInvalidConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ocp::kExitNumericalFailure;
    }
}

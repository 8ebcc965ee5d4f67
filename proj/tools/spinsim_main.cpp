// spinsim: mean-field simulator and fitting toolkit for cavity-mediated
// collective spin dynamics. See README.md for the config schema.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>

#include <CLI11.hpp>
#include <json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "spinsim/config.hpp"
#include "spinsim/constants.hpp"
#include "spinsim/errors.hpp"
#include "spinsim/experiments.hpp"
#include "spinsim/table.hpp"

using namespace spinsim;
using nlohmann::json;

namespace {

struct Cli {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<double> tol;
};

std::string out_path(const RunConfig& c, const std::string& name) {
    return (std::filesystem::path(c.output_dir) / name).string();
}

void write_report(const RunConfig& c, const json& body) {
    std::ofstream out(out_path(c, "report.json"));
    out << body.dump(2) << "\n";
}

json fit_to_json(const FitResult& f) {
    json j = {{"model", f.model_id},
              {"converged", f.converged},
              {"residual_norm", f.residual_norm},
              {"iterations", f.n_iterations},
              {"flags", f.flags}};
    for (std::size_t i = 0; i < f.params.size(); ++i) {
        json p = {{"value", f.params[i]}, {"sigma", f.sigma[i]}};
        j["params"].push_back(p);
    }
    return j;
}

double default_t_max(const DerivedRates& r) {
    if (!(r.gamma_c > 0.0))
        throw ConfigError("superradiance: gamma_c = 0, give an explicit t_max_s");
    return 10.0 * 4.0 / (constants::two_pi * r.gamma_c); // 10 collective lifetimes
}

// --- experiment drivers -----------------------------------------------------

void run_params_cmd(const RunConfig& c, RunManifest& man) {
    const DerivedRates r = derive_rates(c.params);
    std::printf("chi_hz              %.6g\n", r.chi);
    std::printf("gamma_sr_single_hz  %.6g\n", r.gamma_sr_single);
    std::printf("chi_n_hz            %.6g\n", r.chi_n);
    std::printf("gamma_c_hz          %.6g\n", r.gamma_c);
    std::printf("gap_hz              %.6g\n", r.gap);
    std::printf("g_coll_hz           %.6g\n", r.g_coll);
    write_report(c, man.to_json()["derived_rates"]);
}

void run_superradiance_cmd(const RunConfig& c, RunManifest& man) {
    const DerivedRates r = derive_rates(c.params);
    const double t_max = c.t_max > 0.0 ? c.t_max : default_t_max(r);
    std::vector<double> grid(c.n_samples);
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = t_max * static_cast<double>(i) / (grid.size() - 1);
    TimeTrace trace = run_superradiance(c.params, c.theta, t_max, grid, c.theta_floor,
                                        c.integrator);
    if (auto it = trace.metadata.find("warning"); it != trace.metadata.end())
        man.warnings.push_back(it->second);
    Table t = table_from_trace(trace);
    t.comments.insert(t.comments.begin(), "columns: time_s [s], intensity [model units, "
                                          "2*pi*gamma_sr*(n0^2/4)*|s+|^2], s_z [1], s_plus_abs2 [1]");
    t.write(out_path(c, "trace.csv"));

    json rep = {{"t_max_s", t_max}, {"theta_rad", c.theta}};
    // burst fit is meaningful above the equator; report it when it applies
    if (c.theta > constants::pi / 2.0) {
        const Sech2Fit burst =
            fit_sech2_burst(trace.times, trace.columns.at("intensity"));
        rep["burst_fit"] = fit_to_json(burst.fit);
        rep["gamma_c_fit_hz"] = burst.gamma_c;
        rep["t_d_fit_s"] = burst.t_d;
    }
    write_report(c, rep);
}

void run_oat_cmd(const RunConfig& c, RunManifest& man) {
    OatOptions opt;
    opt.integrator = c.integrator;
    if (c.lineshape.fwhm > 0.0)
        opt.offsets = sample_offsets(c.lineshape, c.n_groups, c.strategy, c.seed);
    const PhaseScan scan = run_oat(c.params, c.theta, c.tau, default_phase_grid(c.n_phase), opt);
    if (auto it = scan.metadata.find("warning"); it != scan.metadata.end())
        man.warnings.push_back(it->second);
    Table t = table_from_phase_scan(scan);
    t.comments.insert(t.comments.begin(), "columns: phi_rad [rad], p_up [1]");
    t.write(out_path(c, "phase_scan.csv"));
    write_report(c, {{"delta_phi_rad", scan.delta_phi},
                     {"delta_phi_sigma_rad", scan.delta_phi_sigma},
                     {"raw_phase_shift_rad", scan.raw_phase_shift},
                     {"contrast", scan.contrast},
                     {"flags", scan.flags}});
}

json ramsey_report(const TimeTrace& trace) {
    const ExponentialFamilyFit f = ramsey_t2star(trace);
    return {{"t2_star_s", f.t_1e},
            {"model", f.fit.model_id},
            {"double_selected", f.double_selected},
            {"T_fast_s", f.T_fast},
            {"T_slow_s", f.T_slow},
            {"aicc_single", f.aicc_single},
            {"aicc_double", f.aicc_double},
            {"fit", fit_to_json(f.fit)}};
}

void run_ramsey_cmd(const RunConfig& c, RunManifest& man) {
    RamseyOptions opt;
    opt.strategy = c.strategy;
    opt.seed = c.seed;
    opt.integrator = c.integrator;
    const std::vector<double> grid =
        default_ramsey_tau_grid(c.tau_min, c.tau_max, c.points_per_decade);
    TimeTrace trace = run_ramsey(c.params, c.lineshape, c.n_groups, grid, opt);
    if (auto it = trace.metadata.find("warning"); it != trace.metadata.end())
        man.warnings.push_back(it->second);
    Table t = table_from_trace(trace);
    t.comments.insert(t.comments.begin(), "columns: time_s [s], coherence [1], s_z [1]");
    t.write(out_path(c, "coherence.csv"));
    write_report(c, ramsey_report(trace));
}

void run_s21_cmd(const RunConfig& c, RunManifest&) {
    std::vector<double> freq(c.n_freq);
    for (std::size_t i = 0; i < freq.size(); ++i)
        freq[i] = c.f_min + (c.f_max - c.f_min) * static_cast<double>(i) / (freq.size() - 1);
    std::vector<cplx> spec = s21_model(freq, c.params, c.omega_c, c.omega_s);

    if (c.noise_snr_db > 0.0) {
        // additive complex Gaussian noise relative to the peak magnitude
        double peak = 0.0;
        for (const auto& v : spec) peak = std::max(peak, std::abs(v));
        const double sigma = peak * std::pow(10.0, -c.noise_snr_db / 20.0) / std::sqrt(2.0);
        std::mt19937_64 rng(c.seed);
        std::normal_distribution<double> n(0.0, sigma);
        for (auto& v : spec) v += cplx{n(rng), n(rng)};
    }

    Table t;
    t.comments.push_back("columns: freq_hz [Hz], s21_re [1], s21_im [1], s21_abs [1]");
    std::vector<double> re(freq.size()), im(freq.size()), mag(freq.size());
    for (std::size_t i = 0; i < freq.size(); ++i) {
        re[i] = spec[i].real();
        im[i] = spec[i].imag();
        mag[i] = std::abs(spec[i]);
    }
    t.add_column("freq_hz", freq);
    t.add_column("s21_re", re);
    t.add_column("s21_im", im);
    t.add_column("s21_abs", mag);
    t.write(out_path(c, "s21.csv"));

    if (c.s21_mode == "fit") {
        const DerivedRates r = derive_rates(c.params);
        const S21FitResult f =
            fit_s21(freq, spec, c.params.kappa, c.omega_c, c.omega_s,
                    r.g_coll > 0.0 ? 0.8 * r.g_coll : c.params.kappa,
                    c.params.gamma_inh > 0.0 ? c.params.gamma_inh : c.params.kappa / 100.0);
        write_report(c, {{"g_coll_hz", f.g_coll},
                         {"g_coll_sigma_hz", f.g_coll_sigma},
                         {"gamma_inh_hz", f.gamma_inh},
                         {"gamma_inh_sigma_hz", f.gamma_inh_sigma},
                         {"n0_from_coupling",
                          c.params.g > 0.0 ? n0_from_coupling(f.g_coll, c.params.g) : 0.0},
                         {"feature_found", f.feature_found},
                         {"fit", fit_to_json(f.fit)}});
    } else {
        write_report(c, {{"mode", "model"}, {"n_points", c.n_freq}});
    }
}

void run_sweep_cmd(const RunConfig& c, RunManifest& man) {
    json summary = json::array();
    char name[64];
    if (c.sweep_variable == "chi_n") {
        // one Ramsey run per collective interaction rate; g adjusted at fixed n0
        RamseyOptions opt;
        opt.strategy = c.strategy;
        opt.seed = c.seed;
        opt.integrator = c.integrator;
        const std::vector<double> grid =
            default_ramsey_tau_grid(c.tau_min, c.tau_max, c.points_per_decade);
        for (std::size_t i = 0; i < c.grid.size(); ++i) {
            PhysicalParams p = c.params;
            const double g_coll = g_coll_for_chi_n(c.grid[i], p.delta, p.kappa);
            p.g = g_coll / std::sqrt(p.n0);
            TimeTrace trace = run_ramsey(p, c.lineshape, c.n_groups, grid, opt);
            std::snprintf(name, sizeof name, "coherence_%03zu.csv", i);
            table_from_trace(trace).write(out_path(c, name));
            json rep = ramsey_report(trace);
            rep["chi_n_hz"] = c.grid[i];
            summary.push_back(rep);
        }
    } else if (c.sweep_variable == "theta") {
        const DerivedRates r = derive_rates(c.params);
        const double t_max = c.t_max > 0.0 ? c.t_max : default_t_max(r);
        std::vector<double> grid(c.n_samples);
        for (std::size_t i = 0; i < grid.size(); ++i)
            grid[i] = t_max * static_cast<double>(i) / (grid.size() - 1);
        for (std::size_t i = 0; i < c.grid.size(); ++i) {
            TimeTrace trace = run_superradiance(c.params, c.grid[i], t_max, grid,
                                                c.theta_floor, c.integrator);
            std::snprintf(name, sizeof name, "trace_%03zu.csv", i);
            table_from_trace(trace).write(out_path(c, name));
            const auto& inten = trace.columns.at("intensity");
            summary.push_back({{"theta_rad", c.grid[i]},
                               {"peak_intensity", *std::max_element(inten.begin(), inten.end())}});
        }
    } else if (c.sweep_variable == "tau") {
        OatOptions opt;
        opt.integrator = c.integrator;
        if (c.lineshape.fwhm > 0.0)
            opt.offsets = sample_offsets(c.lineshape, c.n_groups, c.strategy, c.seed);
        const OatScanResult scan =
            oat_tau_scan(c.params, c.theta, c.grid, default_phase_grid(c.n_phase), opt);
        Table t;
        t.comments.push_back("columns: tau_s [s], delta_phi_rad [rad], sigma_rad [rad]");
        t.add_column("tau_s", scan.grid);
        t.add_column("delta_phi_rad", scan.delta_phi);
        t.add_column("sigma_rad", scan.sigma);
        t.write(out_path(c, "oat_scan.csv"));
        summary.push_back({{"chi_n_fit_hz", scan.chi_n_fit},
                           {"chi_n_fit_sigma_hz", scan.chi_n_fit_sigma},
                           {"slope_rad_per_s", scan.line.slope},
                           {"intercept_rad", scan.line.intercept},
                           {"intercept_sigma_rad", scan.line.intercept_sigma}});
    } else { // n0
        OatOptions opt;
        opt.integrator = c.integrator;
        if (c.lineshape.fwhm > 0.0)
            opt.offsets = sample_offsets(c.lineshape, c.n_groups, c.strategy, c.seed);
        const OatScanResult scan = oat_n0_scan(c.params, c.theta, c.tau, c.grid,
                                               default_phase_grid(c.n_phase), opt);
        Table t;
        t.comments.push_back("columns: n0 [1], delta_phi_rad [rad], sigma_rad [rad]");
        t.add_column("n0", scan.grid);
        t.add_column("delta_phi_rad", scan.delta_phi);
        t.add_column("sigma_rad", scan.sigma);
        t.write(out_path(c, "oat_scan.csv"));
        summary.push_back({{"chi_fit_hz_per_spin", scan.chi_n_fit},
                           {"chi_fit_sigma", scan.chi_n_fit_sigma},
                           {"intercept_hz", scan.line.intercept},
                           {"intercept_sigma_hz", scan.line.intercept_sigma}});
    }
    (void)man;
    write_report(c, {{"variable", c.sweep_variable}, {"results", summary}});
}

int run_one(const std::string& subcommand, const Cli& cli) {
    RunConfig c = parse_config(cli.config_path);
    if (to_string(c.experiment) != subcommand)
        throw ConfigError("config experiment '" + to_string(c.experiment) +
                          "' does not match subcommand '" + subcommand + "'");
    if (!cli.out_dir.empty()) c.output_dir = cli.out_dir;
    if (cli.seed) c.seed = *cli.seed;
    if (cli.tol) {
        c.integrator.rel_tol = *cli.tol;
        c.integrator.abs_tol = *cli.tol * 1e-2;
    }
    c.validate();
#ifdef _OPENMP
    if (cli.threads) omp_set_num_threads(std::max(1, *cli.threads));
#endif
    std::filesystem::create_directories(c.output_dir);

    RunManifest man;
    man.config = config_to_json(c);
    man.tool_version = tool_version_string;
    const auto start = std::chrono::steady_clock::now();
    try {
        if (c.experiment != ExperimentKind::Params) man.rates = derive_rates(c.params);
        switch (c.experiment) {
            case ExperimentKind::Params: run_params_cmd(c, man); break;
            case ExperimentKind::Superradiance: run_superradiance_cmd(c, man); break;
            case ExperimentKind::Oat: run_oat_cmd(c, man); break;
            case ExperimentKind::Ramsey: run_ramsey_cmd(c, man); break;
            case ExperimentKind::S21: run_s21_cmd(c, man); break;
            case ExperimentKind::Sweep: run_sweep_cmd(c, man); break;
        }
        man.success = true;
    } catch (const std::exception& e) {
        man.success = false;
        man.error = e.what();
        man.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        man.write(out_path(c, "manifest.json"));
        throw;
    }
    man.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    man.write(out_path(c, "manifest.json"));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mean-field simulator for cavity-mediated collective spin dynamics"};
    app.require_subcommand(1);

    Cli cli;
    std::string chosen;
    for (const char* name :
         {"params", "superradiance", "oat", "ramsey", "s21", "sweep"}) {
        CLI::App* sub = app.add_subcommand(name, name);
        sub->add_option("--config", cli.config_path, "JSON config file")->required();
        sub->add_option("--out", cli.out_dir, "output directory (overrides config)");
        sub->add_option("--seed", cli.seed, "RNG seed (overrides config)");
        sub->add_option("--threads", cli.threads, "cap OpenMP parallelism");
        sub->add_option("--tol", cli.tol, "integrator relative tolerance");
        sub->callback([&cli, name, &chosen]() { chosen = name; });
    }

    try {
        app.parse(argc, argv);
        return run_one(chosen, cli);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure at t = %g: %s\n", e.t_failure, e.what());
        return 3;
    } catch (const FitError& e) {
        std::fprintf(stderr, "fit error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

#include "spinsim/config.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "spinsim/constants.hpp"
#include "spinsim/errors.hpp"

namespace spinsim {

using nlohmann::json;

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Params: return "params";
        case ExperimentKind::Superradiance: return "superradiance";
        case ExperimentKind::Oat: return "oat";
        case ExperimentKind::Ramsey: return "ramsey";
        case ExperimentKind::S21: return "s21";
        case ExperimentKind::Sweep: return "sweep";
    }
    return "?";
}

ExperimentKind experiment_from_string(const std::string& s) {
    if (s == "params") return ExperimentKind::Params;
    if (s == "superradiance") return ExperimentKind::Superradiance;
    if (s == "oat") return ExperimentKind::Oat;
    if (s == "ramsey") return ExperimentKind::Ramsey;
    if (s == "s21") return ExperimentKind::S21;
    if (s == "sweep") return ExperimentKind::Sweep;
    throw ConfigError("config: unknown experiment kind '" + s + "'");
}

namespace {

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) {
                ok = true;
                break;
            }
        if (!ok)
            throw ConfigError("config: unknown key '" + path + key + "'");
    }
}

double num(const json& j, const std::string& path, const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_number())
        throw ConfigError("config: '" + path + key + "' must be a number");
    return v.get<double>();
}

std::uint64_t uint_of(const json& j, const std::string& path, const char* key,
                      std::uint64_t dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw ConfigError("config: '" + path + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

std::string str_of(const json& j, const std::string& path, const char* key,
                   const std::string& dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_string())
        throw ConfigError("config: '" + path + key + "' must be a string");
    return v.get<std::string>();
}

std::vector<double> num_list(const json& j, const std::string& path, const char* key) {
    std::vector<double> out;
    if (!j.contains(key)) return out;
    const json& v = j.at(key);
    if (!v.is_array())
        throw ConfigError("config: '" + path + key + "' must be an array of numbers");
    for (const auto& e : v) {
        if (!e.is_number())
            throw ConfigError("config: '" + path + key + "' must be an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

} // namespace

RunConfig parse_config_json(const json& j, const std::string& origin) {
    if (!j.is_object()) throw ConfigError("config " + origin + ": root must be an object");
    check_keys(j, "", {"experiment", "params", "lineshape", "integrator", "seed", "output_dir",
                       "n_groups", "strategy", "superradiance", "oat", "ramsey", "s21", "sweep"});

    RunConfig c;
    if (!j.contains("experiment"))
        throw ConfigError("config: missing required key 'experiment'");
    c.experiment = experiment_from_string(str_of(j, "", "experiment", ""));

    // params: g_coll_hz is an alternative to g_hz; n0 defaults to 1e8
    {
        const json p = j.value("params", json::object());
        check_keys(p, "params.", {"g_hz", "g_coll_hz", "kappa_hz", "delta_hz", "gamma_inh_hz",
                                  "gamma_2_hz", "n0", "kappa_out_hz"});
        if (!p.contains("kappa_hz"))
            throw ConfigError("config: missing required key 'params.kappa_hz'");
        c.params.kappa = num(p, "params.", "kappa_hz", 0.0);
        c.params.delta = num(p, "params.", "delta_hz", 0.0);
        c.params.gamma_inh = num(p, "params.", "gamma_inh_hz", 0.0);
        c.params.gamma_2 = num(p, "params.", "gamma_2_hz", default_gamma_2());
        c.params.n0 = num(p, "params.", "n0", 1e8);
        c.params.kappa_out = num(p, "params.", "kappa_out_hz", c.params.kappa / 2.0);
        const bool has_g = p.contains("g_hz"), has_gc = p.contains("g_coll_hz");
        if (has_g && has_gc)
            throw ConfigError("config: give either 'params.g_hz' or 'params.g_coll_hz', not both");
        if (has_gc) {
            if (!(c.params.n0 > 0.0))
                throw ConfigError("config: 'params.g_coll_hz' needs n0 > 0");
            c.params.g = num(p, "params.", "g_coll_hz", 0.0) / std::sqrt(c.params.n0);
            c.g_from_coll = true;
        } else {
            c.params.g = num(p, "params.", "g_hz", 0.0);
        }
    }

    {
        const json l = j.value("lineshape", json::object());
        check_keys(l, "lineshape.", {"kind", "fwhm_hz", "lorentzian_fraction"});
        const std::string kind = str_of(l, "lineshape.", "kind", "gaussian");
        if (kind == "gaussian")
            c.lineshape.kind = LineKind::Gaussian;
        else if (kind == "lorentzian")
            c.lineshape.kind = LineKind::Lorentzian;
        else if (kind == "pseudo_voigt")
            c.lineshape.kind = LineKind::PseudoVoigt;
        else
            throw ConfigError("config: 'lineshape.kind' must be gaussian|lorentzian|pseudo_voigt");
        c.lineshape.fwhm = num(l, "lineshape.", "fwhm_hz", c.params.gamma_inh);
        c.lineshape.lorentzian_fraction = num(l, "lineshape.", "lorentzian_fraction", 0.0);
    }

    {
        const json i = j.value("integrator", json::object());
        check_keys(i, "integrator.", {"rel_tol", "abs_tol", "max_steps"});
        c.integrator.rel_tol = num(i, "integrator.", "rel_tol", c.integrator.rel_tol);
        c.integrator.abs_tol = num(i, "integrator.", "abs_tol", c.integrator.abs_tol);
        c.integrator.max_steps = static_cast<long>(uint_of(
            i, "integrator.", "max_steps", static_cast<std::uint64_t>(c.integrator.max_steps)));
    }

    c.seed = uint_of(j, "", "seed", 1);
    c.output_dir = str_of(j, "", "output_dir", ".");
    c.n_groups = uint_of(j, "", "n_groups", 10000);
    const std::string strat = str_of(j, "", "strategy", "quantile");
    if (strat == "quantile")
        c.strategy = OffsetStrategy::Quantile;
    else if (strat == "random")
        c.strategy = OffsetStrategy::Random;
    else
        throw ConfigError("config: 'strategy' must be quantile|random");

    {
        const json s = j.value("superradiance", json::object());
        check_keys(s, "superradiance.", {"theta_rad", "t_max_s", "theta_floor_rad", "n_samples"});
        c.theta = num(s, "superradiance.", "theta_rad", constants::pi / 2.0);
        c.theta_floor = num(s, "superradiance.", "theta_floor_rad", 1e-3);
        c.t_max = num(s, "superradiance.", "t_max_s", 0.0);
        c.n_samples = uint_of(s, "superradiance.", "n_samples", 501);
    }
    {
        const json o = j.value("oat", json::object());
        check_keys(o, "oat.", {"theta_rad", "tau_s", "n_phase"});
        if (c.experiment == ExperimentKind::Oat) {
            c.theta = num(o, "oat.", "theta_rad", c.theta);
            c.tau = num(o, "oat.", "tau_s", 0.0);
        }
        c.n_phase = uint_of(o, "oat.", "n_phase", 24);
    }
    {
        const json r = j.value("ramsey", json::object());
        check_keys(r, "ramsey.", {"tau_min_s", "tau_max_s", "points_per_decade"});
        c.tau_min = num(r, "ramsey.", "tau_min_s", 1e-6);
        c.tau_max = num(r, "ramsey.", "tau_max_s", 1e-2);
        c.points_per_decade = uint_of(r, "ramsey.", "points_per_decade", 40);
    }
    {
        const json s = j.value("s21", json::object());
        check_keys(s, "s21.", {"mode", "omega_c_hz", "omega_s_hz", "f_min_hz", "f_max_hz",
                               "n_points", "noise_snr_db"});
        c.s21_mode = str_of(s, "s21.", "mode", "model");
        if (c.s21_mode != "model" && c.s21_mode != "fit")
            throw ConfigError("config: 's21.mode' must be model|fit");
        c.omega_c = num(s, "s21.", "omega_c_hz", 0.0);
        c.omega_s = num(s, "s21.", "omega_s_hz", c.omega_c - c.params.delta);
        c.f_min = num(s, "s21.", "f_min_hz", 0.0);
        c.f_max = num(s, "s21.", "f_max_hz", 0.0);
        c.n_freq = uint_of(s, "s21.", "n_points", 2001);
        c.noise_snr_db = num(s, "s21.", "noise_snr_db", 0.0);
    }
    {
        const json s = j.value("sweep", json::object());
        check_keys(s, "sweep.", {"variable", "values"});
        c.sweep_variable = str_of(s, "sweep.", "variable", "");
        c.grid = num_list(s, "sweep.", "values");
    }

    c.validate();
    return c;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    return parse_config_json(j, path);
}

void RunConfig::validate() const {
    params.validate();
    if (integrator.rel_tol <= 0.0 || integrator.abs_tol <= 0.0)
        throw ConfigError("config: integrator tolerances must be positive");
    switch (experiment) {
        case ExperimentKind::Params:
            break;
        case ExperimentKind::Superradiance:
            if (!(theta > 0.0))
                throw ConfigError("config: 'superradiance.theta_rad' must be > 0");
            break;
        case ExperimentKind::Oat:
            if (!(tau > 0.0))
                throw ConfigError("config: 'oat.tau_s' must be > 0");
            if (n_phase < 8)
                throw ConfigError("config: 'oat.n_phase' must be >= 8");
            break;
        case ExperimentKind::Ramsey:
            if (n_groups < 100)
                throw ConfigError("config: 'n_groups' must be >= 100 for ramsey");
            if (!(tau_max > tau_min && tau_min > 0.0))
                throw ConfigError("config: ramsey tau range must satisfy 0 < tau_min < tau_max");
            if (!(lineshape.fwhm > 0.0))
                throw ConfigError("config: ramsey needs 'lineshape.fwhm_hz' > 0");
            break;
        case ExperimentKind::S21:
            if (!(f_max > f_min))
                throw ConfigError("config: 's21.f_max_hz' must exceed 's21.f_min_hz'");
            if (n_freq < 8)
                throw ConfigError("config: 's21.n_points' must be >= 8");
            break;
        case ExperimentKind::Sweep:
            if (grid.empty())
                throw ConfigError("config: 'sweep.values' must be a non-empty grid");
            if (sweep_variable != "theta" && sweep_variable != "tau" && sweep_variable != "n0" &&
                sweep_variable != "chi_n")
                throw ConfigError("config: 'sweep.variable' must be theta|tau|n0|chi_n");
            break;
    }
}

json config_to_json(const RunConfig& c) {
    json p = {{"g_hz", c.params.g},          {"kappa_hz", c.params.kappa},
              {"delta_hz", c.params.delta},  {"gamma_inh_hz", c.params.gamma_inh},
              {"gamma_2_hz", c.params.gamma_2}, {"n0", c.params.n0},
              {"kappa_out_hz", c.params.kappa_out}};
    json l = {{"kind", c.lineshape.kind == LineKind::Gaussian     ? "gaussian"
                       : c.lineshape.kind == LineKind::Lorentzian ? "lorentzian"
                                                                  : "pseudo_voigt"},
              {"fwhm_hz", c.lineshape.fwhm},
              {"lorentzian_fraction", c.lineshape.lorentzian_fraction}};
    json j = {{"experiment", to_string(c.experiment)},
              {"params", p},
              {"lineshape", l},
              {"integrator",
               {{"rel_tol", c.integrator.rel_tol},
                {"abs_tol", c.integrator.abs_tol},
                {"max_steps", c.integrator.max_steps}}},
              {"seed", c.seed},
              {"output_dir", c.output_dir},
              {"n_groups", c.n_groups},
              {"strategy", c.strategy == OffsetStrategy::Quantile ? "quantile" : "random"}};
    switch (c.experiment) {
        case ExperimentKind::Superradiance:
            j["superradiance"] = {{"theta_rad", c.theta},
                                  {"t_max_s", c.t_max},
                                  {"theta_floor_rad", c.theta_floor},
                                  {"n_samples", c.n_samples}};
            break;
        case ExperimentKind::Oat:
            j["oat"] = {{"theta_rad", c.theta}, {"tau_s", c.tau}, {"n_phase", c.n_phase}};
            break;
        case ExperimentKind::Ramsey:
            j["ramsey"] = {{"tau_min_s", c.tau_min},
                           {"tau_max_s", c.tau_max},
                           {"points_per_decade", c.points_per_decade}};
            break;
        case ExperimentKind::S21:
            j["s21"] = {{"mode", c.s21_mode},     {"omega_c_hz", c.omega_c},
                        {"omega_s_hz", c.omega_s}, {"f_min_hz", c.f_min},
                        {"f_max_hz", c.f_max},     {"n_points", c.n_freq},
                        {"noise_snr_db", c.noise_snr_db}};
            break;
        case ExperimentKind::Sweep:
            j["sweep"] = {{"variable", c.sweep_variable}, {"values", c.grid}};
            break;
        default:
            break;
    }
    return j;
}

json RunManifest::to_json() const {
    return {{"config", config},
            {"derived_rates",
             {{"chi_hz", rates.chi},
              {"gamma_sr_single_hz", rates.gamma_sr_single},
              {"chi_n_hz", rates.chi_n},
              {"gamma_c_hz", rates.gamma_c},
              {"gap_hz", rates.gap},
              {"g_coll_hz", rates.g_coll}}},
            {"tool_version", tool_version},
            {"wall_seconds", wall_seconds},
            {"warnings", warnings},
            {"success", success},
            {"error", error}};
}

void RunManifest::write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("manifest: cannot write '" + path + "'");
    out << to_json().dump(2) << "\n";
}

} // namespace spinsim

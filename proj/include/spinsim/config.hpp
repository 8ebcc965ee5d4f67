#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinsim/lineshape.hpp"
#include "spinsim/params.hpp"
#include "spinsim/radau.hpp"

namespace spinsim {

enum class ExperimentKind { Params, Superradiance, Oat, Ramsey, S21, Sweep };

std::string to_string(ExperimentKind k);
ExperimentKind experiment_from_string(const std::string& s);

// All frequencies in config files are ordinary frequencies in Hz and carry a
// _hz key suffix. Unknown keys anywhere are errors (reported with key path).
// Defaults live in apply_defaults() and nowhere else.
struct RunConfig {
    ExperimentKind experiment = ExperimentKind::Params;

    PhysicalParams params;
    bool g_from_coll = false; // g derived from g_coll_hz and n0

    Lineshape lineshape{LineKind::Gaussian, 0.0, 0.0};
    OffsetStrategy strategy = OffsetStrategy::Quantile;
    std::size_t n_groups = 10000;

    // superradiance
    double theta = 0.0;             // rad
    double theta_floor = 1e-3;      // rad
    double t_max = 0.0;             // s; 0 -> 10 collective lifetimes
    std::size_t n_samples = 501;

    // oat
    double tau = 0.0;               // s
    std::size_t n_phase = 24;

    // ramsey
    double tau_min = 1e-6, tau_max = 1e-2; // s
    std::size_t points_per_decade = 40;

    // s21
    std::string s21_mode = "model"; // "model" or "fit"
    double omega_c = 0.0, omega_s = 0.0;    // Hz
    double f_min = 0.0, f_max = 0.0;        // Hz
    std::size_t n_freq = 2001;
    double noise_snr_db = 0.0;              // 0 -> noiseless

    // sweep grids (context-dependent: theta for superradiance, tau/n0 for oat,
    // chi_n for ramsey)
    std::vector<double> grid;
    std::string sweep_variable; // "theta" | "tau" | "n0" | "chi_n"

    RadauOptions integrator{};
    std::uint64_t seed = 1;
    std::string output_dir = ".";

    void validate() const;
};

RunConfig parse_config(const std::string& path);
RunConfig parse_config_json(const nlohmann::json& j, const std::string& origin = "<inline>");

nlohmann::json config_to_json(const RunConfig& c);

struct RunManifest {
    nlohmann::json config;
    DerivedRates rates{};
    std::string tool_version;
    double wall_seconds = 0.0;
    std::vector<std::string> warnings;
    bool success = false;
    std::string error;

    nlohmann::json to_json() const;
    void write(const std::string& path) const;
};

inline constexpr const char* tool_version_string = "spinsim 0.1.0";

} // namespace spinsim

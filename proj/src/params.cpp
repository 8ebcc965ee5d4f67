#include "spinsim/params.hpp"

#include "spinsim/constants.hpp"
#include "spinsim/errors.hpp"

#include <cmath>

namespace spinsim {

void PhysicalParams::validate() const {
    if (!(kappa > 0.0))
        throw ConfigError("params: kappa must be > 0 (got " + std::to_string(kappa) + ")");
    if (!(gamma_inh >= 0.0))
        throw ConfigError("params: gamma_inh must be >= 0");
    if (!(gamma_2 >= 0.0))
        throw ConfigError("params: gamma_2 must be >= 0");
    if (!(n0 >= 0.0))
        throw ConfigError("params: n0 must be >= 0");
    if (!(g >= 0.0))
        throw ConfigError("params: g must be >= 0");
    if (!(kappa_out >= 0.0 && kappa_out <= kappa))
        throw ConfigError("params: kappa_out must lie in [0, kappa]");
}

DerivedRates derive_rates(const PhysicalParams& p) {
    if (p.kappa == 0.0 && p.delta == 0.0)
        throw ConfigError("derive_rates: kappa = 0 together with delta = 0, rates undefined");
    p.validate();

    const double denom = 4.0 * p.delta * p.delta + p.kappa * p.kappa;
    DerivedRates r;
    r.chi = 4.0 * p.g * p.g * p.delta / denom;
    r.gamma_sr_single = 4.0 * p.g * p.g * p.kappa / denom;
    r.chi_n = r.chi * p.n0;
    r.gamma_c = r.gamma_sr_single * p.n0;
    r.gap = r.chi_n;
    r.g_coll = p.g * std::sqrt(p.n0);
    return r;
}

double single_ion_coupling(double g_parallel, double v_m, double omega_s) {
    if (!(v_m > 0.0))
        throw ConfigError("single_ion_coupling: mode volume must be > 0");
    if (!(omega_s > 0.0))
        throw ConfigError("single_ion_coupling: transition frequency must be > 0");
    using namespace constants;
    const double omega_ang = two_pi * omega_s;
    const double g_ang = (g_parallel * mu_bohr / (2.0 * hbar)) *
                         std::sqrt(mu0 * hbar * omega_ang / (2.0 * v_m));
    return g_ang / two_pi;
}

double n0_from_coupling(double g_coll, double g) {
    if (!(g > 0.0))
        throw ConfigError("n0_from_coupling: g must be > 0");
    const double ratio = g_coll / g;
    return ratio * ratio;
}

double g_coll_for_chi_n(double chi_n, double delta, double kappa) {
    if (delta == 0.0)
        throw ConfigError("g_coll_for_chi_n: delta = 0 has no solution");
    const double denom = 4.0 * delta * delta + kappa * kappa;
    const double gc2 = chi_n * denom / (4.0 * delta);
    if (!(gc2 >= 0.0))
        throw ConfigError("g_coll_for_chi_n: chi_n and delta must have the same sign");
    return std::sqrt(gc2);
}

double default_gamma_2() { return 1.0 / (constants::pi * default_t2_s); }

} // namespace spinsim

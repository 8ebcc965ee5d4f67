#pragma once

#include <string>

namespace spinsim {

// All user-facing frequencies are ordinary frequencies (Hz, i.e. omega/2pi).
// The dynamics engine converts to angular units internally at one boundary.
struct PhysicalParams {
    double g = 0.0;          // single-spin coupling, Hz
    double kappa = 0.0;      // cavity power decay rate FWHM, Hz
    double delta = 0.0;      // cavity - spin detuning, Hz, signed
    double gamma_inh = 0.0;  // inhomogeneous linewidth FWHM, Hz
    double gamma_2 = 0.0;    // single-particle dephasing rate, Hz
    double n0 = 0.0;         // effective polarized spin number
    double kappa_out = 0.0;  // output port coupling rate, Hz (S21 only)

    // Throws ConfigError naming the violated invariant.
    void validate() const;
};

struct DerivedRates {
    double chi = 0.0;             // single-particle exchange rate, Hz, signed
    double gamma_sr_single = 0.0; // single-particle collective-emission rate, Hz
    double chi_n = 0.0;           // collective interaction rate chi*N0, Hz
    double gamma_c = 0.0;         // collective emission rate Gamma_SR*N0, Hz
    double gap = 0.0;             // many-body gap chi*N0, Hz
    double g_coll = 0.0;          // collective coupling g*sqrt(N0), Hz
};

// chi = 4 g^2 delta / (4 delta^2 + kappa^2), gamma_sr = 4 g^2 kappa / (4 delta^2 + kappa^2).
// Identical in ordinary-frequency units. Rejects kappa = 0 together with delta = 0.
DerivedRates derive_rates(const PhysicalParams& p);

// g = (g_par mu_B / 2 hbar) sqrt(mu0 hbar omega_s^ang / (2 V_m)), returned in Hz.
// v_m in m^3, omega_s in Hz (ordinary). Non-positive v_m or omega_s rejected.
double single_ion_coupling(double g_parallel, double v_m, double omega_s);

// n0 = (g_coll / g)^2. g = 0 rejected.
double n0_from_coupling(double g_coll, double g);

// Inverse of the chi_n formula: the g_coll that yields the requested chi_n
// at fixed detuning and linewidth. delta = 0 rejected.
double g_coll_for_chi_n(double chi_n, double delta, double kappa);

// Default single-particle dephasing, gamma_2 = 1/(pi T2) with T2 = 150 ms.
inline constexpr double default_t2_s = 0.150;
double default_gamma_2();

} // namespace spinsim

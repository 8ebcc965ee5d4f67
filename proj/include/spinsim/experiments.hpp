#pragma once

#include <complex>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "spinsim/dynamics.hpp"
#include "spinsim/fitting.hpp"
#include "spinsim/lineshape.hpp"
#include "spinsim/params.hpp"

namespace spinsim {

// ---------------------------------------------------------------------------
// Pulse sequences

struct Rotate {
    double axis_azimuth = 0.0; // rad, equatorial axis
    double angle = 0.0;        // rad
};
struct Evolve {
    double duration = 0.0; // s
};
struct Record {
    std::string tag;
};

struct PulseSequence {
    std::vector<std::variant<Rotate, Evolve, Record>> steps;
    void validate() const; // durations >= 0, at least one Record, finite total
    double total_duration() const;
};

// Runs a sequence on an ensemble under the dispersive equations. Each Record
// appends (time, mean s+, mean s_z) to the output rows.
struct SequenceRecord {
    std::string tag;
    double time = 0.0;
    cplx mean_s_plus{0.0, 0.0};
    double mean_s_z = 0.0;
};
std::vector<SequenceRecord> run_sequence(EnsembleState& state, const PulseSequence& seq,
                                         const DispersiveSystem::Rates& rates,
                                         const RadauOptions& opt = {}, bool parallel = true);

// ---------------------------------------------------------------------------
// Artifacts

struct TimeTrace {
    std::vector<double> times; // s, strictly increasing
    std::map<std::string, std::vector<double>> columns;
    std::string primary; // observable id of the main column
    std::map<std::string, std::string> metadata;
    void validate() const;
};

struct PhaseScan {
    std::vector<double> phi;  // rad, >= 8 points spanning >= 2 pi
    std::vector<double> p_up; // readout populations in [0, 1]
    double delta_phi = 0.0;   // rad, convention chi_n-positive (see below)
    double delta_phi_sigma = 0.0;
    double raw_phase_shift = 0.0; // measured - reference, wrapped
    double contrast = 0.0;        // peak-to-peak of P_up
    std::vector<std::string> flags;
    std::map<std::string, std::string> metadata;
    void validate() const;
};

// ---------------------------------------------------------------------------
// Superradiance

inline constexpr double default_theta_floor = 1e-3; // rad below exact inversion

// Rotates the south pole to polar angle theta about x, integrates the
// collective equations, and records the emitted intensity
//   I(t) = 2 pi gamma_sr_single * (n0^2/4) * |s+|^2
// (model units) together with s_z. theta must satisfy 0 < theta <= pi - eps.
TimeTrace run_superradiance(const PhysicalParams& p, double theta, double t_max,
                            std::span<const double> sample_times,
                            double theta_floor = default_theta_floor,
                            const RadauOptions& opt = {});

// ---------------------------------------------------------------------------
// One-axis twisting via Hahn echo

struct OatOptions {
    OffsetSet offsets;          // empty -> single zero-offset group
    RadauOptions integrator{};
    bool parallel = true;
};

// Sequence: Rotate(x, theta) -> Evolve(tau/2) -> Rotate(x, pi) -> Evolve(tau/2)
// -> for each phi: Rotate(phi, pi/2), read P_up = (1 + <s_z>)/2. The phase of
// the fitted sinusoid is compared against the zero-rate reference of the same
// sequence; delta_phi is reported as reference - measured so that
// delta_phi = 2 pi chi_n tau cos(theta) comes out positive for theta < pi/2.
PhaseScan run_oat(const PhysicalParams& p, double theta, double tau,
                  std::span<const double> phase_grid, const OatOptions& opt = {});

std::vector<double> default_phase_grid(std::size_t n = 24);

struct OatScanResult {
    std::vector<double> grid;      // tau (s) or n0 values
    std::vector<double> delta_phi; // rad
    std::vector<double> sigma;     // rad
    LineFit line;                  // delta_phi vs grid (tau scan) or chi_n vs n0
    double chi_n_fit = 0.0;        // Hz, from the slope
    double chi_n_fit_sigma = 0.0;  // Hz
};

// |delta_phi| linear in tau at fixed theta; slope = 2 pi chi_n cos(theta).
OatScanResult oat_tau_scan(const PhysicalParams& p, double theta,
                           std::span<const double> tau_grid,
                           std::span<const double> phase_grid, const OatOptions& opt = {});

// Extracted chi_n = delta_phi/(2 pi tau cos theta) linear in n0; the slope is
// the single-spin shift chi (Hz).
OatScanResult oat_n0_scan(const PhysicalParams& p, double theta, double tau,
                          std::span<const double> n0_grid,
                          std::span<const double> phase_grid, const OatOptions& opt = {});

// ---------------------------------------------------------------------------
// Ramsey coherence

struct RamseyOptions {
    OffsetStrategy strategy = OffsetStrategy::Quantile;
    std::uint64_t seed = 1;
    RadauOptions integrator{};
    bool parallel = true;
    bool convergence_check = false; // rerun at 2x groups, warn if |dC| > 1e-3
};

// South pole -> Rotate(x, pi/2) -> free evolution under the full dispersive
// equations; one integration over [0, max tau] recording the normalized
// coherence C(tau) = |mean s+| at each grid point.
TimeTrace run_ramsey(const PhysicalParams& p, const Lineshape& shape, std::size_t n_groups,
                     std::span<const double> tau_grid, const RamseyOptions& opt = {});

std::vector<double> default_ramsey_tau_grid(double t_min = 1e-6, double t_max = 1e-2,
                                            std::size_t per_decade = 40);

// Convenience: fits the coherence trace and returns the 1/e time (T2*).
ExponentialFamilyFit ramsey_t2star(const TimeTrace& trace);

// ---------------------------------------------------------------------------
// S21 spectroscopy

// Transfer function
//   S21(w) = i kappa_out / (w - w_c + i kappa/2 - g_coll^2/(w - w_s + i gamma_inh/2))
// evaluated in consistent units; all inputs are ordinary frequencies (Hz) and
// the ratio is invariant under the 2 pi rescaling.
std::vector<cplx> s21_model(std::span<const double> freq_hz, const PhysicalParams& p,
                            double omega_c_hz, double omega_s_hz);

struct S21FitResult {
    FitResult fit;     // params: {g_coll, gamma_inh, amplitude, baseline}
    double g_coll = 0.0, g_coll_sigma = 0.0;   // Hz
    double gamma_inh = 0.0, gamma_inh_sigma = 0.0;
    bool feature_found = true;
};

// Fits |S21| with kappa, delta (= w_c - w_s) and w_c fixed; free parameters
// g_coll, gamma_inh, amplitude, baseline. Flags "feature_not_found" when the
// fitted coupling is indistinguishable from zero.
S21FitResult fit_s21(std::span<const double> freq_hz, std::span<const cplx> spectrum,
                     double kappa_hz, double omega_c_hz, double omega_s_hz,
                     double g_coll_guess_hz, double gamma_inh_guess_hz, double tol = 1e-12);

} // namespace spinsim

#include "spinsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "spinsim/constants.hpp"
#include "spinsim/errors.hpp"

namespace spinsim {

using constants::pi;
using constants::two_pi;

namespace {

double wrap_pi(double x) {
    x = std::fmod(x + pi, two_pi);
    if (x < 0.0) x += two_pi;
    return x - pi;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

// ---------------------------------------------------------------------------
// Pulse sequences

void PulseSequence::validate() const {
    bool has_record = false;
    double total = 0.0;
    for (const auto& step : steps) {
        if (std::holds_alternative<Record>(step)) has_record = true;
        if (const auto* e = std::get_if<Evolve>(&step)) {
            if (!(e->duration >= 0.0))
                throw ConfigError("pulse sequence: negative evolve duration");
            total += e->duration;
        }
    }
    if (!has_record) throw ConfigError("pulse sequence: no Record step");
    if (!std::isfinite(total)) throw ConfigError("pulse sequence: infinite total duration");
}

double PulseSequence::total_duration() const {
    double total = 0.0;
    for (const auto& step : steps)
        if (const auto* e = std::get_if<Evolve>(&step)) total += e->duration;
    return total;
}

std::vector<SequenceRecord> run_sequence(EnsembleState& state, const PulseSequence& seq,
                                         const DispersiveSystem::Rates& rates,
                                         const RadauOptions& opt, bool parallel) {
    seq.validate();
    std::vector<SequenceRecord> out;
    for (const auto& step : seq.steps) {
        if (const auto* r = std::get_if<Rotate>(&step)) {
            apply_rotation(state, r->axis_azimuth, r->angle);
        } else if (const auto* e = std::get_if<Evolve>(&step)) {
            if (e->duration > 0.0) integrate_dispersive(state, rates, e->duration, opt, {}, {}, parallel);
        } else {
            const auto& rec = std::get<Record>(step);
            out.push_back({rec.tag, state.time, state.mean_s_plus(), state.mean_s_z()});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Artifacts

void TimeTrace::validate() const {
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw NumericalError("time trace: times not strictly increasing", times[i]);
    for (const auto& [name, col] : columns) {
        if (col.size() != times.size())
            throw ConfigError("time trace: column '" + name + "' length mismatch");
        for (double v : col)
            if (!std::isfinite(v))
                throw NumericalError("time trace: non-finite value in '" + name + "'", 0.0);
    }
}

void PhaseScan::validate() const {
    if (phi.size() < 8) throw ConfigError("phase scan: need >= 8 phase points");
    const auto [lo, hi] = std::minmax_element(phi.begin(), phi.end());
    if (!(*hi - *lo >= two_pi * (1.0 - 1e-9)))
        throw ConfigError("phase scan: grid must span >= 2 pi");
    if (phi.size() != p_up.size()) throw ConfigError("phase scan: phi/p_up length mismatch");
    for (double v : p_up)
        if (!(v >= -1e-9 && v <= 1.0 + 1e-9))
            throw NumericalError("phase scan: population outside [0,1]", v);
}

// ---------------------------------------------------------------------------
// Superradiance

TimeTrace run_superradiance(const PhysicalParams& p, double theta, double t_max,
                            std::span<const double> sample_times, double theta_floor,
                            const RadauOptions& opt) {
    p.validate();
    if (!(theta > 0.0))
        throw ConfigError("superradiance: theta must be positive");
    if (theta > pi - theta_floor)
        throw ConfigError("superradiance: theta exceeds pi - eps floor (" + fmt(theta_floor) +
                          " rad); exact inversion is a fixed point, lower theta or the floor");
    if (!(t_max > 0.0)) throw ConfigError("superradiance: t_max must be positive");
    const DerivedRates r = derive_rates(p);

    TimeTrace trace;
    trace.primary = "intensity";
    trace.metadata["theta_rad"] = fmt(theta);
    trace.metadata["theta_floor_rad"] = fmt(theta_floor);
    trace.metadata["gamma_c_hz"] = fmt(r.gamma_c);
    trace.metadata["n0"] = fmt(p.n0);
    if (std::abs(p.delta) >= p.kappa)
        trace.metadata["warning"] = "detuning |delta| >= kappa: not the resonant regime";

    BlochState s;
    apply_rotation(s, 0.0, theta);

    // I(t) in model units: Gamma_SR^ang * (n0^2/4) * |s+|^2
    const double i_scale = two_pi * r.gamma_sr_single * p.n0 * p.n0 / 4.0;
    auto& t_col = trace.times;
    auto& i_col = trace.columns["intensity"];
    auto& z_col = trace.columns["s_z"];
    auto& sp_col = trace.columns["s_plus_abs2"];
    std::vector<double> grid(sample_times.begin(), sample_times.end());
    if (grid.empty()) {
        grid.resize(501);
        for (std::size_t i = 0; i < grid.size(); ++i)
            grid[i] = t_max * static_cast<double>(i) / (grid.size() - 1);
    }
    integrate_collective(s, r.gamma_c, r.gamma_sr_single, t_max, opt, grid,
                         [&](double t, const BlochState& b) {
                             t_col.push_back(t);
                             const double a2 = std::norm(b.s_plus);
                             i_col.push_back(i_scale * a2);
                             z_col.push_back(b.s_z);
                             sp_col.push_back(a2);
                         });
    // the sampler can hit t=0 twice if the caller includes it; dedupe equal heads
    if (t_col.size() >= 2 && t_col[0] == t_col[1]) {
        t_col.erase(t_col.begin());
        i_col.erase(i_col.begin());
        z_col.erase(z_col.begin());
        sp_col.erase(sp_col.begin());
    }
    trace.validate();
    return trace;
}

// ---------------------------------------------------------------------------
// One-axis twisting

std::vector<double> default_phase_grid(std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = two_pi * static_cast<double>(i) / (n - 1);
    return g;
}

namespace {

// Readout phase of the zero-rate echo reference: same rotations, no dynamics.
double reference_phase(double theta, std::span<const double> phase_grid) {
    BlochState ref;
    apply_rotation(ref, 0.0, theta);
    apply_rotation(ref, 0.0, pi);
    std::vector<double> pu(phase_grid.size());
    for (std::size_t i = 0; i < phase_grid.size(); ++i) {
        BlochState b = ref;
        apply_rotation(b, phase_grid[i], pi / 2.0);
        pu[i] = 0.5 * (1.0 + b.s_z);
    }
    return fit_sinusoid(phase_grid, pu).phase;
}

} // namespace

PhaseScan run_oat(const PhysicalParams& p, double theta, double tau,
                  std::span<const double> phase_grid, const OatOptions& opt) {
    p.validate();
    if (!(tau > 0.0)) throw ConfigError("oat: tau must be positive");
    const DerivedRates r = derive_rates(p);

    PhaseScan scan;
    scan.phi.assign(phase_grid.begin(), phase_grid.end());
    if (scan.phi.empty()) scan.phi = default_phase_grid();
    scan.metadata["theta_rad"] = fmt(theta);
    scan.metadata["tau_s"] = fmt(tau);
    scan.metadata["chi_n_hz"] = fmt(r.chi_n);
    if (std::abs(p.delta) < 5.0 * p.kappa)
        scan.metadata["warning"] = "|delta| < 5 kappa: dispersive approximation marginal";

    OffsetSet offsets = opt.offsets;
    if (offsets.offsets.empty()) offsets.offsets = {0.0};
    EnsembleState state = make_ensemble(offsets);

    DispersiveSystem::Rates rates;
    rates.chi_n = r.chi_n;
    rates.gamma_c = r.gamma_c;
    rates.gamma_sr_single = r.gamma_sr_single;
    rates.gamma_2 = p.gamma_2;

    PulseSequence seq;
    seq.steps = {Rotate{0.0, theta}, Evolve{tau / 2.0}, Rotate{0.0, pi}, Evolve{tau / 2.0},
                 Record{"pre_readout"}};
    const auto rec = run_sequence(state, seq, rates, opt.integrator, opt.parallel);

    scan.p_up.resize(scan.phi.size());
    for (std::size_t i = 0; i < scan.phi.size(); ++i) {
        EnsembleState b = state;
        apply_rotation(b, scan.phi[i], pi / 2.0);
        scan.p_up[i] = 0.5 * (1.0 + b.mean_s_z());
    }
    scan.validate();

    const SinusoidFit fit = fit_sinusoid(scan.phi, scan.p_up);
    const double ref = reference_phase(theta, scan.phi);
    scan.contrast = 2.0 * fit.amplitude;
    scan.raw_phase_shift = wrap_pi(fit.phase - ref);
    scan.delta_phi = wrap_pi(ref - fit.phase);
    // integrator phase error floors the usable uncertainty on noiseless data
    scan.delta_phi_sigma = std::max(fit.phase_sigma, 10.0 * opt.integrator.rel_tol);
    if (scan.contrast < 1e-3) scan.flags.push_back("low_contrast");
    // pre-readout azimuth of the mean transverse field, as a cross-check
    scan.metadata["pre_readout_azimuth_rad"] = fmt(std::arg(rec.back().mean_s_plus));
    scan.metadata["contrast"] = fmt(scan.contrast);
    return scan;
}

OatScanResult oat_tau_scan(const PhysicalParams& p, double theta,
                           std::span<const double> tau_grid,
                           std::span<const double> phase_grid, const OatOptions& opt) {
    if (tau_grid.size() < 4) throw ConfigError("oat scan: need >= 4 grid points");
    OatScanResult out;
    out.grid.assign(tau_grid.begin(), tau_grid.end());
    for (double tau : tau_grid) {
        const PhaseScan scan = run_oat(p, theta, tau, phase_grid, opt);
        out.delta_phi.push_back(std::abs(scan.delta_phi));
        out.sigma.push_back(scan.delta_phi_sigma);
    }
    out.line = fit_line(out.grid, out.delta_phi);
    const double c = std::abs(std::cos(theta));
    if (c > 1e-12) {
        out.chi_n_fit = out.line.slope / (two_pi * c);
        out.chi_n_fit_sigma = out.line.slope_sigma / (two_pi * c);
    }
    return out;
}

OatScanResult oat_n0_scan(const PhysicalParams& p, double theta, double tau,
                          std::span<const double> n0_grid,
                          std::span<const double> phase_grid, const OatOptions& opt) {
    if (n0_grid.size() < 4) throw ConfigError("oat scan: need >= 4 grid points");
    const double c = std::cos(theta);
    if (std::abs(c) < 1e-12) throw ConfigError("oat n0 scan: cos(theta) = 0 carries no signal");
    OatScanResult out;
    out.grid.assign(n0_grid.begin(), n0_grid.end());
    std::vector<double> chi_vals;
    for (double n0 : n0_grid) {
        PhysicalParams q = p;
        q.n0 = n0;
        const PhaseScan scan = run_oat(q, theta, tau, phase_grid, opt);
        out.delta_phi.push_back(scan.delta_phi);
        out.sigma.push_back(scan.delta_phi_sigma);
        chi_vals.push_back(scan.delta_phi / (two_pi * tau * c));
    }
    out.line = fit_line(out.grid, chi_vals); // slope = single-spin chi (Hz)
    out.chi_n_fit = out.line.slope;
    out.chi_n_fit_sigma = out.line.slope_sigma;
    return out;
}

// ---------------------------------------------------------------------------
// Ramsey

std::vector<double> default_ramsey_tau_grid(double t_min, double t_max, std::size_t per_decade) {
    std::vector<double> g;
    const double decades = std::log10(t_max / t_min);
    const std::size_t n = static_cast<std::size_t>(std::ceil(decades * per_decade)) + 1;
    for (std::size_t i = 0; i < n; ++i)
        g.push_back(t_min * std::pow(10.0, decades * static_cast<double>(i) / (n - 1)));
    g.back() = t_max;
    return g;
}

namespace {

TimeTrace ramsey_once(const PhysicalParams& p, const Lineshape& shape, std::size_t n_groups,
                      std::span<const double> tau_grid, const RamseyOptions& opt,
                      const DerivedRates& r) {
    EnsembleState state = make_ensemble(sample_offsets(shape, n_groups, opt.strategy, opt.seed));
    apply_rotation(state, 0.0, pi / 2.0);

    DispersiveSystem::Rates rates;
    rates.chi_n = r.chi_n;
    rates.gamma_c = r.gamma_c;
    rates.gamma_sr_single = r.gamma_sr_single;
    rates.gamma_2 = p.gamma_2;

    TimeTrace trace;
    trace.primary = "coherence";
    auto& c_col = trace.columns["coherence"];
    auto& z_col = trace.columns["s_z"];
    integrate_dispersive(state, rates, tau_grid.back(), opt.integrator, tau_grid,
                         [&](double t, cplx sp, double sz) {
                             trace.times.push_back(t);
                             c_col.push_back(std::abs(sp));
                             z_col.push_back(sz);
                         },
                         opt.parallel);
    return trace;
}

} // namespace

TimeTrace run_ramsey(const PhysicalParams& p, const Lineshape& shape, std::size_t n_groups,
                     std::span<const double> tau_grid, const RamseyOptions& opt) {
    p.validate();
    shape.validate();
    if (n_groups < 100) throw ConfigError("ramsey: n_groups must be >= 100");
    if (tau_grid.empty() || !(tau_grid.front() >= 0.0))
        throw ConfigError("ramsey: tau grid empty or negative");
    for (std::size_t i = 1; i < tau_grid.size(); ++i)
        if (!(tau_grid[i] > tau_grid[i - 1]))
            throw ConfigError("ramsey: tau grid must be strictly increasing");
    const DerivedRates r = derive_rates(p);

    TimeTrace trace = ramsey_once(p, shape, n_groups, tau_grid, opt, r);
    trace.metadata["n_groups"] = std::to_string(n_groups);
    trace.metadata["seed"] = std::to_string(opt.seed);
    trace.metadata["strategy"] =
        opt.strategy == OffsetStrategy::Quantile ? "quantile" : "random";
    trace.metadata["chi_n_hz"] = fmt(r.chi_n);
    trace.metadata["fwhm_hz"] = fmt(shape.fwhm);

    if (opt.convergence_check) {
        const TimeTrace fine = ramsey_once(p, shape, 2 * n_groups, tau_grid, opt, r);
        double dmax = 0.0;
        const auto& a = trace.columns.at("coherence");
        const auto& b = fine.columns.at("coherence");
        for (std::size_t i = 0; i < a.size(); ++i) dmax = std::max(dmax, std::abs(a[i] - b[i]));
        trace.metadata["convergence_dmax"] = fmt(dmax);
        if (dmax > 1e-3)
            trace.metadata["warning"] =
                "group-count convergence: doubling n_groups moves C by " + fmt(dmax);
    }
    trace.validate();
    return trace;
}

ExponentialFamilyFit ramsey_t2star(const TimeTrace& trace) {
    return fit_exponential_family(trace.times, trace.columns.at("coherence"));
}

// ---------------------------------------------------------------------------
// S21

std::vector<cplx> s21_model(std::span<const double> freq_hz, const PhysicalParams& p,
                            double omega_c_hz, double omega_s_hz) {
    if (!(p.kappa > 0.0)) throw ConfigError("s21: kappa must be positive");
    const double g2 = p.g * p.g * p.n0; // g_coll^2
    std::vector<cplx> out(freq_hz.size());
    const cplx i{0.0, 1.0};
    for (std::size_t k = 0; k < freq_hz.size(); ++k) {
        const double w = freq_hz[k];
        if (!std::isfinite(w)) throw ConfigError("s21: non-finite frequency grid");
        const cplx spin = (g2 != 0.0) ? g2 / (w - omega_s_hz + i * p.gamma_inh / 2.0)
                                      : cplx{0.0, 0.0};
        out[k] = i * p.kappa_out / (w - omega_c_hz + i * p.kappa / 2.0 - spin);
    }
    return out;
}

S21FitResult fit_s21(std::span<const double> freq_hz, std::span<const cplx> spectrum,
                     double kappa_hz, double omega_c_hz, double omega_s_hz,
                     double g_coll_guess_hz, double gamma_inh_guess_hz, double tol) {
    if (freq_hz.size() != spectrum.size() || freq_hz.size() < 8)
        throw FitError("s21 fit: need >= 8 matched spectrum points");
    std::vector<double> mag(freq_hz.size());
    for (std::size_t k = 0; k < spectrum.size(); ++k) mag[k] = std::abs(spectrum[k]);
    const double mmax = *std::max_element(mag.begin(), mag.end());
    std::vector<double> w(freq_hz.begin(), freq_hz.end());

    // model magnitude with kappa_out folded into the amplitude scale; the
    // explicit kappa_out cancels against `amplitude` so fix it to kappa/2
    PhysicalParams base;
    base.g = 1.0;
    base.kappa = kappa_hz;
    base.kappa_out = kappa_hz / 2.0;
    base.gamma_inh = 1.0;
    base.n0 = 1.0;
    base.delta = omega_c_hz - omega_s_hz;

    ModelSpec m;
    m.model_id = "s21_magnitude";
    m.names = {"g_coll", "gamma_inh", "amplitude", "baseline"};
    m.guess = {std::max(g_coll_guess_hz, 1e-6), std::max(gamma_inh_guess_hz, 1e-9), 1.0, 0.0};
    m.lower = {0.0, 0.0, 1e-12, -10.0 * mmax};
    m.upper = {1e12, 1e12, 1e12, 10.0 * mmax};
    m.residual = [&](std::span<const double> prm) {
        PhysicalParams q = base;
        q.g = prm[0]; // n0 = 1 so g_coll = g
        q.gamma_inh = prm[1];
        const auto model = s21_model(w, q, omega_c_hz, omega_s_hz);
        std::vector<double> r(w.size());
        for (std::size_t k = 0; k < w.size(); ++k)
            r[k] = prm[2] * std::abs(model[k]) + prm[3] - mag[k];
        return r;
    };

    S21FitResult out;
    out.fit = least_squares(m, tol, 400);
    out.g_coll = out.fit.params[0];
    out.g_coll_sigma = out.fit.sigma[0];
    out.gamma_inh = out.fit.params[1];
    out.gamma_inh_sigma = out.fit.sigma[1];

    // feature detection: a cavity-only fit (g_coll pinned to 0) must be
    // substantially worse, otherwise the residual is flat in g_coll
    ModelSpec cav = m;
    cav.model_id = "s21_cavity_only";
    cav.guess[0] = 0.0;
    cav.fixed = {true, true, false, false};
    const FitResult cav_fit = least_squares(cav, tol, 400);
    if (!(out.fit.residual_norm < 0.5 * cav_fit.residual_norm)) {
        out.feature_found = false;
        out.fit.flags.push_back("feature_not_found");
        // the residual is ~quadratic in g_coll near 0, so the Jacobian-based
        // sigma underestimates badly; widen it to cover the flat direction
        out.g_coll_sigma = std::max(out.g_coll_sigma, out.g_coll);
    }
    return out;
}

} // namespace spinsim

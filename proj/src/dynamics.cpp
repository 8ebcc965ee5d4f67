#include "spinsim/dynamics.hpp"

#include "spinsim/constants.hpp"
#include "spinsim/errors.hpp"
#include "spinsim/reduction.hpp"

#include <algorithm>
#include <cmath>

namespace spinsim {

using constants::two_pi;

void EnsembleState::validate() const {
    const std::size_t n = s_plus.size();
    if (s_z.size() != n || offsets.offsets.size() != n || weights.size() != n)
        throw ConfigError("ensemble: groups, offsets, weights must have equal length");
    for (double w : weights)
        if (!(w > 0.0)) throw ConfigError("ensemble: weights must be > 0");
}

cplx EnsembleState::mean_s_plus() const {
    const std::size_t n = size();
    std::vector<cplx> contrib(n);
    for (std::size_t j = 0; j < n; ++j) contrib[j] = weights[j] * s_plus[j];
    return pairwise_sum(std::span<const cplx>(contrib));
}

double EnsembleState::mean_s_z() const {
    const std::size_t n = size();
    std::vector<double> contrib(n);
    for (std::size_t j = 0; j < n; ++j) contrib[j] = weights[j] * s_z[j];
    return pairwise_sum(std::span<const double>(contrib));
}

EnsembleState make_ensemble(const OffsetSet& offsets) {
    EnsembleState s;
    const std::size_t n = offsets.offsets.size();
    if (n == 0) throw ConfigError("make_ensemble: empty offset set");
    s.s_plus.assign(n, cplx(0.0, 0.0));
    s.s_z.assign(n, -1.0);
    s.offsets = offsets;
    s.weights.assign(n, 1.0 / static_cast<double>(n));
    return s;
}

void apply_rotation(BlochState& state, double axis_azimuth, double angle) {
    // Rotate the frame so the axis is x, apply Rx(angle), rotate back.
    const cplx axis_phase = std::polar(1.0, axis_azimuth);
    const cplx sp = state.s_plus * std::conj(axis_phase);
    const double sx = sp.real(), sy = sp.imag();
    const double ca = std::cos(angle), sa = std::sin(angle);
    const double sy2 = sy * ca - state.s_z * sa;
    const double sz2 = sy * sa + state.s_z * ca;
    state.s_plus = cplx(sx, sy2) * axis_phase;
    state.s_z = sz2;
}

void apply_rotation(EnsembleState& state, double axis_azimuth, double angle) {
    const cplx axis_phase = std::polar(1.0, axis_azimuth);
    const double ca = std::cos(angle), sa = std::sin(angle);
    const std::size_t n = state.size();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(n); ++j) {
        const cplx sp = state.s_plus[j] * std::conj(axis_phase);
        const double sx = sp.real(), sy = sp.imag();
        const double sy2 = sy * ca - state.s_z[j] * sa;
        const double sz2 = sy * sa + state.s_z[j] * ca;
        state.s_plus[j] = cplx(sx, sy2) * axis_phase;
        state.s_z[j] = sz2;
    }
}

void Trajectory::validate() const {
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw NumericalError("trajectory: times not strictly increasing");
    for (const auto& [name, col] : columns) {
        if (col.size() != times.size())
            throw NumericalError("trajectory: column size mismatch: " + name);
        for (double v : col)
            if (!std::isfinite(v)) throw NumericalError("trajectory: non-finite value in " + name);
    }
}

// ---------------------------------------------------------------------------

CollectiveSystem::CollectiveSystem(double gamma_c_hz, double gamma_sr_single_hz)
    : gca_4_(two_pi * gamma_c_hz / 4.0), gsa_4_(two_pi * gamma_sr_single_hz / 4.0) {}

void CollectiveSystem::pack(const BlochState& s, double* y) {
    y[0] = s.s_plus.real();
    y[1] = s.s_plus.imag();
    y[2] = s.s_z;
}

BlochState CollectiveSystem::unpack(const double* y) {
    return BlochState{cplx(y[0], y[1]), y[2]};
}

void CollectiveSystem::rhs(double /*t*/, int /*stage*/, const double* y, double* f) {
    f[0] = gca_4_ * y[0] * y[2];
    f[1] = gca_4_ * y[1] * y[2];
    f[2] = -gca_4_ * (y[0] * y[0] + y[1] * y[1]) - gsa_4_ * y[2];
}

void CollectiveSystem::block_jacobian(double /*t*/, const double* y, std::size_t /*block*/,
                                      double* jac) {
    jac[0] = gca_4_ * y[2]; jac[1] = 0.0;            jac[2] = gca_4_ * y[0];
    jac[3] = 0.0;           jac[4] = gca_4_ * y[2];  jac[5] = gca_4_ * y[1];
    jac[6] = -2.0 * gca_4_ * y[0];
    jac[7] = -2.0 * gca_4_ * y[1];
    jac[8] = -gsa_4_;
}

// ---------------------------------------------------------------------------

DispersiveSystem::DispersiveSystem(std::vector<double> offsets_hz, std::vector<double> weights,
                                   Rates rates, bool parallel)
    : n_(offsets_hz.size()),
      offsets_hz_(std::move(offsets_hz)),
      weights_(std::move(weights)),
      chi_n_a_(two_pi * rates.chi_n),
      gc4_a_(two_pi * rates.gamma_c / 4.0),
      gs4_a_(two_pi * rates.gamma_sr_single / 4.0),
      g2_a_(two_pi * rates.gamma_2),
      parallel_(parallel) {
    if (weights_.size() != n_) throw ConfigError("dispersive: offsets/weights size mismatch");
    offsets_ang_.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) offsets_ang_[j] = two_pi * offsets_hz_[j];
    contrib_.resize(n_);
}

DispersiveSystem DispersiveSystem::from_params(const EnsembleState& s, const DerivedRates& r,
                                               double gamma_2_hz, bool parallel) {
    return DispersiveSystem(s.offsets.offsets, s.weights,
                            Rates{r.chi_n, r.gamma_c, r.gamma_sr_single, gamma_2_hz}, parallel);
}

void DispersiveSystem::stage_phases(double t, std::vector<cplx>& out) const {
    out.resize(n_);
    const bool par = parallel_;
#pragma omp parallel for schedule(static) if (par)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(n_); ++j) {
        const double ph = offsets_ang_[j] * t;
        out[j] = cplx(std::cos(ph), std::sin(ph)); // e^{+i d_j t}
    }
}

void DispersiveSystem::prepare_step(double /*t0*/, double /*h*/) {
    for (bool& v : phase_cache_valid_) v = false;
}

const std::vector<cplx>& DispersiveSystem::phases_for(double t, int stage) {
    const int slot = (stage >= 0 && stage < 3) ? stage : 3;
    if (!phase_cache_valid_[slot] || phase_cache_t_[slot] != t) {
        stage_phases(t, phase_cache_[slot]);
        phase_cache_t_[slot] = t;
        phase_cache_valid_[slot] = true;
    }
    return phase_cache_[slot];
}

void DispersiveSystem::rhs_impl(double /*t*/, const std::vector<cplx>& ph, const double* y,
                                double* f, bool parallel) const {
    // mean lab-frame field: sbar+ = sum_j w_j e^{+i d_j t} u_j
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(n_); ++j) {
        const cplx u(y[3 * j], y[3 * j + 1]);
        contrib_[j] = weights_[j] * ph[j] * u;
    }
    const cplx sbar = pairwise_sum(std::span<const cplx>(contrib_));

    const cplx coeff(gc4_a_, -chi_n_a_); // (-i X + G)
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(n_); ++j) {
        const cplx u(y[3 * j], y[3 * j + 1]);
        const double sz = y[3 * j + 2];
        const cplx w = std::conj(ph[j]) * sbar;      // e^{-i d_j t} sbar+
        const cplx du = coeff * w * sz - g2_a_ * u;
        const cplx wu = w * std::conj(u);            // = sbar+ s-_j in lab frame
        f[3 * j] = du.real();
        f[3 * j + 1] = du.imag();
        f[3 * j + 2] = -chi_n_a_ * wu.imag() - gc4_a_ * wu.real() - gs4_a_ * sz;
    }
}

void DispersiveSystem::rhs(double t, int stage, const double* y, double* f) {
    rhs_impl(t, phases_for(t, stage), y, f, parallel_);
}

void DispersiveSystem::rhs_reference(double t, const double* y, double* f) const {
    std::vector<cplx> ph;
    stage_phases(t, ph);
    // plain serial loops, same reduction order
    for (std::size_t j = 0; j < n_; ++j) {
        const cplx u(y[3 * j], y[3 * j + 1]);
        contrib_[j] = weights_[j] * ph[j] * u;
    }
    const cplx sbar = pairwise_sum(std::span<const cplx>(contrib_));
    const cplx coeff(gc4_a_, -chi_n_a_);
    for (std::size_t j = 0; j < n_; ++j) {
        const cplx u(y[3 * j], y[3 * j + 1]);
        const double sz = y[3 * j + 2];
        const cplx w = std::conj(ph[j]) * sbar;
        const cplx du = coeff * w * sz - g2_a_ * u;
        const cplx wu = w * std::conj(u);
        f[3 * j] = du.real();
        f[3 * j + 1] = du.imag();
        f[3 * j + 2] = -chi_n_a_ * wu.imag() - gc4_a_ * wu.real() - gs4_a_ * sz;
    }
}

void DispersiveSystem::prepare_jacobian(double t, const double* y) {
    // Mean field frozen at the step-start state; Newton residuals stay exact.
    const auto& ph = phases_for(t, -1);
    for (std::size_t j = 0; j < n_; ++j) {
        const cplx u(y[3 * j], y[3 * j + 1]);
        contrib_[j] = weights_[j] * ph[j] * u;
    }
    const cplx sbar = pairwise_sum(std::span<const cplx>(contrib_));
    jac_w_.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) jac_w_[j] = std::conj(ph[j]) * sbar;
}

void DispersiveSystem::block_jacobian(double /*t*/, const double* /*y*/, std::size_t block,
                                      double* jac) {
    const std::size_t j = block;
    const cplx w = jac_w_[j];
    const double wr = w.real(), wi = w.imag();
    const double X = chi_n_a_, G = gc4_a_;
    // d(du_r)/d(ur, ui, sz)
    jac[0] = -g2_a_; jac[1] = 0.0;     jac[2] = G * wr + X * wi;
    jac[3] = 0.0;    jac[4] = -g2_a_;  jac[5] = G * wi - X * wr;
    // dsz/dt = -X (wi ur - wr ui) - G (wr ur + wi ui) - gs4 sz
    jac[6] = -X * wi - G * wr;
    jac[7] = X * wr - G * wi;
    jac[8] = -gs4_a_;
}

cplx DispersiveSystem::mean_s_plus(double t, const double* y) const {
    std::vector<cplx> ph;
    stage_phases(t, ph);
    for (std::size_t j = 0; j < n_; ++j) {
        const cplx u(y[3 * j], y[3 * j + 1]);
        contrib_[j] = weights_[j] * ph[j] * u;
    }
    return pairwise_sum(std::span<const cplx>(contrib_));
}

double DispersiveSystem::mean_s_z(const double* y) const {
    std::vector<double> contrib(n_);
    for (std::size_t j = 0; j < n_; ++j) contrib[j] = weights_[j] * y[3 * j + 2];
    return pairwise_sum(std::span<const double>(contrib));
}

void DispersiveSystem::pack(const EnsembleState& s, std::vector<double>& y) const {
    y.resize(3 * n_);
    for (std::size_t j = 0; j < n_; ++j) {
        y[3 * j] = s.s_plus[j].real();
        y[3 * j + 1] = s.s_plus[j].imag();
        y[3 * j + 2] = s.s_z[j];
    }
}

void DispersiveSystem::unpack(const double* y, double t, EnsembleState& s) const {
    std::vector<cplx> ph;
    stage_phases(t, ph);
    for (std::size_t j = 0; j < n_; ++j) {
        s.s_plus[j] = ph[j] * cplx(y[3 * j], y[3 * j + 1]);
        s.s_z[j] = y[3 * j + 2];
    }
}

// ---------------------------------------------------------------------------

IntegrationResult integrate_collective(BlochState& state, double gamma_c_hz,
                                       double gamma_sr_single_hz, double duration,
                                       const RadauOptions& opt,
                                       std::span<const double> record_grid,
                                       const std::function<void(double, const BlochState&)>& on_sample) {
    CollectiveSystem sys(gamma_c_hz, gamma_sr_single_hz);
    double y[3];
    CollectiveSystem::pack(state, y);
    SampleFn sampler;
    if (on_sample)
        sampler = [&](double t, std::span<const double> yv) {
            on_sample(t, CollectiveSystem::unpack(yv.data()));
        };
    IntegrationResult res;
    res.stats = radau5_integrate(sys, std::span<double>(y, 3), 0.0, duration, opt, record_grid,
                                 sampler);
    state = CollectiveSystem::unpack(y);
    return res;
}

IntegrationResult integrate_dispersive(EnsembleState& state, const DispersiveSystem::Rates& rates,
                                       double duration, const RadauOptions& opt,
                                       std::span<const double> record_grid,
                                       const std::function<void(double, cplx, double)>& on_sample,
                                       bool parallel) {
    state.validate();
    DispersiveSystem sys(state.offsets.offsets, state.weights, rates, parallel);
    std::vector<double> y;
    sys.pack(state, y);
    SampleFn sampler;
    if (on_sample)
        sampler = [&](double t, std::span<const double> yv) {
            on_sample(t, sys.mean_s_plus(t, yv.data()), sys.mean_s_z(yv.data()));
        };
    IntegrationResult res;
    res.stats = radau5_integrate(sys, std::span<double>(y), 0.0, duration, opt, record_grid,
                                 sampler);
    sys.unpack(y.data(), duration, state);
    state.time += duration;
    return res;
}

} // namespace spinsim

#pragma once

#include "spinsim/lineshape.hpp"
#include "spinsim/params.hpp"
#include "spinsim/radau.hpp"

#include <complex>
#include <map>
#include <string>
#include <vector>

namespace spinsim {

using cplx = std::complex<double>;

// Per-spin normalized Bloch variables: s_plus = 2<J+>/N0, s_z = 2<Jz>/N0.
struct BlochState {
    cplx s_plus{0.0, 0.0};
    double s_z = -1.0; // south pole

    double norm2() const { return std::norm(s_plus) + s_z * s_z; }
};

// Lab-frame ensemble of ion groups. weights are normalized spin fractions
// w_j/N0 (sum = 1); all collective rates carry the N0 factors instead.
struct EnsembleState {
    std::vector<cplx> s_plus;
    std::vector<double> s_z;
    OffsetSet offsets;            // Hz
    std::vector<double> weights;  // normalized, sum = 1
    double time = 0.0;            // s

    std::size_t size() const { return s_plus.size(); }
    void validate() const;

    // Collective mean transverse field, sum_j w_j s_plus_j (fixed-order
    // pairwise reduction; recomputed, never cached).
    cplx mean_s_plus() const;
    double mean_s_z() const;
};

// Uniform ensemble at the south pole with the given offsets.
EnsembleState make_ensemble(const OffsetSet& offsets);

// Rotation by angle about the equatorial axis at azimuth axis_azimuth,
// exactly orthogonal (norm preserved to machine precision).
void apply_rotation(BlochState& state, double axis_azimuth, double angle);
void apply_rotation(EnsembleState& state, double axis_azimuth, double angle);

struct Trajectory {
    std::vector<double> times;                              // s
    std::map<std::string, std::vector<double>> columns;     // observable -> values
    void validate() const;                                  // no NaN/Inf, ascending times
};

// ---------------------------------------------------------------------------
// Collective superradiance (on resonance, cavity eliminated):
//   d s+/dt = (pi/2) gamma_c s+ s_z
//   d s_z/dt = -(pi/2) gamma_c |s+|^2 - (pi/2) gamma_sr_single s_z
// Rates in Hz; the pi/2 factors are the single Hz->angular boundary
// (Gamma^ang/4 = (pi/2) * gamma per-Hz).
class CollectiveSystem final : public BlockOdeSystem {
public:
    CollectiveSystem(double gamma_c_hz, double gamma_sr_single_hz);

    std::size_t n_blocks() const override { return 1; }
    int block_dim() const override { return 3; }
    void rhs(double t, int stage, const double* y, double* f) override;
    void block_jacobian(double t, const double* y, std::size_t block, double* jac) override;

    static void pack(const BlochState& s, double* y);
    static BlochState unpack(const double* y);

private:
    double gca_4_; // 2*pi*gamma_c / 4
    double gsa_4_; // 2*pi*gamma_sr_single / 4
};

// ---------------------------------------------------------------------------
// Dispersive per-group mean-field dynamics with all-to-all exchange.
// Lab frame, per group j with sbar+ = sum_k w_k s+_k:
//   d s+_j/dt = (-i X + G) sbar+ s_z_j + (i d_j - g2) s+_j
//   d s_z_j/dt = -X Im(sbar+ s-_j) - G Re(sbar+ s-_j) - (gs/4) s_z_j
// where X = 2*pi*chi_n, G = 2*pi*gamma_c/4, d_j = 2*pi*offset_j,
// g2 = 2*pi*gamma_2, gs = 2*pi*gamma_sr_single.
//
// Internally the state is integrated in the per-group rotating frame
// u_j = exp(-i d_j t) s+_j, which removes the stiff diagonal offset term; the
// collective field is reassembled with explicit phases at each stage time.
// The serial and OpenMP paths share one fixed-order pairwise reduction and
// are bit-identical.
class DispersiveSystem final : public BlockOdeSystem {
public:
    struct Rates {
        double chi_n = 0.0;           // Hz
        double gamma_c = 0.0;         // Hz
        double gamma_sr_single = 0.0; // Hz
        double gamma_2 = 0.0;         // Hz
    };

    DispersiveSystem(std::vector<double> offsets_hz, std::vector<double> weights, Rates rates,
                     bool parallel = true);

    static DispersiveSystem from_params(const EnsembleState& s, const DerivedRates& r,
                                        double gamma_2_hz, bool parallel = true);

    std::size_t n_blocks() const override { return n_; }
    int block_dim() const override { return 3; }
    void prepare_step(double t0, double h) override;
    void rhs(double t, int stage, const double* y, double* f) override;
    void prepare_jacobian(double t, const double* y) override;
    void block_jacobian(double t, const double* y, std::size_t block, double* jac) override;

    // Straight-line serial reference of the same rotating-frame RHS, kept for
    // testing and benchmarking against the OpenMP path.
    void rhs_reference(double t, const double* y, double* f) const;

    // State packing: y = [re u_j, im u_j, s_z_j] per group, rotating frame
    // with t measured from the segment start.
    void pack(const EnsembleState& s, std::vector<double>& y) const; // at segment t=0
    void unpack(const double* y, double t, EnsembleState& s) const;  // applies phases

    // Mean lab-frame transverse field at local time t for rotating-frame y.
    cplx mean_s_plus(double t, const double* y) const;
    double mean_s_z(const double* y) const;

    const std::vector<double>& offsets_hz() const { return offsets_hz_; }

private:
    void stage_phases(double t, std::vector<cplx>& out) const;
    const std::vector<cplx>& phases_for(double t, int stage);
    void rhs_impl(double t, const std::vector<cplx>& ph, const double* y, double* f,
                  bool parallel) const;

    std::size_t n_;
    std::vector<double> offsets_hz_;
    std::vector<double> offsets_ang_;
    std::vector<double> weights_;
    double chi_n_a_, gc4_a_, gs4_a_, g2_a_;
    bool parallel_;

    // per-step cached phase tables: stage 0..2 at t0+c_i*h, index 3 at t0
    std::vector<cplx> phase_cache_[4];
    double phase_cache_t_[4] = {0, 0, 0, 0};
    bool phase_cache_valid_[4] = {false, false, false, false};
    mutable std::vector<cplx> contrib_;
    // cached by prepare_jacobian for the block_jacobian loop
    std::vector<cplx> jac_w_; // e^{-i d_j t} sbar+ per group
};

// ---------------------------------------------------------------------------
// Integration wrappers.

struct IntegrationResult {
    RadauStats stats;
};

// Integrates the collective state in place over duration seconds, sampling
// record_grid (local times in [0, duration]) through on_sample(t, state).
IntegrationResult integrate_collective(BlochState& state, double gamma_c_hz,
                                       double gamma_sr_single_hz, double duration,
                                       const RadauOptions& opt = {},
                                       std::span<const double> record_grid = {},
                                       const std::function<void(double, const BlochState&)>& on_sample = {});

// Integrates the ensemble in place over duration seconds (lab-frame state;
// rotating frame used internally). record times are local to the segment.
IntegrationResult integrate_dispersive(EnsembleState& state, const DispersiveSystem::Rates& rates,
                                       double duration, const RadauOptions& opt = {},
                                       std::span<const double> record_grid = {},
                                       const std::function<void(double, cplx, double)>& on_sample = {},
                                       bool parallel = true);

} // namespace spinsim

#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace spinsim {

// ODE system with block-structured state: nb blocks of bd components each.
// The Newton iteration of the implicit solver uses per-block Jacobians with
// any inter-block (mean-field) coupling frozen; the residual always uses the
// full right-hand side, so the converged solution is exact.
class BlockOdeSystem {
public:
    virtual ~BlockOdeSystem() = default;

    virtual std::size_t n_blocks() const = 0;
    virtual int block_dim() const = 0;
    std::size_t dim() const { return n_blocks() * static_cast<std::size_t>(block_dim()); }

    // Called once per trial step before stage evaluations; stage times are
    // t0 + c_i*h. Lets systems cache time-dependent tables per stage.
    virtual void prepare_step(double /*t0*/, double /*h*/) {}

    // stage: 0..2 for the Radau nodes of the current step, -1 for evaluations
    // at the step start time (also used for the error-estimate refinement).
    virtual void rhs(double t, int stage, const double* y, double* f) = 0;

    // Called serially once before the (possibly parallel) block_jacobian loop;
    // systems cache shared quantities (mean fields, phase tables) here.
    virtual void prepare_jacobian(double /*t*/, const double* /*y*/) {}

    // bd x bd row-major. Evaluated at the step start (stage -1 context).
    // Must be safe to call concurrently for distinct blocks after
    // prepare_jacobian.
    virtual void block_jacobian(double t, const double* y, std::size_t block, double* jac) = 0;
};

struct RadauOptions {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double h_init = 0.0;  // 0 = automatic
    double h_max = 0.0;   // 0 = integration span
    long max_steps = 50'000'000;
};

struct RadauStats {
    long n_steps = 0;
    long n_accepted = 0;
    long n_rejected = 0;
    long n_rhs = 0;
    long n_jac = 0;
    long n_factor = 0;
};

using SampleFn = std::function<void(double t, std::span<const double> y)>;

// Integrates y from t0 to t1 in place. sample_times must be ascending within
// [t0, t1]; each is evaluated from the collocation polynomial (dense output)
// and passed to on_sample. Throws NumericalError on step-size underflow,
// repeated singularity, or NaN/Inf states.
RadauStats radau5_integrate(BlockOdeSystem& sys, std::span<double> y, double t0, double t1,
                            const RadauOptions& opt = {},
                            std::span<const double> sample_times = {},
                            const SampleFn& on_sample = {});

} // namespace spinsim

#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace spinsim {

struct ModelSpec {
    // residual(params) -> r; the fit minimizes |r|^2
    std::function<std::vector<double>(std::span<const double>)> residual;
    std::vector<std::string> names;
    std::vector<double> guess;
    std::vector<double> lower; // empty = unbounded
    std::vector<double> upper;
    std::vector<bool> fixed;   // empty = all free
    std::string model_id;

    void validate(std::size_t data_len) const;
};

struct FitResult {
    std::vector<double> params;
    std::vector<double> sigma;   // 1-sigma from the Jacobian covariance; 0 for fixed
    double residual_norm = 0.0;  // sqrt(sum r^2)
    int n_iterations = 0;
    bool converged = false;
    std::string model_id;
    std::vector<std::string> flags;

    bool has_flag(const std::string& f) const;
};

// Damped Gauss-Newton (Levenberg) descent with central-difference Jacobian.
// Deterministic: fixed iteration order, no stochastic restarts.
FitResult least_squares(const ModelSpec& model, double tol = 1e-10, int max_iter = 200);

// Simple closed-form helpers ------------------------------------------------

struct LineFit {
    double slope = 0.0, intercept = 0.0;
    double slope_sigma = 0.0, intercept_sigma = 0.0;
    double residual_norm = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

// y = a * x^b via exact linear fit in log-log space; x, y must be > 0.
struct PowerLawFit {
    double prefactor = 0.0, exponent = 0.0, exponent_sigma = 0.0;
};
PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y);

// Sinusoid a + b*sin(phi - phi0): exact linear fit in the (1, cos, sin)
// basis. Returns offset, amplitude (>= 0), phase phi0, and phase sigma.
struct SinusoidFit {
    double offset = 0.0, amplitude = 0.0, phase = 0.0, phase_sigma = 0.0;
    double residual_rms = 0.0;
};
SinusoidFit fit_sinusoid(std::span<const double> phi, std::span<const double> y);

// Trace-model fits ----------------------------------------------------------

struct ExponentialFamilyFit {
    FitResult fit;            // selected model ("exp_single" or "exp_double")
    bool double_selected = false;
    double t_1e = std::numeric_limits<double>::infinity(); // 1/e time of the selected model
    // components, T_fast <= T_slow (single: both equal T)
    double T_fast = 0.0, T_slow = 0.0;
    double aicc_single = 0.0, aicc_double = 0.0;
};

// C(t) = A exp(-t/T), optionally A1 exp(-t/T1) + A2 exp(-t/T2). The double
// model is selected only when its corrected-AIC improvement exceeds 10 and
// the two constants differ by more than 5%.
ExponentialFamilyFit fit_exponential_family(std::span<const double> times,
                                            std::span<const double> values,
                                            bool allow_double = true, double tol = 1e-12);

struct Sech2Fit {
    FitResult fit;
    double gamma_c = 0.0;   // Hz
    double t_d = 0.0;       // s
    double amplitude = 0.0;
};

// I(t) = A sech^2(Gamma_c^ang (t - t_d)/4), Gamma_c^ang = 2 pi gamma_c.
Sech2Fit fit_sech2_burst(std::span<const double> times, std::span<const double> values,
                         double tol = 1e-12);

} // namespace spinsim

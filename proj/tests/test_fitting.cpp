#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "spinsim/constants.hpp"
#include "spinsim/errors.hpp"
#include "spinsim/fitting.hpp"

using namespace spinsim;
using constants::two_pi;

TEST_CASE("line fit recovers exact slope and intercept") {
    std::vector<double> x, y;
    for (int i = 0; i < 20; ++i) {
        x.push_back(0.3 * i);
        y.push_back(2.5 * x.back() - 1.25);
    }
    const LineFit f = fit_line(x, y);
    CHECK(f.slope == doctest::Approx(2.5).epsilon(1e-13));
    CHECK(f.intercept == doctest::Approx(-1.25).epsilon(1e-12));
    CHECK(f.residual_norm < 1e-12);
}

TEST_CASE("power-law fit recovers the exponent") {
    std::vector<double> x, y;
    for (int i = 1; i <= 10; ++i) {
        x.push_back(1e7 * i);
        y.push_back(3.7e-9 * std::pow(x.back(), 2.0));
    }
    const PowerLawFit f = fit_power_law(x, y);
    CHECK(f.exponent == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(f.prefactor == doctest::Approx(3.7e-9).epsilon(1e-10));
    CHECK_THROWS_AS(fit_power_law(std::vector<double>{-1.0, 1.0}, std::vector<double>{1.0, 1.0}),
                    FitError);
}

TEST_CASE("sinusoid fit recovers offset, amplitude, and phase") {
    std::vector<double> phi, y;
    const double a = 0.5, b = 0.37, p0 = 1.234;
    for (int i = 0; i < 24; ++i) {
        phi.push_back(two_pi * i / 23.0);
        y.push_back(a + b * std::sin(phi.back() - p0));
    }
    const SinusoidFit f = fit_sinusoid(phi, y);
    CHECK(f.offset == doctest::Approx(a).epsilon(1e-12));
    CHECK(f.amplitude == doctest::Approx(b).epsilon(1e-12));
    CHECK(f.phase == doctest::Approx(p0).epsilon(1e-12));
    CHECK(f.residual_rms < 1e-13);
}

TEST_CASE("least_squares solves a nonlinear model with bounds") {
    // y = p0 * exp(-p1 * x), p1 bounded away from the true value fails,
    // unbounded succeeds
    std::vector<double> x, y;
    for (int i = 0; i < 30; ++i) {
        x.push_back(0.1 * i);
        y.push_back(2.0 * std::exp(-1.3 * x.back()));
    }
    ModelSpec m;
    m.model_id = "decay";
    m.guess = {1.0, 0.5};
    m.residual = [&](std::span<const double> p) {
        std::vector<double> r(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            r[i] = p[0] * std::exp(-p[1] * x[i]) - y[i];
        return r;
    };
    const FitResult f = least_squares(m, 1e-14);
    CHECK(f.converged);
    CHECK(f.params[0] == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(f.params[1] == doctest::Approx(1.3).epsilon(1e-8));
    CHECK(f.sigma[0] < 1e-6);

    // fixed mask pins a parameter
    ModelSpec m2 = m;
    m2.fixed = {true, false};
    const FitResult f2 = least_squares(m2, 1e-14);
    CHECK(f2.params[0] == 1.0);
    CHECK(f2.sigma[0] == 0.0);

    // deterministic: identical inputs, identical outputs
    const FitResult f3 = least_squares(m, 1e-14);
    CHECK(f3.params == f.params);
}

TEST_CASE("exponential family prefers single for a clean single exponential") {
    std::vector<double> t, y;
    for (int i = 0; i < 60; ++i) {
        t.push_back(1e-5 * i);
        y.push_back(0.98 * std::exp(-t.back() / 2.3e-4));
    }
    const ExponentialFamilyFit f = fit_exponential_family(t, y);
    CHECK_FALSE(f.double_selected);
    CHECK(f.t_1e == doctest::Approx(2.3e-4).epsilon(1e-6));
    CHECK(f.T_fast == f.T_slow);
}

TEST_CASE("exponential family selects the double model for two timescales") {
    std::vector<double> t, y;
    for (int i = 0; i < 120; ++i) {
        t.push_back(2e-5 * i);
        y.push_back(0.6 * std::exp(-t.back() / 5e-5) + 0.4 * std::exp(-t.back() / 1.2e-3));
    }
    const ExponentialFamilyFit f = fit_exponential_family(t, y);
    CHECK(f.double_selected);
    CHECK(f.T_fast == doctest::Approx(5e-5).epsilon(1e-3));
    CHECK(f.T_slow == doctest::Approx(1.2e-3).epsilon(1e-3));
    CHECK(f.aicc_single - f.aicc_double > 10.0);
    // 1/e time lies between the two components
    CHECK(f.t_1e > f.T_fast);
    CHECK(f.t_1e < f.T_slow);
}

TEST_CASE("near-equal double-exponential components collapse to single") {
    std::vector<double> t, y;
    for (int i = 0; i < 80; ++i) {
        t.push_back(1e-5 * i);
        // T2 within 5% of T1: the selection rule must treat this as single
        y.push_back(0.5 * std::exp(-t.back() / 2.0e-4) + 0.5 * std::exp(-t.back() / 2.04e-4));
    }
    const ExponentialFamilyFit f = fit_exponential_family(t, y);
    CHECK_FALSE(f.double_selected);
}

TEST_CASE("sech^2 burst fit recovers rate, delay, and amplitude") {
    const double gamma_c = 136363.63636363638, td = 3.2e-6, amp = 4.4e12;
    std::vector<double> t, y;
    for (int i = 0; i <= 400; ++i) {
        t.push_back(2e-5 * i / 400.0);
        const double c = std::cosh(two_pi * gamma_c / 4.0 * (t.back() - td));
        y.push_back(amp / (c * c));
    }
    const Sech2Fit f = fit_sech2_burst(t, y);
    CHECK(f.fit.converged);
    CHECK(f.gamma_c == doctest::Approx(gamma_c).epsilon(1e-7));
    CHECK(f.t_d == doctest::Approx(td).epsilon(1e-7));
    CHECK(f.amplitude == doctest::Approx(amp).epsilon(1e-7));

    // time-axis shift equivariance: t_d shifts, rate unchanged
    std::vector<double> ts = t;
    for (double& v : ts) v += 7e-6;
    const Sech2Fit g = fit_sech2_burst(ts, y);
    CHECK(g.gamma_c == doctest::Approx(f.gamma_c).epsilon(1e-9));
    CHECK(g.t_d - f.t_d == doctest::Approx(7e-6).epsilon(1e-9));
}

TEST_CASE("degenerate fit inputs raise FitError") {
    CHECK_THROWS_AS(fit_line(std::vector<double>{1.0}, std::vector<double>{1.0}), FitError);
    CHECK_THROWS_AS(fit_sinusoid(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 2.0}),
                    FitError);
    ModelSpec empty;
    CHECK_THROWS_AS(least_squares(empty), FitError);
}

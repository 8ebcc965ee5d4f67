#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "spinsim/errors.hpp"
#include "spinsim/radau.hpp"

using namespace spinsim;

namespace {

// k independent linear decay blocks: y' = -lambda_b * y, 3 components each.
struct DecaySystem final : public BlockOdeSystem {
    std::vector<double> lambdas;
    explicit DecaySystem(std::vector<double> l) : lambdas(std::move(l)) {}
    std::size_t n_blocks() const override { return lambdas.size(); }
    int block_dim() const override { return 3; }
    void rhs(double, int, const double* y, double* f) override {
        for (std::size_t b = 0; b < lambdas.size(); ++b)
            for (int k = 0; k < 3; ++k) f[3 * b + k] = -lambdas[b] * y[3 * b + k];
    }
    void block_jacobian(double, const double*, std::size_t b, double* jac) override {
        for (int i = 0; i < 9; ++i) jac[i] = 0.0;
        jac[0] = jac[4] = jac[8] = -lambdas[b];
    }
};

// Stiff Robertson-like block with an oscillatory forcing:
//   y0' = -1e4 (y0 - cos t), y1' = -y1 + y0, y2' = 0
struct StiffSystem final : public BlockOdeSystem {
    std::size_t n_blocks() const override { return 1; }
    int block_dim() const override { return 3; }
    void rhs(double t, int, const double* y, double* f) override {
        f[0] = -1e4 * (y[0] - std::cos(t));
        f[1] = -y[1] + y[0];
        f[2] = 0.0;
    }
    void block_jacobian(double, const double*, std::size_t, double* jac) override {
        for (int i = 0; i < 9; ++i) jac[i] = 0.0;
        jac[0] = -1e4;
        jac[3] = 1.0;
        jac[4] = -1.0;
    }
};

} // namespace

TEST_CASE("linear decay matches the exponential to tolerance") {
    DecaySystem sys({1.0, 10.0, 250.0});
    std::vector<double> y(9, 1.0);
    RadauOptions opt;
    opt.rel_tol = 1e-10;
    opt.abs_tol = 1e-12;
    const RadauStats st = radau5_integrate(sys, y, 0.0, 2.0, opt);
    for (std::size_t b = 0; b < 3; ++b) {
        const double exact = std::exp(-sys.lambdas[b] * 2.0);
        for (int k = 0; k < 3; ++k)
            CHECK(std::abs(y[3 * b + k] - exact) < 1e-9 * (1.0 + exact));
    }
    CHECK(st.n_accepted > 0);
    CHECK(st.n_rhs > 0);
}

TEST_CASE("dense output samples land on the exponential") {
    DecaySystem sys({3.0});
    std::vector<double> y(3, 2.0);
    std::vector<double> grid;
    for (int i = 0; i <= 40; ++i) grid.push_back(i * 0.05);
    std::vector<double> ts;
    std::vector<double> vals;
    RadauOptions opt;
    opt.rel_tol = 1e-9;
    opt.abs_tol = 1e-11;
    radau5_integrate(sys, y, 0.0, 2.0, opt, grid, [&](double t, std::span<const double> s) {
        ts.push_back(t);
        vals.push_back(s[0]);
    });
    REQUIRE(ts.size() == grid.size());
    for (std::size_t i = 0; i < ts.size(); ++i)
        CHECK(std::abs(vals[i] - 2.0 * std::exp(-3.0 * ts[i])) < 1e-7);
}

TEST_CASE("stiff transient is handled without step-count blow-up") {
    StiffSystem sys;
    std::vector<double> y = {2.0, 0.0, 1.0};
    RadauOptions opt;
    opt.rel_tol = 1e-8;
    opt.abs_tol = 1e-10;
    const RadauStats st = radau5_integrate(sys, y, 0.0, 5.0, opt);
    // slaved variable relaxes onto cos t (up to O(1e-4) phase lag terms)
    CHECK(std::abs(y[0] - std::cos(5.0)) < 1e-3);
    CHECK(y[2] == 1.0); // untouched constant component
    CHECK(st.n_steps < 2000); // explicit methods would need ~1e4 * 5 steps
}

TEST_CASE("invalid spans and tolerances are config errors") {
    DecaySystem sys({1.0});
    std::vector<double> y(3, 1.0);
    RadauOptions opt;
    opt.rel_tol = 0.0;
    CHECK_THROWS_AS(radau5_integrate(sys, y, 0.0, 1.0, opt), ConfigError);
    RadauOptions opt2;
    CHECK_THROWS_AS(radau5_integrate(sys, y, 1.0, 0.5, opt2), ConfigError);
}

TEST_CASE("step-budget exhaustion raises a numerical error") {
    StiffSystem sys;
    std::vector<double> y = {2.0, 0.0, 1.0};
    RadauOptions opt;
    opt.max_steps = 3;
    CHECK_THROWS_AS(radau5_integrate(sys, y, 0.0, 5.0, opt), NumericalError);
}

TEST_CASE("integration is exactly repeatable") {
    auto run = [] {
        DecaySystem sys({1.0, 10.0, 250.0});
        std::vector<double> y(9, 1.0);
        RadauOptions opt;
        radau5_integrate(sys, y, 0.0, 2.0, opt);
        return y;
    };
    CHECK(run() == run());
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spinsim/constants.hpp"
#include "spinsim/errors.hpp"
#include "spinsim/params.hpp"

using namespace spinsim;

namespace {
PhysicalParams fig3_params() {
    PhysicalParams p;
    p.n0 = 1e8;
    p.g = 150e3 / std::sqrt(p.n0); // g_coll = 150 kHz
    p.kappa = 660e3;
    p.delta = 22e6;
    p.gamma_2 = 0.0;
    return p;
}
} // namespace

TEST_CASE("derived rates at the dispersive operating point") {
    const DerivedRates r = derive_rates(fig3_params());
    CHECK(r.chi == doctest::Approx(1.0224972108548303e-05).epsilon(1e-14));
    CHECK(r.gamma_sr_single == doctest::Approx(3.0674916325644912e-07).epsilon(1e-14));
    CHECK(r.chi_n == doctest::Approx(1022.4972108548303).epsilon(1e-14));
    CHECK(r.gamma_c == doctest::Approx(30.674916325644912).epsilon(1e-14));
    CHECK(r.gap == r.chi_n);
    CHECK(r.g_coll == doctest::Approx(150e3).epsilon(1e-14));
    // interaction-to-dissipation ratio chi_n/gamma_c = delta/kappa
    CHECK(r.chi_n / r.gamma_c == doctest::Approx(22e6 / 660e3).epsilon(1e-12));
}

TEST_CASE("chi is odd and gamma_sr even in the detuning") {
    PhysicalParams p = fig3_params();
    const DerivedRates plus = derive_rates(p);
    p.delta = -p.delta;
    const DerivedRates minus = derive_rates(p);
    CHECK(minus.chi == -plus.chi);
    CHECK(minus.gamma_sr_single == plus.gamma_sr_single);
}

TEST_CASE("on resonance chi vanishes and gamma_sr = 4 g^2 / kappa") {
    PhysicalParams p = fig3_params();
    p.delta = 0.0;
    const DerivedRates r = derive_rates(p);
    CHECK(r.chi == 0.0);
    CHECK(r.gamma_sr_single == doctest::Approx(4.0 * p.g * p.g / p.kappa).epsilon(1e-14));
}

TEST_CASE("kappa = 0 with delta = 0 is rejected") {
    PhysicalParams p;
    p.g = 1.0;
    p.kappa = 0.0;
    p.delta = 0.0;
    p.n0 = 1.0;
    CHECK_THROWS_AS(derive_rates(p), ConfigError);
}

TEST_CASE("validate rejects bad parameter blocks") {
    PhysicalParams p = fig3_params();
    p.kappa = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = fig3_params();
    p.n0 = -1.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = fig3_params();
    p.gamma_inh = -1.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = fig3_params();
    p.kappa_out = 2.0 * p.kappa;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("single-ion coupling from resonator field constants") {
    // g_par = 1.08, V_m = 275 mm^3, omega_s/2pi = 3.08385 GHz
    const double g = single_ion_coupling(1.08, 275e-9, 3.08385e9);
    CHECK(g == doctest::Approx(0.016330651799994893).epsilon(1e-12));
    // quoted calibration value ~15 mHz, within 15%
    CHECK(std::abs(g - 15e-3) / 15e-3 < 0.15);
    CHECK_THROWS_AS(single_ion_coupling(1.08, 0.0, 3.08385e9), ConfigError);
    CHECK_THROWS_AS(single_ion_coupling(1.08, 275e-9, -1.0), ConfigError);
}

TEST_CASE("n0_from_coupling inverts g_coll = g sqrt(n0)") {
    CHECK(n0_from_coupling(150e3, 150e3 / std::sqrt(1e8)) == doctest::Approx(1e8).epsilon(1e-12));
    CHECK_THROWS_AS(n0_from_coupling(1.0, 0.0), ConfigError);
}

TEST_CASE("g_coll_for_chi_n round-trips through derive_rates") {
    const double g_coll = g_coll_for_chi_n(7e3, 22e6, 660e3);
    PhysicalParams p = fig3_params();
    p.g = g_coll / std::sqrt(p.n0);
    CHECK(derive_rates(p).chi_n == doctest::Approx(7e3).epsilon(1e-12));
    CHECK_THROWS_AS(g_coll_for_chi_n(1.0, 0.0, 660e3), ConfigError);
    CHECK_THROWS_AS(g_coll_for_chi_n(-1.0, 22e6, 660e3), ConfigError);
}

TEST_CASE("default gamma_2 is 1/(pi T2) at T2 = 150 ms") {
    CHECK(default_gamma_2() == doctest::Approx(2.1220659078919377).epsilon(1e-15));
}

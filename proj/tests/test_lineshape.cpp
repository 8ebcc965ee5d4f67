#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>

#include "spinsim/constants.hpp"
#include "spinsim/errors.hpp"
#include "spinsim/lineshape.hpp"

using namespace spinsim;
using constants::two_pi;

TEST_CASE("quantiles of the unit-FWHM distributions") {
    Lineshape g{LineKind::Gaussian, 1.0, 0.0};
    CHECK(lineshape_quantile(g, 0.5) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(lineshape_quantile(g, 0.75) == doctest::Approx(0.2864294244561762).epsilon(1e-12));
    CHECK(lineshape_quantile(g, 0.9) == doctest::Approx(0.54422484140513472).epsilon(1e-12));

    Lineshape l{LineKind::Lorentzian, 1.0, 0.0};
    CHECK(lineshape_quantile(l, 0.75) == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(lineshape_quantile(l, 0.9) == doctest::Approx(1.5388417685876266).epsilon(1e-12));
    // antisymmetry
    CHECK(lineshape_quantile(l, 0.1) == doctest::Approx(-lineshape_quantile(l, 0.9)).epsilon(1e-13));
}

TEST_CASE("quantile offset sets are sorted and exactly antisymmetric") {
    Lineshape shape{LineKind::PseudoVoigt, 5e3, 0.3};
    for (std::size_t n : {101, 1000, 4097}) {
        const OffsetSet s = sample_offsets(shape, n, OffsetStrategy::Quantile);
        REQUIRE(s.offsets.size() == n);
        CHECK(std::is_sorted(s.offsets.begin(), s.offsets.end()));
        for (std::size_t i = 0; i < n; ++i)
            CHECK(s.offsets[i] == -s.offsets[n - 1 - i]); // bit-exact mirror
        if (n % 2 == 1) CHECK(s.offsets[n / 2] == 0.0);
    }
}

TEST_CASE("pseudo-Voigt eta endpoints are bit-exact pure components") {
    Lineshape pv0{LineKind::PseudoVoigt, 5e3, 0.0};
    Lineshape pv1{LineKind::PseudoVoigt, 5e3, 1.0};
    Lineshape g{LineKind::Gaussian, 5e3, 0.0};
    Lineshape l{LineKind::Lorentzian, 5e3, 0.0};
    const auto a = sample_offsets(pv0, 501, OffsetStrategy::Quantile).offsets;
    const auto b = sample_offsets(g, 501, OffsetStrategy::Quantile).offsets;
    CHECK(a == b);
    const auto c = sample_offsets(pv1, 501, OffsetStrategy::Quantile).offsets;
    const auto d = sample_offsets(l, 501, OffsetStrategy::Quantile).offsets;
    CHECK(c == d);
}

TEST_CASE("random offsets: seeded reproducibility and truncation") {
    Lineshape shape{LineKind::Lorentzian, 5e3, 0.0};
    const OffsetSet a = sample_offsets(shape, 5000, OffsetStrategy::Random, 42);
    const OffsetSet b = sample_offsets(shape, 5000, OffsetStrategy::Random, 42);
    const OffsetSet c = sample_offsets(shape, 5000, OffsetStrategy::Random, 43);
    CHECK(a.offsets == b.offsets);
    CHECK(a.offsets != c.offsets);
    const double bound = truncation_fwhm_multiple * shape.fwhm;
    for (double d : a.offsets) CHECK(std::abs(d) <= bound);
    CHECK(a.truncation_probability > 0.0);
    CHECK(a.truncation_probability < 1e-2);
}

TEST_CASE("random Gaussian offsets have the right spread") {
    Lineshape shape{LineKind::Gaussian, 5e3, 0.0};
    const OffsetSet s = sample_offsets(shape, 20000, OffsetStrategy::Random, 7);
    double m = 0.0, v = 0.0;
    for (double d : s.offsets) m += d;
    m /= s.offsets.size();
    for (double d : s.offsets) v += (d - m) * (d - m);
    v /= s.offsets.size();
    const double sigma = 5e3 / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    CHECK(std::abs(m) < 3.0 * sigma / std::sqrt(20000.0));
    CHECK(std::sqrt(v) == doctest::Approx(sigma).epsilon(0.03));
}

TEST_CASE("free-dephasing coherence oracles at fwhm 5 kHz") {
    Lineshape g{LineKind::Gaussian, 5e3, 0.0};
    Lineshape l{LineKind::Lorentzian, 5e3, 0.0};
    Lineshape pv{LineKind::PseudoVoigt, 5e3, 0.3};
    CHECK(free_dephasing_coherence(g, 5e-5) == doctest::Approx(0.80052964974220675).epsilon(1e-12));
    CHECK(free_dephasing_coherence(l, 5e-5) == doctest::Approx(0.45593812776599618).epsilon(1e-12));
    CHECK(free_dephasing_coherence(g, 2e-4) == doctest::Approx(0.028447149087636472).epsilon(1e-12));
    CHECK(free_dephasing_coherence(l, 2e-4) == doctest::Approx(0.043213918263772237).epsilon(1e-12));
    CHECK(free_dephasing_coherence(pv, 5e-5) ==
          doctest::Approx(0.7 * 0.80052964974220675 + 0.3 * 0.45593812776599618).epsilon(1e-12));
    CHECK(free_dephasing_coherence(g, 0.0) == 1.0);
}

TEST_CASE("quantile ensemble reproduces the dephasing envelope") {
    // the discrete-offset mean of exp(i 2 pi d t) must track the transform
    Lineshape shape{LineKind::Gaussian, 5e3, 0.0};
    const OffsetSet s = sample_offsets(shape, 10000, OffsetStrategy::Quantile);
    for (double t : {2e-5, 5e-5, 1e-4, 2e-4}) {
        std::complex<double> acc{0.0, 0.0};
        for (double d : s.offsets) acc += std::exp(std::complex<double>(0.0, two_pi * d * t));
        const double c = std::abs(acc) / static_cast<double>(s.offsets.size());
        CHECK(std::abs(c - free_dephasing_coherence(shape, t)) < 1e-3);
    }
}

TEST_CASE("validation") {
    Lineshape bad{LineKind::Gaussian, -1.0, 0.0};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    Lineshape bad2{LineKind::PseudoVoigt, 1.0, 1.5};
    CHECK_THROWS_AS(bad2.validate(), ConfigError);
    Lineshape ok{LineKind::PseudoVoigt, 1.0, 0.3};
    CHECK(ok.eta() == 0.3);
    Lineshape gg{LineKind::Gaussian, 1.0, 0.9}; // fraction ignored for pure kinds
    CHECK(gg.eta() == 0.0);
    CHECK_THROWS_AS(sample_offsets(ok, 0, OffsetStrategy::Quantile), ConfigError);
}

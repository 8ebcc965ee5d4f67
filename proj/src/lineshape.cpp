#include "spinsim/lineshape.hpp"

#include "spinsim/constants.hpp"
#include "spinsim/errors.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace spinsim {

namespace {

constexpr double ln2 = 0.6931471805599453094172321214581766;

// FWHM -> Gaussian sigma
double gaussian_sigma(double fwhm) { return fwhm / (2.0 * std::sqrt(2.0 * ln2)); }

double gaussian_quantile(double fwhm, double p) {
    return gaussian_sigma(fwhm) * std::sqrt(2.0) * boost::math::erf_inv(2.0 * p - 1.0);
}

double lorentzian_quantile(double fwhm, double p) {
    return 0.5 * fwhm * std::tan(constants::pi * (p - 0.5));
}

// Symmetric set of m midpoint quantiles of one component, sorted ascending.
// Built from the upper half and mirrored so the set is exactly antisymmetric.
std::vector<double> symmetric_quantiles(double fwhm, std::size_t m, bool lorentzian) {
    std::vector<double> q(m);
    const std::size_t half = m / 2;
    for (std::size_t k = 0; k < half; ++k) {
        const double p = (static_cast<double>(m - k) - 0.5) / static_cast<double>(m);
        const double v = lorentzian ? lorentzian_quantile(fwhm, p) : gaussian_quantile(fwhm, p);
        q[m - 1 - k] = v;
        q[k] = -v;
    }
    if (m % 2 == 1) q[half] = 0.0;
    return q;
}

// Uniform double in (0,1) from one engine draw, identical on all platforms.
double canonical_u(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

} // namespace

void Lineshape::validate() const {
    if (!(fwhm > 0.0)) throw ConfigError("lineshape: fwhm must be > 0");
    if (kind == LineKind::PseudoVoigt &&
        !(lorentzian_fraction >= 0.0 && lorentzian_fraction <= 1.0))
        throw ConfigError("lineshape: lorentzian_fraction must lie in [0,1]");
}

double Lineshape::eta() const {
    switch (kind) {
        case LineKind::Gaussian: return 0.0;
        case LineKind::Lorentzian: return 1.0;
        case LineKind::PseudoVoigt: return lorentzian_fraction;
    }
    return 0.0;
}

double lineshape_quantile(const Lineshape& shape, double p) {
    shape.validate();
    if (!(p > 0.0 && p < 1.0))
        throw ConfigError("lineshape_quantile: p must lie in (0,1)");
    switch (shape.kind) {
        case LineKind::Gaussian: return gaussian_quantile(shape.fwhm, p);
        case LineKind::Lorentzian: return lorentzian_quantile(shape.fwhm, p);
        case LineKind::PseudoVoigt:
            // Mixture quantile has no closed form; only the pure components are
            // exposed here. Sampling uses the per-component quantiles directly.
            throw ConfigError("lineshape_quantile: PseudoVoigt has no closed-form quantile; "
                              "use sample_offsets");
    }
    return 0.0;
}

OffsetSet sample_offsets(const Lineshape& shape, std::size_t n, OffsetStrategy strategy,
                         std::uint64_t seed) {
    shape.validate();
    if (n == 0) throw ConfigError("sample_offsets: n must be >= 1");

    const double eta = shape.eta();
    OffsetSet out;
    out.strategy = strategy;
    out.seed = seed;

    if (strategy == OffsetStrategy::Quantile) {
        const auto m_lor = static_cast<std::size_t>(std::llround(eta * static_cast<double>(n)));
        const std::size_t m_gau = n - m_lor;
        const auto ql = symmetric_quantiles(shape.fwhm, m_lor, true);
        const auto qg = symmetric_quantiles(shape.fwhm, m_gau, false);
        out.offsets.resize(n);
        std::merge(ql.begin(), ql.end(), qg.begin(), qg.end(), out.offsets.begin());
        return out;
    }

    const double bound = truncation_fwhm_multiple * shape.fwhm;
    // Analytic probability mass removed by the +-bound truncation.
    const double p_lor_tail = 1.0 - (2.0 / constants::pi) * std::atan(bound / (0.5 * shape.fwhm));
    const double p_gau_tail = std::erfc(bound / (gaussian_sigma(shape.fwhm) * std::sqrt(2.0)));
    out.truncation_probability = eta * p_lor_tail + (1.0 - eta) * p_gau_tail;

    std::mt19937_64 rng(seed);
    out.offsets.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        double d;
        do {
            const bool lorentzian = canonical_u(rng) < eta;
            const double p = canonical_u(rng);
            d = lorentzian ? lorentzian_quantile(shape.fwhm, p) : gaussian_quantile(shape.fwhm, p);
        } while (std::abs(d) > bound);
        out.offsets[j] = d;
    }
    return out;
}

double free_dephasing_coherence(const Lineshape& shape, double t) {
    shape.validate();
    if (!(t >= 0.0)) throw ConfigError("free_dephasing_coherence: t must be >= 0");
    const double x = constants::pi * shape.fwhm * t;
    const double c_gauss = std::exp(-x * x / (4.0 * ln2));
    const double c_lor = std::exp(-x);
    const double eta = shape.eta();
    return (1.0 - eta) * c_gauss + eta * c_lor;
}

} // namespace spinsim

#pragma once

#include <cstdint>
#include <vector>

namespace spinsim {

enum class LineKind { Gaussian, Lorentzian, PseudoVoigt };

// Inhomogeneous frequency-offset distribution. PseudoVoigt is the two-component
// mixture (1-eta)*Gaussian + eta*Lorentzian, all components sharing one FWHM.
struct Lineshape {
    LineKind kind = LineKind::Gaussian;
    double fwhm = 0.0;                 // Hz
    double lorentzian_fraction = 0.0;  // eta in [0,1], PseudoVoigt only

    void validate() const;
    // Effective eta: 0 for Gaussian, 1 for Lorentzian, eta for PseudoVoigt.
    double eta() const;
};

enum class OffsetStrategy { Quantile, Random };

struct OffsetSet {
    std::vector<double> offsets;  // Hz
    OffsetStrategy strategy = OffsetStrategy::Quantile;
    std::uint64_t seed = 0;
    // Fraction of the distribution removed by tail truncation (Random mode).
    double truncation_probability = 0.0;
};

// Random-mode offsets are rejection-sampled into +-truncation_fwhm_multiple*fwhm.
inline constexpr double truncation_fwhm_multiple = 50.0;

// Quantile of the ideal distribution at p in (0,1).
double lineshape_quantile(const Lineshape& shape, double p);

// Quantile strategy: deterministic symmetric set, round(eta*n) Lorentzian
// quantile points and the rest Gaussian quantile points, merged sorted.
// Random strategy: i.i.d. inverse-CDF draws from the mixture, bit-reproducible
// for a fixed seed, truncated at +-50*fwhm.
OffsetSet sample_offsets(const Lineshape& shape, std::size_t n, OffsetStrategy strategy,
                         std::uint64_t seed = 0);

// Free-dephasing coherence envelope, the Fourier transform of the lineshape:
//   Gaussian:   exp(-(pi fwhm t)^2 / (4 ln 2))
//   Lorentzian: exp(-pi fwhm t)
//   PseudoVoigt: (1-eta)*C_gauss + eta*C_lorentz
double free_dephasing_coherence(const Lineshape& shape, double t);

} // namespace spinsim

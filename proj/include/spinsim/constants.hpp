#pragma once

namespace spinsim::constants {

// CODATA 2018
inline constexpr double mu_bohr = 9.2740100783e-24;     // J/T
inline constexpr double hbar = 1.054571817e-34;         // J s
inline constexpr double mu0 = 1.25663706212e-6;         // N/A^2
inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr double two_pi = 2.0 * pi;

} // namespace spinsim::constants

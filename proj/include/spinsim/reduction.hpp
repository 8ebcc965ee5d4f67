#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace spinsim {

// Fixed-order pairwise tree sum. The association order depends only on the
// array length, never on thread count, so parallel and serial callers that
// fill the leaf array identically get bit-identical sums.
template <typename T>
T pairwise_sum(std::span<const T> v) {
    const std::size_t n = v.size();
    if (n <= 8) {
        T s{};
        for (const auto& x : v) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

inline double pairwise_sum(std::span<const double> v) { return pairwise_sum<double>(v); }
inline std::complex<double> pairwise_sum(std::span<const std::complex<double>> v) {
    return pairwise_sum<std::complex<double>>(v);
}

} // namespace spinsim

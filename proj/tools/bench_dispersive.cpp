// Benchmark: OpenMP dispersive RHS / integration vs the serial reference.
// Usage: bench_dispersive [n_groups] [repeats]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "spinsim/dynamics.hpp"
#include "spinsim/lineshape.hpp"

using namespace spinsim;

namespace {

double now() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

} // namespace

int main(int argc, char** argv) {
    const std::size_t n = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 20000;
    const int repeats = argc > 2 ? std::atoi(argv[2]) : 200;

    Lineshape shape{LineKind::Gaussian, 5e3, 0.0};
    EnsembleState state = make_ensemble(sample_offsets(shape, n, OffsetStrategy::Quantile));
    apply_rotation(state, 0.0, 1.5707963267948966);

    DispersiveSystem::Rates rates;
    rates.chi_n = 2e3;
    rates.gamma_c = 50.0;
    rates.gamma_sr_single = 50.0 / 1e8;
    rates.gamma_2 = 2.0;

    DispersiveSystem par(state.offsets.offsets, state.weights, rates, true);
    DispersiveSystem ser(state.offsets.offsets, state.weights, rates, false);
    std::vector<double> y(3 * n), f(3 * n), fr(3 * n);
    par.pack(state, y);
    ser.pack(state, y);

#ifdef _OPENMP
    std::printf("n_groups %zu, omp_max_threads %d\n", n, omp_get_max_threads());
#else
    std::printf("n_groups %zu, OpenMP disabled\n", n);
#endif

    // RHS comparison (also checks bit-identity of the two paths)
    par.prepare_step(0.0, 1e-5);
    ser.prepare_step(0.0, 1e-5);
    double t0 = now();
    for (int r = 0; r < repeats; ++r) par.rhs(1e-6, -1, y.data(), f.data());
    const double t_par = (now() - t0) / repeats;
    t0 = now();
    for (int r = 0; r < repeats; ++r) ser.rhs_reference(1e-6, y.data(), fr.data());
    const double t_ser = (now() - t0) / repeats;
    bool identical = true;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] != fr[i]) identical = false;
    std::printf("rhs: parallel %.3e s, serial %.3e s, speedup %.2fx, bit-identical %s\n",
                t_par, t_ser, t_ser / t_par, identical ? "yes" : "no");

    // short integration comparison
    EnsembleState s1 = state, s2 = state;
    t0 = now();
    integrate_dispersive(s1, rates, 2e-4, {}, {}, {}, true);
    const double ti_par = now() - t0;
    t0 = now();
    integrate_dispersive(s2, rates, 2e-4, {}, {}, {}, false);
    const double ti_ser = now() - t0;
    const bool same = s1.mean_s_plus() == s2.mean_s_plus() && s1.mean_s_z() == s2.mean_s_z();
    std::printf("integrate 0.2 ms: parallel %.3f s, serial %.3f s, speedup %.2fx, "
                "bit-identical %s\n",
                ti_par, ti_ser, ti_ser / ti_par, same ? "yes" : "no");
    return 0;
}

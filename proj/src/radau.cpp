#include "spinsim/radau.hpp"

#include "spinsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

namespace spinsim {

namespace {

using cplx = std::complex<double>;

constexpr double uround = std::numeric_limits<double>::epsilon();

// LU with partial pivoting for small dense d x d systems, row-major.
template <typename T>
bool lu_factor(T* a, int* piv, int d) {
    for (int k = 0; k < d; ++k) {
        int p = k;
        double amax = std::abs(a[k * d + k]);
        for (int i = k + 1; i < d; ++i) {
            const double v = std::abs(a[i * d + k]);
            if (v > amax) { amax = v; p = i; }
        }
        if (amax == 0.0) return false;
        piv[k] = p;
        if (p != k)
            for (int j = 0; j < d; ++j) std::swap(a[k * d + j], a[p * d + j]);
        const T pivval = a[k * d + k];
        for (int i = k + 1; i < d; ++i) {
            const T m = a[i * d + k] / pivval;
            a[i * d + k] = m;
            for (int j = k + 1; j < d; ++j) a[i * d + j] -= m * a[k * d + j];
        }
    }
    return true;
}

template <typename T>
void lu_solve(const T* a, const int* piv, int d, T* b) {
    for (int k = 0; k < d; ++k) {
        if (piv[k] != k) std::swap(b[k], b[piv[k]]);
        for (int i = k + 1; i < d; ++i) b[i] -= a[i * d + k] * b[k];
    }
    for (int i = d - 1; i >= 0; --i) {
        for (int j = i + 1; j < d; ++j) b[i] -= a[i * d + j] * b[j];
        b[i] /= a[i * d + i];
    }
}

// Radau IIA order 5 method constants (Hairer & Wanner formulation).
const double sq6 = std::sqrt(6.0);
const double c1 = (4.0 - sq6) / 10.0;
const double c2 = (4.0 + sq6) / 10.0;
const double c1m1 = c1 - 1.0;
const double c2m1 = c2 - 1.0;
const double c1mc2 = c1 - c2;

const double t11 = 9.1232394870892942792e-02;
const double t12 = -0.14125529502095420843;
const double t13 = -3.0029194105147424492e-02;
const double t21 = 0.24171793270710701896;
const double t22 = 0.20412935229379993199;
const double t23 = 0.38294211275726193779;
const double t31 = 0.96604818261509293619;

const double ti11 = 4.3255798900631553510;
const double ti12 = 0.33919925181580986954;
const double ti13 = 0.54177053993587487119;
const double ti21 = -4.1787185915519047273;
const double ti22 = -0.32768282076106238708;
const double ti23 = 0.47662355450055045196;
const double ti31 = -0.50287263494578687595;
const double ti32 = 2.5719269498556054292;
const double ti33 = -0.59603920482822492497;

struct MethodRoots {
    double u1, alph, beta;
    MethodRoots() {
        const double cbrt81 = std::pow(81.0, 1.0 / 3.0);
        const double cbrt9 = std::pow(9.0, 1.0 / 3.0);
        u1 = 30.0 / (6.0 + cbrt81 - cbrt9);
        double a = (12.0 - cbrt81 + cbrt9) / 60.0;
        double b = (cbrt81 + cbrt9) * std::sqrt(3.0) / 60.0;
        const double cno = a * a + b * b;
        alph = a / cno;
        beta = b / cno;
    }
};
const MethodRoots roots;

const double dd1 = -(13.0 + 7.0 * sq6) / 3.0;
const double dd2 = (-13.0 + 7.0 * sq6) / 3.0;
const double dd3 = -1.0 / 3.0;

} // namespace

RadauStats radau5_integrate(BlockOdeSystem& sys, std::span<double> y, double t0, double t1,
                            const RadauOptions& opt, std::span<const double> sample_times,
                            const SampleFn& on_sample) {
    const std::size_t nb = sys.n_blocks();
    const int bd = sys.block_dim();
    const std::size_t n = nb * static_cast<std::size_t>(bd);
    if (y.size() != n) throw NumericalError("radau5: state size mismatch");
    if (!(opt.rel_tol > 0.0 && opt.abs_tol > 0.0))
        throw ConfigError("radau5: tolerances must be > 0");
    if (!std::isfinite(t0) || !std::isfinite(t1) || t1 < t0)
        throw ConfigError("radau5: invalid t_span");

    RadauStats stats;

    std::size_t sample_idx = 0;
    auto emit_current_state = [&](double t) {
        if (on_sample) on_sample(t, std::span<const double>(y.data(), n));
    };
    while (sample_idx < sample_times.size() && sample_times[sample_idx] <= t0) {
        emit_current_state(t0);
        ++sample_idx;
    }
    const double span = t1 - t0;
    if (span == 0.0) return stats;

    const double rtol = opt.rel_tol, atol = opt.abs_tol;
    const double hmaxn = (opt.h_max > 0.0) ? std::min(opt.h_max, span) : span;
    const int nit = 7;
    const double fnewt = std::max(10.0 * uround / rtol, std::min(0.03, std::sqrt(rtol)));
    const double safe = 0.9;
    const double cfac = safe * (1 + 2 * nit);
    const double thet = 0.001;
    const double quot1 = 1.0, quot2 = 1.2;
    const double facl = 5.0, facr = 0.125; // h may grow 8x, shrink 5x per step

    std::vector<double> z1(n), z2(n), z3(n), f1(n), f2(n), f3(n);
    std::vector<double> y0v(n), scal(n), cont(4 * n), tmp(n);
    std::vector<double> jac(nb * bd * bd), e1(nb * bd * bd);
    std::vector<cplx> e2(nb * bd * bd);
    std::vector<int> ip1(nb * bd), ip2(nb * bd);
    std::vector<double> zb(bd);
    std::vector<cplx> zbc(bd);

    double x = t0;
    double h = (opt.h_init > 0.0) ? opt.h_init : std::max(1e-6 * span, 1e4 * uround * span);
    h = std::min(h, hmaxn);
    double hold = h;
    double xold = x;
    bool last = false, first = true, reject = false, caljac = false;
    double fac1 = 0.0, alphn = 0.0, betan = 0.0;
    double faccon = 1.0, theta = 0.0, hhfac = h;
    int nsing = 0;
    double err = 0.0;

    auto update_scal = [&] {
        for (std::size_t i = 0; i < n; ++i) scal[i] = atol + rtol * std::abs(y[i]);
    };
    update_scal();

    auto check_finite = [&](const std::vector<double>& v) {
        for (double a : v)
            if (!std::isfinite(a)) return false;
        return true;
    };

    if (x + h * 1.0001 >= t1) { h = t1 - x; last = true; }

    sys.prepare_step(x, 0.0);
    sys.rhs(x, -1, y.data(), y0v.data());
    ++stats.n_rhs;
    if (!check_finite(y0v)) throw NumericalError("radau5: non-finite rhs at start", x);

    auto compute_jacobian = [&] {
        ++stats.n_jac;
        sys.prepare_jacobian(x, y.data());
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b)
            sys.block_jacobian(x, y.data(), static_cast<std::size_t>(b),
                               jac.data() + b * bd * bd);
        caljac = true;
    };
    compute_jacobian();

    bool need_factor = true;

    while (true) {
        if (need_factor) {
            fac1 = roots.u1 / h;
            alphn = roots.alph / h;
            betan = roots.beta / h;
            bool singular = false;
            ++stats.n_factor;
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
                double* e1b = e1.data() + b * bd * bd;
                cplx* e2b = e2.data() + b * bd * bd;
                const double* jb = jac.data() + b * bd * bd;
                for (int i = 0; i < bd * bd; ++i) {
                    e1b[i] = -jb[i];
                    e2b[i] = cplx(-jb[i], 0.0);
                }
                for (int i = 0; i < bd; ++i) {
                    e1b[i * bd + i] += fac1;
                    e2b[i * bd + i] += cplx(alphn, betan);
                }
                bool ok = lu_factor(e1b, ip1.data() + b * bd, bd) &&
                          lu_factor(e2b, ip2.data() + b * bd, bd);
                if (!ok) {
#pragma omp atomic write
                    singular = true;
                }
            }
            if (singular) {
                if (++nsing >= 5) throw NumericalError("radau5: matrix repeatedly singular", x);
                h *= 0.5; hhfac = 0.5; reject = true; last = false;
                if (!caljac) compute_jacobian();
                continue;
            }
            need_factor = false;
        }

        ++stats.n_steps;
        if (stats.n_steps >= opt.max_steps)
            throw NumericalError("radau5: step limit exceeded", x);
        if (0.1 * std::abs(h) <= std::abs(x) * uround + 1e-300)
            throw NumericalError("radau5: step size underflow", x);

        const double xph = x + h;
        sys.prepare_step(x, h);

        // Newton starting values: zero on the first step, otherwise the
        // collocation polynomial of the previous step extrapolated.
        if (first) {
            std::fill(z1.begin(), z1.end(), 0.0);
            std::fill(z2.begin(), z2.end(), 0.0);
            std::fill(z3.begin(), z3.end(), 0.0);
            std::fill(f1.begin(), f1.end(), 0.0);
            std::fill(f2.begin(), f2.end(), 0.0);
            std::fill(f3.begin(), f3.end(), 0.0);
        } else {
            const double c3q = h / hold;
            const double c1q = c1 * c3q;
            const double c2q = c2 * c3q;
            for (std::size_t i = 0; i < n; ++i) {
                const double ak1 = cont[i + n];
                const double ak2 = cont[i + 2 * n];
                const double ak3 = cont[i + 3 * n];
                z1[i] = c1q * (ak1 + (c1q - c2m1) * (ak2 + (c1q - c1m1) * ak3));
                z2[i] = c2q * (ak1 + (c2q - c2m1) * (ak2 + (c2q - c1m1) * ak3));
                z3[i] = c3q * (ak1 + (c3q - c2m1) * (ak2 + (c3q - c1m1) * ak3));
                f1[i] = ti11 * z1[i] + ti12 * z2[i] + ti13 * z3[i];
                f2[i] = ti21 * z1[i] + ti22 * z2[i] + ti23 * z3[i];
                f3[i] = ti31 * z1[i] + ti32 * z2[i] + ti33 * z3[i];
            }
        }

        // Simplified Newton iteration.
        int newt = 0;
        faccon = std::pow(std::max(faccon, uround), 0.8);
        theta = std::abs(thet);
        double dyno = 0.0, dynold = 0.0, thqold = 0.0;
        bool newton_failed = false, step_retry = false;

        while (true) {
            if (newt >= nit) { newton_failed = true; break; }

            for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + z1[i];
            sys.rhs(x + c1 * h, 0, tmp.data(), z1.data());
            for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + z2[i];
            sys.rhs(x + c2 * h, 1, tmp.data(), z2.data());
            for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + z3[i];
            sys.rhs(xph, 2, tmp.data(), z3.data());
            stats.n_rhs += 3;

            // Transform, subtract the linear part, and solve per block.
            for (std::size_t i = 0; i < n; ++i) {
                const double a1 = z1[i], a2 = z2[i], a3 = z3[i];
                z1[i] = ti11 * a1 + ti12 * a2 + ti13 * a3 - fac1 * f1[i];
                z2[i] = ti21 * a1 + ti22 * a2 + ti23 * a3 - (alphn * f2[i] - betan * f3[i]);
                z3[i] = ti31 * a1 + ti32 * a2 + ti33 * a3 - (alphn * f3[i] + betan * f2[i]);
            }
#pragma omp parallel for schedule(static) firstprivate(zbc)
            for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
                const std::size_t off = static_cast<std::size_t>(b) * bd;
                lu_solve(e1.data() + b * bd * bd, ip1.data() + off, bd, z1.data() + off);
                for (int i = 0; i < bd; ++i) zbc[i] = cplx(z2[off + i], z3[off + i]);
                lu_solve(e2.data() + b * bd * bd, ip2.data() + off, bd, zbc.data());
                for (int i = 0; i < bd; ++i) {
                    z2[off + i] = zbc[i].real();
                    z3[off + i] = zbc[i].imag();
                }
            }
            ++newt;

            dyno = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = scal[i];
                dyno += (z1[i] / d) * (z1[i] / d) + (z2[i] / d) * (z2[i] / d) +
                        (z3[i] / d) * (z3[i] / d);
            }
            dyno = std::sqrt(dyno / (3.0 * static_cast<double>(n)));
            if (!std::isfinite(dyno)) { newton_failed = true; break; }

            if (newt > 1 && newt < nit) {
                const double thq = dyno / dynold;
                theta = (newt == 2) ? thq : std::sqrt(thq * thqold);
                thqold = thq;
                if (theta < 0.99) {
                    faccon = theta / (1.0 - theta);
                    const double dyth =
                        faccon * dyno * std::pow(theta, nit - 1 - newt) / fnewt;
                    if (dyth >= 1.0) {
                        const double qnewt = std::max(1.0e-4, std::min(20.0, dyth));
                        hhfac = 0.8 * std::pow(qnewt, -1.0 / (4.0 + nit - 1 - newt));
                        h *= hhfac;
                        reject = true; last = false;
                        need_factor = true;
                        step_retry = true;
                        break;
                    }
                } else { newton_failed = true; break; }
            }
            dynold = std::max(dyno, uround);
            for (std::size_t i = 0; i < n; ++i) {
                f1[i] += z1[i];
                f2[i] += z2[i];
                f3[i] += z3[i];
                z1[i] = t11 * f1[i] + t12 * f2[i] + t13 * f3[i];
                z2[i] = t21 * f1[i] + t22 * f2[i] + t23 * f3[i];
                z3[i] = t31 * f1[i] + f2[i];
            }
            if (faccon * dyno <= fnewt) break;
        }

        if (newton_failed) {
            if (++nsing >= 25) throw NumericalError("radau5: Newton repeatedly failing", x);
            h *= 0.5; hhfac = 0.5; reject = true; last = false;
            if (!caljac) compute_jacobian();
            need_factor = true;
            continue;
        }
        if (step_retry) continue;

        // Error estimate: err = || (E1)^{-1} (f0 + sum dd_i Z_i / h) || (scaled).
        {
            const double hee1 = dd1 / h, hee2 = dd2 / h, hee3 = dd3 / h;
            for (std::size_t i = 0; i < n; ++i) {
                f3[i] = hee1 * z1[i] + hee2 * z2[i] + hee3 * z3[i]; // reused as scratch
                tmp[i] = f3[i] + y0v[i];
            }
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b)
                lu_solve(e1.data() + b * bd * bd, ip1.data() + b * bd, bd,
                         tmp.data() + b * bd);
            err = 0.0;
            for (std::size_t i = 0; i < n; ++i) err += (tmp[i] / scal[i]) * (tmp[i] / scal[i]);
            err = std::max(std::sqrt(err / static_cast<double>(n)), 1.0e-10);
            if (!std::isfinite(err)) err = 2.0;

            if (err >= 1.0 && (first || reject)) {
                for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + tmp[i];
                sys.rhs(x, -1, tmp.data(), z1.data()); // scratch
                ++stats.n_rhs;
                for (std::size_t i = 0; i < n; ++i) tmp[i] = z1[i] + f3[i];
#pragma omp parallel for schedule(static)
                for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b)
                    lu_solve(e1.data() + b * bd * bd, ip1.data() + b * bd, bd,
                             tmp.data() + b * bd);
                err = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    err += (tmp[i] / scal[i]) * (tmp[i] / scal[i]);
                err = std::max(std::sqrt(err / static_cast<double>(n)), 1.0e-10);
                if (!std::isfinite(err)) err = 2.0;
            }
        }

        const double fac = std::min(safe, cfac / (newt + 2 * nit));
        double quot = std::max(facr, std::min(facl, std::pow(err, 0.25) / fac));
        double hnew = h / quot;

        if (err < 1.0) {
            // accept
            first = false;
            ++stats.n_accepted;
            xold = x;
            hold = h;
            x = xph;
            for (std::size_t i = 0; i < n; ++i) {
                y[i] += z3[i];
                cont[i + n] = (z2[i] - z3[i]) / c2m1;
                const double ak = (z1[i] - z2[i]) / c1mc2;
                double acont3 = z1[i] / c1;
                acont3 = (ak - acont3) / c2;
                cont[i + 2 * n] = (ak - cont[i + n]) / c1m1;
                cont[i + 3 * n] = cont[i + 2 * n] - acont3;
                cont[i] = y[i];
            }
            for (std::size_t i = 0; i < n; ++i)
                if (!std::isfinite(y[i]))
                    throw NumericalError("radau5: non-finite state", x);
            update_scal();

            // Dense output on the sample grid.
            while (sample_idx < sample_times.size() &&
                   (sample_times[sample_idx] <= x || (last && sample_times[sample_idx] <= x + 1e-12 * std::abs(x)))) {
                const double ts = std::min(sample_times[sample_idx], x);
                if (on_sample) {
                    const double s = (ts - x) / hold;
                    for (std::size_t i = 0; i < n; ++i)
                        tmp[i] = cont[i] +
                                 s * (cont[i + n] +
                                      (s - c2m1) * (cont[i + 2 * n] + (s - c1m1) * cont[i + 3 * n]));
                    on_sample(ts, std::span<const double>(tmp.data(), n));
                }
                ++sample_idx;
            }

            caljac = false;
            if (last) break;

            sys.prepare_step(x, 0.0);
            sys.rhs(x, -1, y.data(), y0v.data());
            ++stats.n_rhs;
            hnew = std::min(std::abs(hnew), hmaxn);
            const double hopt = std::min(h, hnew);
            if (reject) hnew = std::min(hnew, h);
            reject = false;

            if (x + hnew / quot1 >= t1) {
                h = t1 - x;
                last = true;
                need_factor = true;
            } else {
                const double qt = hnew / h;
                hhfac = h;
                if (theta <= thet && qt >= quot1 && qt <= quot2) {
                    // keep the step size and factorization
                    need_factor = false;
                } else {
                    h = hnew;
                    hhfac = h;
                    need_factor = true;
                }
                if (theta > thet) compute_jacobian();
            }
            (void)hopt;
        } else {
            // reject
            reject = true;
            last = false;
            ++stats.n_rejected;
            if (first) { h *= 0.1; hhfac = 0.1; }
            else { hhfac = hnew / h; h = hnew; }
            if (!caljac) compute_jacobian();
            need_factor = true;
        }
    }

    // Flush any samples at exactly t1 (grid round-off).
    while (sample_idx < sample_times.size() && sample_times[sample_idx] <= t1 + 1e-9 * std::max(1.0, std::abs(t1))) {
        emit_current_state(t1);
        ++sample_idx;
    }
    if (sample_idx < sample_times.size())
        throw NumericalError("radau5: sample time beyond t_span", t1);
    return stats;
}

} // namespace spinsim

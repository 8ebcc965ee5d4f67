#include "spinsim/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spinsim/constants.hpp"
#include "spinsim/errors.hpp"

namespace spinsim {

using constants::two_pi;

namespace {

double clamp_bounded(double v, double lo, double hi) {
    if (v < lo) return lo;
    if (v > hi) return hi;
    return v;
}

double norm2(const std::vector<double>& r) {
    double s = 0.0;
    for (double v : r) s += v * v;
    return s;
}

// Normal-equation solve with Cholesky; returns false if not SPD.
bool cholesky_solve(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0)) return false;
        d = std::sqrt(d);
        a[j * n + j] = d;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / d;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * b[k];
        b[ii] = s / a[ii * n + ii];
    }
    return true;
}

} // namespace

void ModelSpec::validate(std::size_t data_len) const {
    if (!residual) throw FitError("model has no residual function");
    const std::size_t np = guess.size();
    if (np == 0) throw FitError("model has no parameters");
    if (!names.empty() && names.size() != np) throw FitError("names/guess size mismatch");
    if (!lower.empty() && lower.size() != np) throw FitError("lower/guess size mismatch");
    if (!upper.empty() && upper.size() != np) throw FitError("upper/guess size mismatch");
    if (!fixed.empty() && fixed.size() != np) throw FitError("fixed/guess size mismatch");
    std::size_t nfree = 0;
    for (std::size_t i = 0; i < np; ++i)
        if (fixed.empty() || !fixed[i]) ++nfree;
    if (data_len > 0 && data_len < nfree)
        throw FitError("fewer residuals than free parameters");
}

bool FitResult::has_flag(const std::string& f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

FitResult least_squares(const ModelSpec& model, double tol, int max_iter) {
    model.validate(0);
    const std::size_t np = model.guess.size();
    std::vector<double> p = model.guess;
    std::vector<double> r0 = model.residual(p);
    model.validate(r0.size());
    const std::size_t m = r0.size();
    if (m == 0) throw FitError("empty residual vector");

    std::vector<std::size_t> free_idx;
    for (std::size_t i = 0; i < np; ++i)
        if (model.fixed.empty() || !model.fixed[i]) free_idx.push_back(i);
    const std::size_t nf = free_idx.size();

    auto lo = [&](std::size_t i) {
        return model.lower.empty() ? -std::numeric_limits<double>::infinity() : model.lower[i];
    };
    auto hi = [&](std::size_t i) {
        return model.upper.empty() ? std::numeric_limits<double>::infinity() : model.upper[i];
    };
    for (std::size_t i = 0; i < np; ++i) p[i] = clamp_bounded(p[i], lo(i), hi(i));
    r0 = model.residual(p);

    FitResult out;
    out.model_id = model.model_id;
    out.params = p;
    out.sigma.assign(np, 0.0);

    double cost = norm2(r0);
    double lambda = 1e-3;
    std::vector<double> jac(m * nf); // column-major by free parameter
    std::vector<double> jtj(nf * nf), jtr(nf), step(nf);
    bool converged = false;
    int it = 0;

    for (; it < max_iter; ++it) {
        // central-difference Jacobian
        for (std::size_t c = 0; c < nf; ++c) {
            const std::size_t i = free_idx[c];
            const double h = std::max(std::abs(p[i]), 1.0) * 1e-7;
            std::vector<double> pp = p, pm = p;
            pp[i] = clamp_bounded(p[i] + h, lo(i), hi(i));
            pm[i] = clamp_bounded(p[i] - h, lo(i), hi(i));
            const double dh = pp[i] - pm[i];
            if (dh == 0.0) {
                std::fill(jac.begin() + c * m, jac.begin() + (c + 1) * m, 0.0);
                continue;
            }
            std::vector<double> rp = model.residual(pp);
            std::vector<double> rm = model.residual(pm);
            for (std::size_t k = 0; k < m; ++k) jac[c * m + k] = (rp[k] - rm[k]) / dh;
        }
        for (std::size_t a = 0; a < nf; ++a) {
            for (std::size_t b = a; b < nf; ++b) {
                double s = 0.0;
                for (std::size_t k = 0; k < m; ++k) s += jac[a * m + k] * jac[b * m + k];
                jtj[a * nf + b] = jtj[b * nf + a] = s;
            }
            double s = 0.0;
            for (std::size_t k = 0; k < m; ++k) s += jac[a * m + k] * r0[k];
            jtr[a] = s;
        }
        double gmax = 0.0;
        for (double g : jtr) gmax = std::max(gmax, std::abs(g));
        if (gmax < tol * (1.0 + cost)) {
            converged = true;
            break;
        }

        bool accepted = false;
        for (int trial = 0; trial < 40 && !accepted; ++trial) {
            std::vector<double> a = jtj;
            for (std::size_t d = 0; d < nf; ++d)
                a[d * nf + d] += lambda * std::max(jtj[d * nf + d], 1e-30);
            step = jtr;
            if (!cholesky_solve(a, step, nf)) {
                lambda *= 10.0;
                continue;
            }
            std::vector<double> pc = p;
            for (std::size_t c = 0; c < nf; ++c) {
                const std::size_t i = free_idx[c];
                pc[i] = clamp_bounded(p[i] - step[c], lo(i), hi(i));
            }
            std::vector<double> rc = model.residual(pc);
            const double cc = norm2(rc);
            if (cc < cost) {
                double smax = 0.0;
                for (std::size_t c = 0; c < nf; ++c) {
                    const std::size_t i = free_idx[c];
                    smax = std::max(smax, std::abs(pc[i] - p[i]) /
                                              std::max(std::abs(p[i]), 1.0));
                }
                p = pc;
                r0 = std::move(rc);
                const double drop = cost - cc;
                cost = cc;
                lambda = std::max(lambda * 0.3, 1e-14);
                accepted = true;
                if (smax < tol || drop < tol * (1.0 + cost)) {
                    converged = true;
                    it = it + 1;
                }
            } else {
                lambda *= 10.0;
            }
        }
        if (!accepted) {
            converged = gmax < std::sqrt(tol) * (1.0 + cost);
            break;
        }
        if (converged) break;
    }

    out.params = p;
    out.residual_norm = std::sqrt(cost);
    out.n_iterations = it;
    out.converged = converged;
    if (!converged) out.flags.push_back("not_converged");

    // covariance from the final Jacobian: sigma_i = sqrt(s^2 * (JtJ)^-1_ii)
    if (m > nf) {
        for (std::size_t c = 0; c < nf; ++c) {
            const std::size_t i = free_idx[c];
            const double h = std::max(std::abs(p[i]), 1.0) * 1e-7;
            std::vector<double> pp = p, pm = p;
            pp[i] = clamp_bounded(p[i] + h, lo(i), hi(i));
            pm[i] = clamp_bounded(p[i] - h, lo(i), hi(i));
            const double dh = pp[i] - pm[i];
            if (dh == 0.0) {
                std::fill(jac.begin() + c * m, jac.begin() + (c + 1) * m, 0.0);
                continue;
            }
            std::vector<double> rp = model.residual(pp);
            std::vector<double> rm = model.residual(pm);
            for (std::size_t k = 0; k < m; ++k) jac[c * m + k] = (rp[k] - rm[k]) / dh;
        }
        for (std::size_t a = 0; a < nf; ++a)
            for (std::size_t b = a; b < nf; ++b) {
                double s = 0.0;
                for (std::size_t k = 0; k < m; ++k) s += jac[a * m + k] * jac[b * m + k];
                jtj[a * nf + b] = jtj[b * nf + a] = s;
            }
        const double s2 = cost / static_cast<double>(m - nf);
        // invert via Cholesky column-by-column
        std::vector<double> chol = jtj;
        bool ok = true;
        {
            std::vector<double> probe(nf, 0.0);
            std::vector<double> tmp = chol;
            probe[0] = 1.0;
            ok = cholesky_solve(tmp, probe, nf);
        }
        if (ok) {
            for (std::size_t c = 0; c < nf; ++c) {
                std::vector<double> e(nf, 0.0);
                e[c] = 1.0;
                std::vector<double> tmp = jtj;
                if (!cholesky_solve(tmp, e, nf)) {
                    ok = false;
                    break;
                }
                out.sigma[free_idx[c]] = std::sqrt(std::max(s2 * e[c], 0.0));
            }
        }
        if (!ok) out.flags.push_back("singular_covariance");
    }
    return out;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) throw FitError("fit_line needs >= 2 matched points");
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw FitError("fit_line: degenerate abscissa");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (f.slope * x[i] + f.intercept);
        ss += r * r;
    }
    f.residual_norm = std::sqrt(ss);
    if (n > 2) {
        const double s2 = ss / (n - 2);
        f.slope_sigma = std::sqrt(s2 / sxx);
        f.intercept_sigma = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
    }
    return f;
}

PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) throw FitError("fit_power_law needs >= 2 matched points");
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw FitError("fit_power_law requires positive data");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    const LineFit lf = fit_line(lx, ly);
    PowerLawFit f;
    f.exponent = lf.slope;
    f.exponent_sigma = lf.slope_sigma;
    f.prefactor = std::exp(lf.intercept);
    return f;
}

SinusoidFit fit_sinusoid(std::span<const double> phi, std::span<const double> y) {
    const std::size_t n = phi.size();
    if (n != y.size() || n < 3) throw FitError("fit_sinusoid needs >= 3 matched points");
    // y = a + c*cos(phi) + s*sin(phi); with y = a + b sin(phi - phi0)
    // c = -b sin(phi0), s = b cos(phi0).
    double m[9] = {0}, rhs[3] = {0};
    for (std::size_t i = 0; i < n; ++i) {
        const double basis[3] = {1.0, std::cos(phi[i]), std::sin(phi[i])};
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) m[a * 3 + b] += basis[a] * basis[b];
            rhs[a] += basis[a] * y[i];
        }
    }
    std::vector<double> a(m, m + 9), b(rhs, rhs + 3);
    if (!cholesky_solve(a, b, 3)) throw FitError("fit_sinusoid: degenerate phase grid");
    SinusoidFit f;
    f.offset = b[0];
    const double c = b[1], s = b[2];
    f.amplitude = std::hypot(c, s);
    f.phase = std::atan2(-c, s);
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (b[0] + c * std::cos(phi[i]) + s * std::sin(phi[i]));
        ss += r * r;
    }
    f.residual_rms = std::sqrt(ss / n);
    if (n > 3 && f.amplitude > 0.0) {
        const double s2 = ss / (n - 3);
        // phase variance ~ sigma^2 / (amplitude^2 * n/2) on a uniform grid
        f.phase_sigma = std::sqrt(2.0 * s2 / (f.amplitude * f.amplitude * n));
    }
    return f;
}

namespace {

double aicc(double rss, std::size_t n, std::size_t k) {
    const double nn = static_cast<double>(n);
    double v = nn * std::log(std::max(rss, 1e-300) / nn) + 2.0 * k;
    if (n > k + 1) v += 2.0 * k * (k + 1.0) / (nn - k - 1.0);
    return v;
}

double one_over_e_time_double(double a1, double t1, double a2, double t2) {
    // solve a1 e^{-t/t1} + a2 e^{-t/t2} = (a1+a2)/e by bisection
    const double target = (a1 + a2) / std::exp(1.0);
    auto f = [&](double t) { return a1 * std::exp(-t / t1) + a2 * std::exp(-t / t2) - target; };
    double lo = 0.0, hi = std::max(t1, t2);
    while (f(hi) > 0.0) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

ExponentialFamilyFit fit_exponential_family(std::span<const double> times,
                                            std::span<const double> values,
                                            bool allow_double, double tol) {
    const std::size_t n = times.size();
    if (n != values.size() || n < 4) throw FitError("exponential fit needs >= 4 matched points");
    std::vector<double> t(times.begin(), times.end()), y(values.begin(), values.end());
    const double tmax = *std::max_element(t.begin(), t.end());
    const double ymax = *std::max_element(y.begin(), y.end());
    if (!(tmax > 0.0)) throw FitError("exponential fit needs a positive time span");

    // crude T guess from the first crossing of ymax/e
    double t_guess = tmax / 2.0;
    for (std::size_t i = 0; i < n; ++i)
        if (y[i] < ymax / std::exp(1.0)) {
            t_guess = std::max(t[i], tmax * 1e-6);
            break;
        }

    ModelSpec single;
    single.model_id = "exp_single";
    single.names = {"A", "T"};
    single.guess = {ymax, t_guess};
    single.lower = {0.0, tmax * 1e-9};
    single.upper = {10.0 * std::max(ymax, 1.0), 1e6 * tmax};
    single.residual = [&t, &y, n](std::span<const double> p) {
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = p[0] * std::exp(-t[i] / p[1]) - y[i];
        return r;
    };
    FitResult fs = least_squares(single, tol);

    ExponentialFamilyFit out;
    out.aicc_single = aicc(fs.residual_norm * fs.residual_norm, n, 2);

    FitResult fd;
    bool have_double = false;
    if (allow_double && n >= 6) {
        ModelSpec dbl;
        dbl.model_id = "exp_double";
        dbl.names = {"A1", "T1", "A2", "T2"};
        dbl.guess = {0.5 * fs.params[0], 0.3 * fs.params[1], 0.5 * fs.params[0],
                     3.0 * fs.params[1]};
        dbl.lower = {0.0, tmax * 1e-9, 0.0, tmax * 1e-9};
        dbl.upper = {10.0 * std::max(ymax, 1.0), 1e6 * tmax, 10.0 * std::max(ymax, 1.0),
                     1e6 * tmax};
        dbl.residual = [&t, &y, n](std::span<const double> p) {
            std::vector<double> r(n);
            for (std::size_t i = 0; i < n; ++i)
                r[i] = p[0] * std::exp(-t[i] / p[1]) + p[2] * std::exp(-t[i] / p[3]) - y[i];
            return r;
        };
        fd = least_squares(dbl, tol);
        have_double = fd.converged || fd.residual_norm < fs.residual_norm;
        out.aicc_double = aicc(fd.residual_norm * fd.residual_norm, n, 4);
    }

    bool pick_double = false;
    if (have_double && out.aicc_single - out.aicc_double > 10.0) {
        const double T1 = fd.params[1], T2 = fd.params[3];
        // near-equal constants mean the extra component is spurious
        if (std::abs(T1 - T2) > 0.05 * std::max(T1, T2)) pick_double = true;
    }

    if (pick_double) {
        out.fit = fd;
        out.double_selected = true;
        double a1 = fd.params[0], T1 = fd.params[1], a2 = fd.params[2], T2 = fd.params[3];
        if (T1 > T2) {
            std::swap(a1, a2);
            std::swap(T1, T2);
        }
        out.T_fast = T1;
        out.T_slow = T2;
        out.t_1e = one_over_e_time_double(a1, T1, a2, T2);
    } else {
        out.fit = fs;
        out.T_fast = out.T_slow = fs.params[1];
        out.t_1e = fs.params[1];
    }
    return out;
}

Sech2Fit fit_sech2_burst(std::span<const double> times, std::span<const double> values,
                         double tol) {
    const std::size_t n = times.size();
    if (n != values.size() || n < 4) throw FitError("burst fit needs >= 4 matched points");
    std::vector<double> t(times.begin(), times.end()), y(values.begin(), values.end());
    const auto peak = std::max_element(y.begin(), y.end());
    const std::size_t ip = static_cast<std::size_t>(peak - y.begin());
    const double a0 = *peak;
    if (!(a0 > 0.0)) throw FitError("burst fit needs a positive peak");
    const double td0 = t[ip];

    // width guess from the half-max crossing right of the peak
    double w0 = (t.back() - t.front()) / 10.0;
    for (std::size_t i = ip; i < n; ++i)
        if (y[i] < 0.5 * a0) {
            w0 = std::max(t[i] - td0, (t.back() - t.front()) * 1e-6);
            break;
        }
    // sech^2 falls to 1/2 at argument ~0.8814: Gc_ang/4 * w = 0.8814
    const double gc0 = 4.0 * 0.8814 / (w0 * two_pi);

    ModelSpec m;
    m.model_id = "sech2_burst";
    m.names = {"A", "gamma_c", "t_d"};
    m.guess = {a0, gc0, td0};
    m.lower = {0.0, gc0 * 1e-6, t.front() - (t.back() - t.front())};
    m.upper = {100.0 * a0, gc0 * 1e6, t.back() + (t.back() - t.front())};
    m.residual = [&t, &y, n](std::span<const double> p) {
        std::vector<double> r(n);
        const double rate = two_pi * p[1] / 4.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double c = std::cosh(rate * (t[i] - p[2]));
            r[i] = p[0] / (c * c) - y[i];
        }
        return r;
    };
    Sech2Fit out;
    out.fit = least_squares(m, tol);
    out.amplitude = out.fit.params[0];
    out.gamma_c = out.fit.params[1];
    out.t_d = out.fit.params[2];
    return out;
}

} // namespace spinsim

#pragma once

#include <atomic>
#include <cmath>
#include <thread>
#include <utility>
#include <vector>

#include "pantolab/gamma.hpp"
#include "pantolab/series.hpp"

namespace pantolab {

/// Closed-form constants of the leading-order asymptotics.  A, B, C drive
/// the entire-solution expansion; A1, B1 are their general-coefficient
/// counterparts, complex when -a log(lambda) is negative; A2, B2 are the
/// real rewrite used for zero normalization.
struct AsymptoticConstants {
    Real lambda;
    Real A, B, C;
    Complex A1, B1;
    Real A2, B2;
};

/// Saddle point sigma(x) of the contour kernel, with the achieved residual
/// of the stationarity equation.
struct SaddlePoint {
    Real x;
    Complex sigma;
    Real residual;
};

namespace detail {

inline PrecContext ctx_for(prec_t wp) {
    long b = long(wp);
    double t = b - 40 < 1000 ? std::ldexp(1.0, -int(b - 40)) : 1e-300;
    return PrecContext(b, t);
}

inline void check_lambda(const Real& lambda) {
    if (!(lambda > 0L) || !(lambda < 1L))
        throw InvalidInput("asymptotics require 0 < lambda < 1");
}

/// Theta form of the antiperiodic factor, sum_n (-1)^n e^{(n-y)^2 log(lambda)/2},
/// summed over the integers within the Gaussian window around Re y.
inline Complex h_theta(const Complex& y, const Real& L, prec_t wp) {
    double half_width = std::sqrt(2.0 * (double(wp) + 16.0) * 0.6931471805599453 /
                                  -L.to_double()) +
                        std::abs(y.im.to_double()) + 2.0;
    long n_lo = long(std::floor(y.re.to_double() - half_width));
    long n_hi = long(std::ceil(y.re.to_double() + half_width));
    Complex acc(Real(0L, wp), Real(0L, wp));
    for (long n = n_lo; n <= n_hi; ++n) {
        Complex d = Complex(Real(n, wp)) - y;
        Complex term = exp(d * d * L * 0.5);
        acc += (n % 2 == 0) ? term : -term;
    }
    return acc;
}

/// Fourier form of the antiperiodic factor,
/// sqrt(2 pi / -log(lambda)) sum_k e^{(2k+1)^2 pi^2 / (2 log lambda)} e^{i pi (2k+1) y}.
inline Complex h_fourier(const Complex& y, const Real& L, prec_t wp) {
    Real pi = Real::pi(wp);
    Real pref = sqrt(-(pi * 2L) / L);
    Complex acc(Real(0L, wp), Real(0L, wp));
    Real peak(0L, wp);
    for (long k = 0;; ++k) {
        Real m(2 * k + 1, wp);
        Real decay = exp(m * m * pi * pi / (L * 2L));
        Complex osc_p = exp(Complex(Real(0L, wp), m * pi) * y);
        Complex osc_m = exp(Complex(Real(0L, wp), -(m * pi)) * y);
        Complex term = (osc_p + osc_m) * decay;
        acc += term;
        Real tmag = abs(term);
        if (tmag > peak) peak = tmag;
        if (!tmag.is_zero() && !peak.is_zero() &&
            tmag.exponent() < peak.exponent() - long(wp) - 16)
            break;
        if (k > 64 + long(wp)) break;
    }
    return acc * pref;
}

/// Theta form of the period-1 factor, sum_n e^{(n-y)^2 log(lambda)/2}.
inline Complex k_theta(const Complex& y, const Real& L, prec_t wp) {
    double half_width = std::sqrt(2.0 * (double(wp) + 16.0) * 0.6931471805599453 /
                                  -L.to_double()) +
                        std::abs(y.im.to_double()) + 2.0;
    long n_lo = long(std::floor(y.re.to_double() - half_width));
    long n_hi = long(std::ceil(y.re.to_double() + half_width));
    Complex acc(Real(0L, wp), Real(0L, wp));
    for (long n = n_lo; n <= n_hi; ++n) {
        Complex d = Complex(Real(n, wp)) - y;
        acc += exp(d * d * L * 0.5);
    }
    return acc;
}

/// Fourier form of the period-1 factor,
/// sqrt(2 pi / -log(lambda)) sum_k e^{2 k^2 pi^2 / log lambda} e^{2 pi i k y}.
inline Complex k_fourier(const Complex& y, const Real& L, prec_t wp) {
    Real pi = Real::pi(wp);
    Real pref = sqrt(-(pi * 2L) / L);
    Complex acc(Real(1L, wp), Real(0L, wp));
    Real peak(1L, wp);
    for (long k = 1;; ++k) {
        Real m(2 * k, wp);
        Real decay = exp(m * m * pi * pi / (L * 2L));
        Complex osc_p = exp(Complex(Real(0L, wp), m * pi) * y);
        Complex osc_m = exp(Complex(Real(0L, wp), -(m * pi)) * y);
        Complex term = (osc_p + osc_m) * decay;
        acc += term;
        Real tmag = abs(term);
        if (tmag > peak) peak = tmag;
        if (!tmag.is_zero() && tmag.exponent() < peak.exponent() - long(wp) - 16) break;
        if (k > 64 + long(wp)) break;
    }
    return acc * pref;
}

/// Evaluate one periodic factor in both representations and cross-check.
/// The agreement floor sits at the theta form's own term scale, so exact
/// zeros of the factor do not trip the check.
template <class FormA, class FormB>
Complex dual_form_eval(const Complex& y, const Real& L, prec_t wp, FormA&& fa, FormB&& fb,
                       const char* what) {
    Complex va = fa(y, L, wp);
    Complex vb = fb(y, L, wp);
    Real term_scale = exp(y.im * y.im * abs(L) * 0.5) + 1L;
    Real scale = max(max(abs(va), abs(vb)), term_scale);
    if (abs(va - vb) > scale * ldexp(Real(1L, wp), -long(wp) + 24))
        throw Error(std::string(what) + ": theta and Fourier forms disagree");
    return vb;
}

} // namespace detail

/// Antiperiodic modulation factor of period 2 (both dual forms, cross-checked).
inline Real H_eval(const Real& x, const Real& lambda, PrecContext ctx) {
    detail::check_lambda(lambda);
    prec_t wp = ctx.work(48);
    Real L = log(lambda.with_prec(wp));
    Complex v = detail::dual_form_eval(Complex(x.with_prec(wp)), L, wp, detail::h_theta,
                                       detail::h_fourier, "H_eval");
    return v.re;
}

/// Periodic modulation factor of period 1; strictly positive.
inline Real K_eval(const Real& x, const Real& lambda, PrecContext ctx) {
    detail::check_lambda(lambda);
    prec_t wp = ctx.work(48);
    Real L = log(lambda.with_prec(wp));
    Complex v = detail::dual_form_eval(Complex(x.with_prec(wp)), L, wp, detail::k_theta,
                                       detail::k_fourier, "K_eval");
    if (!(v.re > 0L))
        throw Error("K_eval: lost positivity, lambda too extreme for the Fourier tail");
    return v.re;
}

/// All six asymptotic constants for the given lambda and coefficient a.
inline AsymptoticConstants constants(const Real& lambda, const Complex& a, PrecContext ctx) {
    detail::check_lambda(lambda);
    prec_t wp = ctx.work(48);
    Real L = log(lambda.with_prec(wp));
    Real LL = log(-L);
    Real logq = -L;

    Complex arg = Complex(-(a.re), -(a.im)) * L;
    Complex la = log(arg);
    return AsymptoticConstants{
        lambda.with_prec(wp),
        Real(0.5, wp) - 1L / L - LL / L,
        LL / L - 1L,
        exp(Real(0.5, wp) - L / 8L + LL - LL / L - LL * LL / (L * 2L) -
            log(Real::pi(wp) * 2L) / 2L),
        Complex(Real(0.5, wp) - 1L / L) - la / L,
        la / L - 1L,
        Real(0.5, wp) + 1L / logq + log(logq) / logq,
        -1L - log(logq) / logq};
}

/// Solve the stationarity equation (s + 1/2) log(lambda) - x - 1/s + psi(-s) = 0
/// by Newton iteration from the known leading term.
inline SaddlePoint saddle_solve(const Real& x, const Real& lambda, PrecContext ctx,
                                double x_min = 5.0, int max_iter = 50) {
    detail::check_lambda(lambda);
    if (!(x >= x_min))
        throw DomainError("saddle_solve: x below the asymptotic regime");
    prec_t wp = ctx.work(48);
    Real xw = x.with_prec(wp);
    Real L = log(lambda.with_prec(wp));
    Real LL = log(-L);
    Real s = (xw - log(xw)) / L - Real(0.5, wp) + LL / L;
    PrecContext gctx = detail::ctx_for(wp);

    Real tol = max(abs(xw) * ctx.target_rel_err, ldexp(Real(1L, wp), -long(wp) + 8));
    Real res(0L, wp);
    for (int it = 0; it < max_iter; ++it) {
        Real f = (s + 0.5) * L - xw - 1L / s + digamma(-s, gctx);
        res = abs(f);
        if (res <= tol)
            return SaddlePoint{xw, Complex(s), res};
        Real fp = L + 1L / (s * s) - trigamma(-s, gctx);
        Real step = f / fp;
        Real snew = s - step;
        if (!(snew < -0.25)) snew = s / 2L - Real(0.125, wp);
        s = snew;
    }
    throw ConvergenceError("saddle_solve: Newton failed to reach tolerance", s.str());
}

namespace detail {

/// Complex-x variant of the saddle solve, for evaluation off the real ray.
inline Complex saddle_solve_c(const Complex& x, const Real& L, const Real& LL, prec_t wp,
                              int max_iter = 60) {
    Complex s = (x - log(x)) / L - Real(0.5, wp) + LL / L;
    PrecContext gctx = ctx_for(wp);
    Real tol = max(abs(x) * ldexp(Real(1L, wp), -long(wp) + 24), ldexp(Real(1L, wp), -long(wp) + 8));
    for (int it = 0; it < max_iter; ++it) {
        Complex f = (s + 0.5) * L - x - Complex(Real(1L, wp)) / s + digamma(-s, gctx);
        if (abs(f) <= tol) return s;
        Complex fp = Complex(L) + Complex(Real(1L, wp)) / (s * s) - trigamma(-s, gctx);
        s = s - f / fp;
    }
    throw ConvergenceError("saddle refinement failed off the real axis", s.str());
}

enum class PeriodicKind { antiperiodic, periodic };

/// Shared core of the two leading-order evaluators.  `reflected` selects the
/// monotone-direction expansion (period-1 factor); phase_from_saddle swaps
/// the closed-form phase for the numerically solved saddle point.
inline Complex asy_core(const Complex& z, const Real& lambda, bool reflected, PrecContext ctx,
                        double eps, bool phase_from_saddle) {
    check_lambda(lambda);
    if (!z.is_finite()) throw InvalidInput("asymptotic evaluator: non-finite z");
    if (abs(z) < 7.0) throw DomainError("asymptotic evaluator requires |z| >= e^2");
    Real az = arg(z);
    if (abs(az) > Real::pi(az.prec()) - eps)
        throw DomainError("asymptotic evaluator: z outside the angular sector");

    prec_t wp = ctx.work(48);
    Real L = log(lambda.with_prec(wp));
    Real LL = log(-L);
    Complex zw(z.re.with_prec(wp), z.im.with_prec(wp));
    Complex x = log(zw);
    Complex lx = log(x);

    Complex amp(Real(0L, wp), Real(0L, wp));
    Complex phase = amp;
    if (phase_from_saddle) {
        Complex s = saddle_solve_c(x, L, LL, wp);
        PrecContext gctx = ctx_for(wp);
        amp = exp(s * (s + 1L) * L * 0.5 - x * s - log_gamma(Complex(Real(1L, wp)) - s, gctx));
        phase = s;
    } else {
        AsymptoticConstants cs = constants(lambda, Complex(Real(-1L, wp)), detail::ctx_for(wp));
        Complex u = x - lx;
        amp = Complex(cs.C) * pow(zw, Complex(cs.A)) * pow(x, Complex(cs.B)) *
              exp(-(u * u) / (L * 2L));
        phase = u / L - Real(0.5, wp) + LL / L;
    }
    Complex factor = reflected ? dual_form_eval(phase, L, wp, k_theta, k_fourier, "asy_neg")
                               : dual_form_eval(phase, L, wp, h_theta, h_fourier, "asy_pos");
    Complex v = amp * factor;
    if (z.im.is_zero() && z.re > 0L) v.im = Real(0L, wp);
    return v;
}

} // namespace detail

/// Phase convention for the leading-order evaluators: the theorem's closed
/// form, or the numerically solved saddle point (diagnostic).
enum class AsyPhase { closed_form, saddle };

/// Leading-order asymptotic value of g(z) in the sector |Arg z| <= pi - eps.
inline Complex asy_pos(const Complex& z, const Real& lambda, PrecContext ctx, double eps = 0.1,
                       AsyPhase phase = AsyPhase::closed_form) {
    return detail::asy_core(z, lambda, false, ctx, eps, phase == AsyPhase::saddle);
}

/// Leading-order asymptotic value of g(-z) (the monotone growth direction)
/// for z in the sector |Arg z| <= pi - eps.
inline Complex asy_neg(const Complex& z, const Real& lambda, PrecContext ctx, double eps = 0.1,
                       AsyPhase phase = AsyPhase::closed_form) {
    return detail::asy_core(z, lambda, true, ctx, eps, phase == AsyPhase::saddle);
}

/// Contour form selector: the kernel with, or without, the cos(pi s) factor
/// picked up by reflecting the pole ladder.
enum class HankelForm { direct, reflected };

namespace detail {

struct HankelLine {
    std::vector<Complex> vals;
    Complex total(prec_t wp) const {
        Complex acc(Real(0L, wp), Real(0L, wp));
        for (const auto& v : vals) acc += v;
        return acc;
    }
};

/// Kernel Gamma(s) lambda^{s(s+1)/2} z^{-s}, optionally times cos(pi s).
inline Complex hankel_kernel(const Complex& s, const Real& L, const Complex& x, bool reflected,
                             prec_t wp) {
    PrecContext gctx = ctx_for(wp);
    Complex e = log_gamma(s, gctx) + s * (s + 1L) * L * 0.5 - s * x;
    Complex v = exp(e);
    if (reflected) v = v * cos(Complex(s.re * Real::pi(wp), s.im * Real::pi(wp)));
    return v;
}

/// Evaluate the kernel at s = t0 + j*h + i*imag for j in [0, n), summed in
/// fixed chunk order; chunks may be computed concurrently.
inline Complex hankel_sum_points(const Real& t0, const Real& h, long n, const Real& imag,
                                 const Real& L, const Complex& x, bool reflected, prec_t wp,
                                 int threads) {
    const long chunk = 128;
    long nchunks = (n + chunk - 1) / chunk;
    std::vector<Complex> partial(size_t(nchunks), Complex(Real(0L, wp), Real(0L, wp)));
    auto run_chunk = [&](long c) {
        Complex acc(Real(0L, wp), Real(0L, wp));
        long jhi = std::min(n, (c + 1) * chunk);
        for (long j = c * chunk; j < jhi; ++j) {
            Complex s(t0 + h * j, imag);
            acc += hankel_kernel(s, L, x, reflected, wp);
        }
        partial[size_t(c)] = acc;
    };
    if (threads <= 1 || nchunks <= 1) {
        for (long c = 0; c < nchunks; ++c) run_chunk(c);
    } else {
        std::atomic<long> next{0};
        auto worker = [&] {
            for (;;) {
                long c = next.fetch_add(1);
                if (c >= nchunks) return;
                run_chunk(c);
            }
        };
        long nt = std::min<long>(threads, nchunks);
        std::vector<std::thread> pool;
        pool.reserve(size_t(nt));
        for (long i = 0; i < nt; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    Complex acc(Real(0L, wp), Real(0L, wp));
    for (const auto& p : partial) acc += p;
    return acc;
}

} // namespace detail

/// Quadrature of the two-line contour representation: the difference of the
/// kernel integrals along Im s = -1 and Im s = +1, divided by 2 pi i.
/// Fully independent of the power series; used as its oracle.
inline Complex hankel_contour_eval(const Complex& z, const Real& lambda, HankelForm form,
                                   PrecContext ctx, int threads = 1) {
    detail::check_lambda(lambda);
    if (abs(z).is_zero()) throw DomainError("hankel_contour_eval: z = 0");
    if (threads < 1) threads = 1;
    if (threads > 64) threads = 64;

    prec_t wp = ctx.work(64);
    Real L = log(lambda.with_prec(wp));
    Complex zw(z.re.with_prec(wp), z.im.with_prec(wp));
    Complex x = log(zw);
    bool reflected = form == HankelForm::reflected;
    bool real_input = z.im.is_zero() && z.re > 0L;

    // Truncation estimate: the lambda-Gaussian must push the integrand
    // below the target despite Gamma growth and the z^{-s} oscillation.
    // The line length follows the requested accuracy, not the full working
    // precision, which only guards roundoff.
    double Ld = -L.to_double();
    double xd = abs(x).to_double();
    double bits_needed = std::min(double(wp) + 24.0, 48.0 - ctx.target_log2());
    double nats = bits_needed * 0.6931471805599453;
    double T = std::sqrt(2.0 * (nats + 20.0) / Ld);
    for (int i = 0; i < 4; ++i)
        T = std::sqrt(2.0 * (nats + T * (std::log(T + 2.0) + xd + 4.0) + 20.0) / Ld);
    T *= 1.15;

    double hd = 6.283185307179586 / (nats + 20.0);

    for (int extend = 0; extend < 5; ++extend) {
        long n = 2 * long(std::ceil(T / hd)) + 1;
        Real h = Real(2.0 * T, wp) / double(n - 1);
        Real t0 = Real(-T, wp);
        Real upper_im(1L, wp);
        Real lower_im(-1L, wp);

        auto line_integral = [&](const Real& t0_, const Real& h_, long n_) {
            Complex up = detail::hankel_sum_points(t0_, h_, n_, upper_im, L, x, reflected, wp,
                                                   threads);
            if (real_input) {
                // lower line is the conjugate of the upper for real z
                Complex diff = conj(up) - up;
                return diff;
            }
            Complex low = detail::hankel_sum_points(t0_, h_, n_, lower_im, L, x, reflected, wp,
                                                    threads);
            return low - up;
        };

        Complex sum = line_integral(t0, h, n);
        Complex prev(Real(0L, wp), Real(0L, wp));
        bool converged = false;
        Real level_h = h;
        for (int level = 0; level < 9; ++level) {
            Complex integral = sum * level_h;
            if (level > 0) {
                Real diff = abs(integral - prev);
                Real scale = max(abs(integral), ldexp(Real(1L, wp), -2 * long(wp)));
                if (diff <= scale * max(Real(ctx.target_rel_err, wp) * 0.25,
                                        ldexp(Real(1L, wp), -long(wp) + 32))) {
                    converged = true;
                    prev = integral;
                    break;
                }
            }
            prev = integral;
            if (level == 8) break;
            // refine: add midpoints of the current grid
            Real mid0 = t0 + level_h / 2L;
            sum += line_integral(mid0, level_h, n - 1);
            n = 2 * n - 1;
            level_h = level_h / 2L;
        }
        if (!converged) {
            T *= 1.5;
            continue;
        }

        // verify the truncation tails are negligible against the target
        Complex end_lo = detail::hankel_kernel(Complex(t0, upper_im), L, x, reflected, wp);
        Complex end_hi =
            detail::hankel_kernel(Complex(t0 + Real(2.0 * T, wp), upper_im), L, x, reflected, wp);
        Real edge = max(abs(end_lo), abs(end_hi)) * level_h;
        Real scale = max(abs(prev), ldexp(Real(1L, wp), -2 * long(wp)));
        Real tail_gate = max(ldexp(Real(1L, wp), -long(wp) / 2),
                             ldexp(Real(ctx.target_rel_err, wp), -16));
        if (edge > scale * tail_gate) {
            T *= 1.5;
            continue;
        }

        // divide by 2 pi i
        Complex denom(Real(0L, wp), Real::pi(wp) * 2L);
        Complex v = prev / denom;
        if (real_input) v.im = Real(0L, wp);
        return v;
    }
    throw ConvergenceError("hankel_contour_eval: quadrature failed to converge",
                           "truncation length exhausted");
}

/// Non-periodic magnitude envelope of solutions of y' = a y(lambda x):
/// x^{Re A1} (log x)^{Re B1} exp(-(log x - log log x)^2 / (2 log lambda)).
inline Real kato_mcleod_envelope(const Real& x, const PantographParams& params, PrecContext ctx) {
    if (!params.b.re.is_zero() || !params.b.im.is_zero())
        throw InvalidInput("kato_mcleod_envelope: requires b = 0");
    if (!params.a.im.is_zero() || params.a.re.is_zero())
        throw InvalidInput("kato_mcleod_envelope: requires real nonzero a");
    if (!(x >= 5.0))
        throw DomainError("kato_mcleod_envelope: x below the asymptotic regime");

    prec_t wp = ctx.work(48);
    Real xw = x.with_prec(wp);
    Real L = log(params.lambda.with_prec(wp));
    Real la = log(abs(params.a.re) * abs(L));
    Real reA1 = Real(0.5, wp) - 1L / L - la / L;
    Real reB1 = la / L - 1L;
    Real lx = log(xw);
    Real u = lx - log(lx);
    return pow(xw, reA1) * pow(lx, reB1) * exp(-(u * u) / (L * 2L));
}

} // namespace pantolab

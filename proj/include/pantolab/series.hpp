#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "pantolab/complex.hpp"
#include "pantolab/prec.hpp"
#include "pantolab/rational.hpp"

namespace pantolab {

/// Parameters of y'(z) = a y(lambda z) + b y(z) with 0 < lambda < 1.
struct PantographParams {
    Real lambda;
    Complex a, b;

    PantographParams(Real lam, Complex a_, Complex b_)
        : lambda(std::move(lam)), a(std::move(a_)), b(std::move(b_)) {
        if (!(lambda > 0L) || !(lambda < 1L))
            throw InvalidInput("pantograph parameters require 0 < lambda < 1");
    }

    static PantographParams deformed_exp(const Real& lam) {
        prec_t p = lam.prec();
        return PantographParams(lam, Complex(-1.0, 0.0, p), Complex(0.0, 0.0, p));
    }

    Real q() const { return Real(1L, lambda.prec()) / lambda; }

    bool is_real() const { return a.is_real() && b.is_real(); }
};

/// Several rescaled arguments: y'(z) = sum_k a_k y(lambda_k z) + b y(z).
struct MultiPantographParams {
    std::vector<std::pair<Real, Complex>> terms; // (lambda_k, a_k)
    Complex b;

    MultiPantographParams(std::vector<std::pair<Real, Complex>> t, Complex b_)
        : terms(std::move(t)), b(std::move(b_)) {
        if (terms.empty()) throw InvalidInput("multi-pantograph needs at least one term");
        for (const auto& [lam, a] : terms)
            if (!(lam > 0L) || !(lam < 1L))
                throw InvalidInput("multi-pantograph requires 0 < lambda_k < 1");
    }
};

/// A certified partial sum: |true - value| <= tail_bound (absolute), and on
/// top of that about terms_used * 2^-wp * max_term of accumulated roundoff,
/// which is folded into noise_bound.  When the result is not close to a
/// zero of the function, noise_bound <= target_rel_err * |value| holds.
struct SeriesResult {
    Complex value;
    Real tail_bound;
    Real noise_bound;
    long terms_used = 0;
    Real max_term;

    /// True when the sign/magnitude of `value` stands clear of the noise.
    bool certified_rel(double target) const {
        return noise_bound <= abs(value) * target;
    }
};

/// Infinite product Q(alpha) = prod_{k>=0} (1 + alpha lambda^k).
struct QProduct {
    Complex value;
    long factors = 0;
    Real tail_bound;
};

namespace detail {

/// Power-series summation with a certified geometric tail.  `next` advances
/// term n -> n+1 in place and returns a bound on |term_{n+1}/term_n| that is
/// valid for all later ratios as well once it is below 1.
template <class NextFn>
SeriesResult sum_series(Complex term0, NextFn&& next, prec_t wp, double target) {
    Complex acc = term0;
    Complex term = std::move(term0);
    Real max_term = abs(term);
    long n = 0;
    const long hard_cap = 200000;
    Real ratio(0L, wp);
    while (true) {
        ratio = next(term, n); // term becomes term_{n+1}
        ++n;
        if (n >= hard_cap)
            throw ConvergenceError("series summation exceeded term cap", acc.str());
        Real tmag = abs(term);
        if (tmag > max_term) max_term = tmag;
        if (ratio < 0.5) {
            Real tail = tmag / (1L - ratio);
            Real scale = abs(acc);
            bool small_rel = tail <= scale * (target * 0.25);
            bool below_floor = !tmag.is_zero()
                                   ? (tmag.exponent() < max_term.exponent() - long(wp) - 8)
                                   : true;
            if (small_rel || below_floor) {
                SeriesResult r{acc, tail, Real(0L, wp), n + 1, max_term};
                Real roundoff = ldexp(max_term * double(n + 4), -long(wp));
                r.noise_bound = tail + roundoff;
                return r;
            }
        }
        acc += term;
    }
}

} // namespace detail

/// First `count` Taylor coefficients of the deformed exponential
/// g(z) = sum (-1)^n lambda^(n(n-1)/2) z^n / n!, by the coefficient
/// recurrence c_{n+1} = -c_n lambda^n / (n+1).
inline std::vector<Real> deformed_exp_coeffs(long count, const Real& lambda, prec_t wp) {
    std::vector<Real> c;
    c.reserve(size_t(count));
    Real cur(1L, wp);
    Real lam_pow(1L, wp);
    Real lam = lambda.with_prec(wp);
    for (long n = 0; n < count; ++n) {
        c.push_back(cur);
        cur = -(cur * lam_pow) / double(n + 1);
        lam_pow *= lam;
    }
    return c;
}

/// Taylor coefficients f_n of the general pantograph solution with
/// y(0) = 1, from (n+1) f_{n+1} = (a lambda^n + b) f_n.
inline std::vector<Complex> pantograph_coeffs(const PantographParams& p, long count, prec_t wp) {
    std::vector<Complex> c;
    c.reserve(size_t(count));
    Complex cur(1.0, 0.0, wp);
    Real lam = p.lambda.with_prec(wp);
    Real lam_pow(1L, wp);
    for (long n = 0; n < count; ++n) {
        c.push_back(cur);
        cur = cur * (p.a * lam_pow + p.b) / double(n + 1);
        lam_pow *= lam;
    }
    return c;
}

/// Exact-rational coefficient generator (test support for the recurrence
/// identity; never used on the evaluation paths).
inline std::vector<Rational> pantograph_coeffs_exact(const Rational& lambda, const Rational& a,
                                                     const Rational& b, long count) {
    std::vector<Rational> c;
    c.reserve(size_t(count));
    Rational cur(1);
    Rational lam_pow(1);
    for (long n = 0; n < count; ++n) {
        c.push_back(cur);
        cur = cur * (a * lam_pow + b) / Rational(n + 1);
        lam_pow *= lambda;
    }
    return c;
}

namespace detail {

inline long cancellation_bits(const SeriesResult& r) {
    Real v = abs(r.value);
    if (v.is_zero() || r.max_term.is_zero()) return 0;
    long c = r.max_term.exponent() - v.exponent();
    return c > 0 ? c : 0;
}

/// Escalating evaluation.  Each pass measures how far the result sits below
/// the largest term and raises the working precision by that gap.  A value
/// pinned to the roundoff floor keeps chasing it upward, so the loop either
/// certifies the result, stabilises on an honestly-noisy small value, or
/// hits the budget cap and reports the precision the caller should retry
/// with.
template <class EvalFn>
SeriesResult eval_with_retry(EvalFn&& eval, PrecContext ctx, const char* what) {
    const long base = long(ctx.work(48));
    const long cap_extra = 3 * ctx.bits + 256;
    const long target_bits = long(std::ceil(-ctx.target_log2())) + 32;
    long wp = base;
    for (int attempt = 0; attempt < 12; ++attempt) {
        SeriesResult r = eval(prec_t(wp));
        if (r.certified_rel(ctx.target_rel_err)) return r;
        if (abs(r.value).is_zero()) return r;
        long want = base + cancellation_bits(r) + target_bits;
        if (want <= wp) return r;
        if (want - base > cap_extra)
            throw PrecisionError(std::string(what) + ": cancellation exceeds precision budget",
                                 ctx.bits + (want - base));
        wp = want;
    }
    throw PrecisionError(std::string(what) + ": cancellation estimate failed to stabilise",
                         ctx.bits + cap_extra);
}

} // namespace detail

/// Evaluate g(z) by direct summation with a certified tail bound.
inline SeriesResult deformed_exp_eval(const Complex& z, const Real& lambda, PrecContext ctx) {
    if (!(lambda > 0L) || !(lambda < 1L))
        throw InvalidInput("deformed exponential requires 0 < lambda < 1");
    return detail::eval_with_retry(
        [&](prec_t wp) {
            Complex zw(z.re.with_prec(wp), z.im.with_prec(wp));
            Real lam = lambda.with_prec(wp);
            Real az = abs(zw);
            Real lam_pow(1L, wp); // lambda^n at the current term index
            Complex term0(1.0, 0.0, wp);
            auto next = [&](Complex& term, long n) {
                term = -(term * zw) * (lam_pow / double(n + 1));
                lam_pow *= lam;
                return az * lam_pow / double(n + 2);
            };
            return detail::sum_series(std::move(term0), next, wp, ctx.target_rel_err);
        },
        ctx, "deformed_exp_eval");
}

inline SeriesResult deformed_exp_eval(const Real& x, const Real& lambda, PrecContext ctx) {
    return deformed_exp_eval(Complex(x), lambda, ctx);
}

/// Direct summation of the general pantograph series.
inline SeriesResult pantograph_eval_direct(const Complex& z, const PantographParams& p,
                                           PrecContext ctx) {
    return detail::eval_with_retry(
        [&](prec_t wp) {
            Complex zw(z.re.with_prec(wp), z.im.with_prec(wp));
            Real az = abs(zw);
            Real lam = p.lambda.with_prec(wp);
            Real abs_a = abs(p.a).with_prec(wp);
            Real abs_b = abs(p.b).with_prec(wp);
            Real lam_pow(1L, wp);
            Complex term0(1.0, 0.0, wp);
            auto next = [&](Complex& term, long n) {
                term = term * (p.a * lam_pow + p.b) * (zw / double(n + 1));
                lam_pow *= lam;
                return (abs_a * lam_pow + abs_b) * az / double(n + 2);
            };
            return detail::sum_series(std::move(term0), next, wp, ctx.target_rel_err);
        },
        ctx, "pantograph_eval_direct");
}

/// Multi-delay variant: coefficients from
/// (n+1) f_{n+1} = (sum_k a_k lambda_k^n + b) f_n.
inline SeriesResult multipantograph_eval(const Complex& z, const MultiPantographParams& p,
                                         PrecContext ctx) {
    return detail::eval_with_retry(
        [&](prec_t wp) {
            Complex zw(z.re.with_prec(wp), z.im.with_prec(wp));
            Real az = abs(zw);
            size_t m = p.terms.size();
            std::vector<Real> lam(m, Real(0L, wp)), lam_pow(m, Real(1L, wp)),
                abs_a(m, Real(0L, wp));
            for (size_t k = 0; k < m; ++k) {
                lam[k] = p.terms[k].first.with_prec(wp);
                abs_a[k] = abs(p.terms[k].second).with_prec(wp);
            }
            Real abs_b = abs(p.b).with_prec(wp);
            Complex term0(1.0, 0.0, wp);
            auto next = [&](Complex& term, long n) {
                Complex factor = p.b;
                for (size_t k = 0; k < m; ++k) factor += p.terms[k].second * lam_pow[k];
                term = term * factor * (zw / double(n + 1));
                Real rb = abs_b;
                for (size_t k = 0; k < m; ++k) {
                    lam_pow[k] *= lam[k];
                    rb += abs_a[k] * lam_pow[k];
                }
                return rb * az / double(n + 2);
            };
            return detail::sum_series(std::move(term0), next, wp, ctx.target_rel_err);
        },
        ctx, "multipantograph_eval");
}

/// Q(alpha) = prod_{k>=0} (1 + alpha lambda^k), certified by a geometric
/// bound on the dropped factors.  An exactly-zero factor short-circuits to
/// zero (the degenerate parameter family).
inline QProduct q_pochhammer(const Complex& alpha, const Real& lambda, PrecContext ctx) {
    if (!(lambda > 0L) || !(lambda < 1L))
        throw InvalidInput("q_pochhammer requires 0 < lambda < 1");
    prec_t wp = ctx.work(48);
    Real lam = lambda.with_prec(wp);
    Complex acc(1.0, 0.0, wp);
    Complex ap(alpha.re.with_prec(wp), alpha.im.with_prec(wp));
    Real aa = abs(ap);
    Real one_minus_lam = Real(1L, wp) - lam;
    long k = 0;
    const long cap = 4000000;
    while (true) {
        Complex factor = ap + 1L;
        if (factor.re.is_zero() && factor.im.is_zero())
            return {Complex(0.0, 0.0, wp), k + 1, Real(0L, wp)};
        acc *= factor;
        aa *= lam;
        ap = ap * lam;
        ++k;
        if (k >= cap) throw ConvergenceError("q_pochhammer factor cap exceeded", acc.str());
        // remaining factors multiply the value by exp(sum_{j>=k} O(|alpha| lam^j))
        Real rem = aa / one_minus_lam;
        if (rem < 0.25 && rem <= ctx.target_rel_err * 0.25) {
            Real tail = abs(acc) * rem * 2L;
            return {acc, k, tail};
        }
    }
}

/// Expansion coefficients of 1 / Q(alpha) in powers of alpha:
/// d_m = (-1)^m / prod_{j=1..m} (1 - lambda^j).
inline std::vector<Real> q_pochhammer_recip_coeffs(long count, const Real& lambda, prec_t wp) {
    if (!(lambda > 0L) || !(lambda < 1L))
        throw InvalidInput("q_pochhammer_recip_coeffs requires 0 < lambda < 1");
    std::vector<Real> d;
    d.reserve(size_t(count));
    Real cur(1L, wp);
    Real lam = lambda.with_prec(wp);
    Real lam_pow(1L, wp);
    for (long m = 0; m < count; ++m) {
        d.push_back(cur);
        lam_pow *= lam;
        cur = -cur / (Real(1L, wp) - lam_pow);
    }
    return d;
}

/// Truncated-product evaluation of the b != 0 solution:
///   y(z) = sum_{n<N} f_n z^n
///        + Q(a/b) sum_m d_m (a/b)^m [ e^{b lambda^m z} - E_N(b lambda^m z) ],
/// with N the smallest index making |a/b| lambda^N < 1 and E_N the partial
/// exponential sum.  The m-series is cut with an explicit majorant
/// |d_m alpha^m| |b z lambda^m|^N e^{|b z| lambda^m} / N!, which is
/// eventually geometric with ratio |alpha| lambda^N / (1 - lambda^{m+1}).
inline SeriesResult pantograph_eval_truncated(const Complex& z, const PantographParams& p,
                                              PrecContext ctx) {
    prec_t wp = ctx.work(64);
    Complex zw(z.re.with_prec(wp), z.im.with_prec(wp));

    if (p.b.re.is_zero() && p.b.im.is_zero()) {
        // b = 0 reduces to the deformed exponential: y(z) = g(-a z)
        return deformed_exp_eval(-(p.a * zw), p.lambda, ctx);
    }

    Real lam = p.lambda.with_prec(wp);
    Complex alpha = p.a / p.b;
    Real aal = abs(alpha);

    // degenerate family: a lambda^n + b = 0 makes the solution a polynomial
    {
        Real lam_pow(1L, wp);
        Real ab = abs(p.a), bb = abs(p.b);
        for (long n = 0; ab * lam_pow > bb * 0.5; ++n) {
            Complex factor = p.a * lam_pow + p.b;
            Real fm = abs(factor);
            if (fm.is_zero() || fm.exponent() < (ab * lam_pow + bb).exponent() - long(wp) + 8) {
                std::vector<Complex> cs = pantograph_coeffs(p, n + 1, wp);
                Complex acc(0.0, 0.0, wp);
                Real maxt(0L, wp);
                Real zp(1L, wp);
                Real az = abs(zw);
                for (long j = n; j >= 0; --j) acc = acc * zw + cs[size_t(j)];
                for (long j = 0; j <= n; ++j) {
                    Real t = abs(cs[size_t(j)]) * zp;
                    if (t > maxt) maxt = t;
                    zp *= az;
                }
                SeriesResult r{acc, Real(0L, wp), Real(0L, wp), n + 1, maxt};
                r.noise_bound = ldexp(max(maxt, abs(acc)) * double(n + 4), -long(wp));
                return r;
            }
            lam_pow *= lam;
        }
    }

    // N: first index with |alpha| lambda^N < 1, nudged a little further so
    // the m-series majorant ratio |alpha| lambda^N / (1 - lambda^{m+1})
    // has headroom below 1
    long N = 1;
    {
        Real t = aal * lam;
        while (t >= 0.6) {
            t *= lam;
            ++N;
            if (N > 1000000)
                throw ConvergenceError("truncated evaluation: threshold index runaway",
                                       aal.str(10));
        }
    }

    std::vector<Complex> head_coeffs = pantograph_coeffs(p, N, wp);
    Complex head(0.0, 0.0, wp);
    Real max_term(0L, wp);
    {
        for (long j = N - 1; j >= 0; --j) head = head * zw + head_coeffs[size_t(j)];
        Real zp(1L, wp);
        for (long j = 0; j < N; ++j) {
            Real t = abs(head_coeffs[size_t(j)]) * zp;
            if (t > max_term) max_term = t;
            zp *= abs(zw);
        }
    }

    QProduct Q = q_pochhammer(alpha, p.lambda, ctx);

    // log(|bz|^N / N!) for the majorant
    Complex bz = p.b * zw;
    Real abz = abs(bz);
    Real logNfac(0L, wp);
    for (long j = 2; j <= N; ++j) logNfac += log(Real(double(j), wp));
    Real log_maj_base = abz.is_zero() ? Real(-1e9, wp) : log(abz) * double(N) - logNfac;

    Complex msum(0.0, 0.0, wp);
    Real tail_bound(0L, wp);
    Real dm(1L, wp); // |d_m| accumulates 1/(1-lambda^j) factors; sign folded below
    Real sign(1L, wp);
    Real lam_pow_m(1L, wp); // lambda^m
    Complex alpha_pow_c(1.0, 0.0, wp);
    Real lamN = pow(lam, N);
    long m = 0;
    const long mcap = 100000;
    while (true) {
        // bracket term e^{b lambda^m z} - E_N(b lambda^m z)
        Complex w = bz * lam_pow_m;
        Complex ew = exp(w);
        Complex en(0.0, 0.0, wp);
        {
            Complex t(1.0, 0.0, wp);
            for (long j = 0; j < N; ++j) {
                en += t;
                t = t * w / double(j + 1);
            }
        }
        Complex term = alpha_pow_c * (sign * dm) * (ew - en);
        msum += term;
        Real tm = abs(term) * abs(Q.value);
        if (tm > max_term) max_term = tm;

        // majorant for the next term and the geometric tail after it
        Real next_dm = dm / (Real(1L, wp) - pow(lam, m + 1));
        Real log_next = log_maj_base + log(next_dm) + log(aal) * double(m + 1) +
                        Real(double(N), wp) * log(lam) * double(m + 1) + abz * lam_pow_m * lam;
        Real ratio = aal * lamN / (Real(1L, wp) - pow(lam, m + 2));
        if (ratio < 0.75) {
            Real next_mag = exp(log_next);
            Real tail = next_mag / (Real(1L, wp) - ratio);
            Real scale = abs(head + Q.value * msum);
            if (tail <= scale * (ctx.target_rel_err * 0.25) ||
                (!next_mag.is_zero() && !max_term.is_zero() &&
                 next_mag.exponent() < max_term.exponent() - long(wp) - 8)) {
                tail_bound = tail;
                break;
            }
        }
        sign = -sign;
        dm = next_dm;
        lam_pow_m *= lam;
        alpha_pow_c = alpha_pow_c * alpha;
        ++m;
        if (m >= mcap)
            throw ConvergenceError("truncated evaluation: m-series cap exceeded", msum.str());
    }

    Complex value = head + Q.value * msum;
    SeriesResult r{value, tail_bound + Q.tail_bound * abs(msum), Real(0L, wp), N + m + 1,
                   max_term};
    Real roundoff = ldexp(max(max_term, abs(value)) * double(N + 8 * (m + 2)), -long(wp));
    r.noise_bound = r.tail_bound + roundoff;
    return r;
}

} // namespace pantolab

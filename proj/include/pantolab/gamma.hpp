#pragma once

#include <climits>
#include <map>
#include <mutex>
#include <vector>

#include "pantolab/complex.hpp"
#include "pantolab/rational.hpp"

namespace pantolab {

namespace detail {

/// Exact Bernoulli number B_n (B_1 = +1/2 convention; only even indices are
/// consumed here, where the conventions agree).  Computed by the
/// Akiyama-Tanigawa scheme in exact rational arithmetic and cached.
inline Rational bernoulli_exact(size_t n) {
    static std::mutex mu;
    static std::vector<Rational> table;
    static std::vector<Rational> row;
    std::lock_guard<std::mutex> lock(mu);
    for (size_t m = table.size(); m <= n; ++m) {
        row.emplace_back(1, long(m + 1));
        for (size_t j = m; j >= 1; --j)
            row[j - 1] = Rational(long(j)) * (row[j - 1] - row[j]);
        table.push_back(row[0]);
    }
    return table[n];
}

/// B_2, B_4, ..., B_{2*count} rounded to precision wp.
/// Thread-local so the asymptotic series can run lock-free.
inline const std::vector<Real>& bernoulli_reals(size_t count, prec_t wp) {
    thread_local std::map<prec_t, std::vector<Real>> cache;
    auto& v = cache[wp];
    while (v.size() < count)
        v.push_back(bernoulli_exact(2 * (v.size() + 1)).to_real(wp));
    return v;
}

/// Binary magnitude of a complex value; LONG_MIN for exact zero.
inline long mag_exp(const Complex& z) {
    long er = z.re.is_zero() || !z.re.is_finite() ? LONG_MIN : z.re.exponent();
    long ei = z.im.is_zero() || !z.im.is_finite() ? LONG_MIN : z.im.exponent();
    return er > ei ? er : ei;
}

enum class PsiKind { log_gamma, digamma, trigamma };

/// Asymptotic (Stirling-type) series plus upward recurrence.  The argument
/// is shifted right until the series reaches the target accuracy before its
/// divergent tail sets in; if the terms bottom out too early the shift
/// radius is enlarged and the evaluation retried.
inline Complex stirling_core(PsiKind kind, const Complex& z0, prec_t wp) {
    if (z0.im.is_zero() && z0.re <= 0L && z0.re.is_integer())
        throw PoleError("gamma-family function at non-positive integer " + z0.re.str(8));

    double radius = 0.115 * double(wp) + 12.0;
    for (int attempt = 0; attempt < 8; ++attempt, radius *= 1.5) {
        Complex w(z0.re.with_prec(wp), z0.im.with_prec(wp));
        Complex shift(wp);
        long nshift = 0;
        while (w.re < radius) {
            switch (kind) {
                case PsiKind::log_gamma: shift += log(w); break;
                case PsiKind::digamma: shift += Real(1L, wp) / w; break;
                case PsiKind::trigamma: {
                    Complex r = Real(1L, wp) / w;
                    shift += r * r;
                    break;
                }
            }
            w.re += 1L;
            if (++nshift > 1000000)
                throw ConvergenceError("gamma-family recurrence shift runaway", z0.str());
        }

        Complex iw = Real(1L, wp) / w;
        Complex iw2 = iw * iw;
        Complex base(wp);
        Complex p(wp);
        switch (kind) {
            case PsiKind::log_gamma: {
                Real half(0.5, wp);
                base = (w - half) * log(w) - w;
                Real two_pi = Real::pi(wp) * 2L;
                base.re += log(two_pi) / 2L;
                p = iw;
                break;
            }
            case PsiKind::digamma:
                base = log(w) - iw * Real(0.5, wp);
                p = iw2;
                break;
            case PsiKind::trigamma:
                base = iw + iw2 * Real(0.5, wp);
                p = iw2 * iw;
                break;
        }

        long scale_exp = mag_exp(base);
        if (scale_exp == LONG_MIN) scale_exp = 0;
        long stop_exp = scale_exp - long(wp) - 8;

        Complex sum(wp);
        long prev_exp = LONG_MAX;
        bool converged = false;
        size_t max_terms = size_t(wp);
        for (size_t j = 1; j <= max_terms; ++j) {
            const Real& b2j = bernoulli_reals(j, wp)[j - 1];
            Complex term(wp);
            switch (kind) {
                case PsiKind::log_gamma:
                    term = p * (b2j / double(2 * j) / double(2 * j - 1));
                    break;
                case PsiKind::digamma:
                    term = p * (b2j / double(2 * j));
                    term = -term;
                    break;
                case PsiKind::trigamma:
                    term = p * b2j;
                    break;
            }
            long te = mag_exp(term);
            if (te <= stop_exp) {
                sum += term;
                converged = true;
                break;
            }
            if (te >= prev_exp) break; // divergent tail reached too early
            sum += term;
            prev_exp = te;
            p = p * iw2;
        }
        if (!converged) continue;

        Complex result = base + sum;
        switch (kind) {
            case PsiKind::log_gamma:
            case PsiKind::digamma: result -= shift; break;
            case PsiKind::trigamma: result += shift; break;
        }
        return result;
    }
    throw ConvergenceError("gamma-family asymptotic series did not converge", z0.str());
}

} // namespace detail

/// Principal-branch log Gamma on the plane cut along (-inf, 0]; on the cut
/// (negative real arguments) the limit from above is returned.  Satisfies
/// log_gamma(z+1) = log_gamma(z) + log z with principal log.
inline Complex log_gamma(const Complex& z, PrecContext ctx) {
    return detail::stirling_core(detail::PsiKind::log_gamma, z, ctx.work(48));
}

/// Digamma psi(z) with the same branch conventions as log_gamma.
inline Complex digamma(const Complex& z, PrecContext ctx) {
    return detail::stirling_core(detail::PsiKind::digamma, z, ctx.work(48));
}

/// Trigamma psi'(z).
inline Complex trigamma(const Complex& z, PrecContext ctx) {
    return detail::stirling_core(detail::PsiKind::trigamma, z, ctx.work(48));
}

inline Real log_gamma(const Real& x, PrecContext ctx) {
    if (!(x > 0L)) throw DomainError("real log_gamma requires a positive argument");
    return log_gamma(Complex(x), ctx).re;
}

inline Real digamma(const Real& x, PrecContext ctx) {
    if (!(x > 0L)) throw DomainError("real digamma requires a positive argument");
    return digamma(Complex(x), ctx).re;
}

inline Real trigamma(const Real& x, PrecContext ctx) {
    if (!(x > 0L)) throw DomainError("real trigamma requires a positive argument");
    return trigamma(Complex(x), ctx).re;
}

} // namespace pantolab

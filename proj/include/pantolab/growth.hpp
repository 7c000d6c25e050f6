#pragma once

#include <utility>
#include <vector>

#include "pantolab/errors.hpp"
#include "pantolab/prec.hpp"
#include "pantolab/rational.hpp"
#include "pantolab/real.hpp"
#include "pantolab/solver.hpp"

namespace pantolab {

/// Extremal scaling factors of a higher-order rescaling equation and the
/// growth-exponent thresholds they induce.  For log|y| ~ gamma log^2 x the
/// admissible band is [1/(2|log alpha_min|), m/(2|log alpha_max|)]; the
/// comparisons are one-sided empirical probes, not certificates.
struct GrowthBounds {
    Real alpha_min;
    Real alpha_max;
    long m;
    Real upper_gamma_threshold;
    Real lower_gamma_threshold;

    /// -1 below the band, +1 above it, 0 inside (inclusive).
    int classify(const Real& gamma) const {
        if (gamma < lower_gamma_threshold) return -1;
        if (gamma > upper_gamma_threshold) return 1;
        return 0;
    }
};

inline GrowthBounds bounds(const HighOrderFDE& fde) {
    prec_t wp = 128;
    for (const auto& t : fde.terms) wp = std::max(wp, t.alpha.prec());
    Real amin = fde.alpha_min().with_prec(wp);
    Real amax = fde.alpha_max().with_prec(wp);
    Real upper = Real(fde.m, wp) / (abs(log(amax)) * 2L);
    Real lower = Real(1L, wp) / (abs(log(amin)) * 2L);
    return {amin, amax, fde.m, upper, lower};
}

/// Degrees n <= n_max at which the zeroth-order coefficients cancel,
/// |sum_j a_j alpha_j^n| <= tol sum_j |a_j| alpha_j^n, the existence
/// condition for a degree-n polynomial solution.  Terms that act on
/// derivatives (k > 0) do not enter the condition.
inline std::vector<long> polynomial_solution_condition(const HighOrderFDE& fde, long n_max,
                                                       PrecContext ctx) {
    if (n_max < 0) throw InvalidInput("polynomial-solution scan requires n_max >= 0");
    prec_t wp = ctx.work(64);
    std::vector<Complex> a;
    std::vector<Real> alpha;
    std::vector<Real> apow;
    for (const auto& t : fde.terms)
        if (t.k == 0) {
            a.push_back(t.a);
            alpha.push_back(t.alpha.with_prec(wp));
            apow.push_back(Real(1L, wp));
        }
    std::vector<long> hits;
    if (a.empty()) return hits;
    for (long n = 0; n <= n_max; ++n) {
        Complex s(0.0, 0.0, wp);
        Real mag(0L, wp);
        for (size_t j = 0; j < a.size(); ++j) {
            s = s + a[j] * apow[j];
            mag += abs(a[j]) * apow[j];
            apow[j] *= alpha[j];
        }
        if (abs(s) <= mag * ctx.target_rel_err) hits.push_back(n);
    }
    return hits;
}

/// Exact-rational form of the condition over (a_j0, alpha_j) pairs.
inline std::vector<long> polynomial_solution_condition(
    const std::vector<std::pair<Rational, Rational>>& zero_order, long n_max) {
    if (n_max < 0) throw InvalidInput("polynomial-solution scan requires n_max >= 0");
    std::vector<long> hits;
    if (zero_order.empty()) return hits;
    std::vector<Rational> apow(zero_order.size(), Rational(1));
    for (long n = 0; n <= n_max; ++n) {
        Rational s(0);
        for (size_t j = 0; j < zero_order.size(); ++j) {
            s += zero_order[j].first * apow[j];
            apow[j] *= zero_order[j].second;
        }
        if (s.is_zero()) hits.push_back(n);
    }
    return hits;
}

/// Least-squares fit of log|y(x)| against c + gamma log^2(1 + x) over the
/// solution's magnitude envelope on [x_lo, x_hi].  A large residual norm
/// means the growth is not of log-squared type.
struct EnvelopeFit {
    Real gamma_hat;
    Real c_hat;
    Real x_lo;
    Real x_hi;
    Real residual_rms;
    long points = 0;
    bool oscillatory = false;
};

namespace detail {

/// Envelope samples (x, log|y|) on [lo, hi], scanning a geometric grid with
/// `per_gap` points per expected inter-zero gap [x, qx].  An oscillating
/// solution contributes the maximum of |y| inside each complete lobe between
/// consecutive sign changes; a sign-definite one is its own envelope and
/// contributes thinned direct samples.  A window with one to three sign
/// changes has too few complete lobes to separate envelope from oscillation.
template <class EvalFn>
std::vector<std::pair<Real, Real>> envelope_samples(EvalFn&& value, const Real& lo, const Real& hi,
                                                    const Real& q, prec_t wp, bool& oscillatory) {
    const long per_gap = 64;
    double gaps = (log(hi.with_prec(wp)) - log(lo.with_prec(wp))).to_double() /
                  log(q.with_prec(wp)).to_double();
    long n = per_gap * std::max(1L, long(gaps) + 1);
    if (n > 20000) n = 20000;

    Real step = pow(hi.with_prec(wp) / lo.with_prec(wp), Real(1L, wp) / n);
    std::vector<Real> xs;
    std::vector<Real> vs;
    xs.reserve(size_t(n) + 1);
    vs.reserve(size_t(n) + 1);
    Real x = lo.with_prec(wp);
    for (long i = 0; i <= n; ++i) {
        xs.push_back(x);
        vs.push_back(value(x));
        x = i + 1 == n ? hi.with_prec(wp) : x * step;
    }

    std::vector<size_t> crossings;
    for (size_t i = 0; i + 1 < vs.size(); ++i)
        if (vs[i].sign() * vs[i + 1].sign() < 0) crossings.push_back(i);

    std::vector<std::pair<Real, Real>> out;
    if (crossings.empty()) {
        oscillatory = false;
        size_t stride = std::max<size_t>(1, vs.size() / 32);
        for (size_t i = 0; i < vs.size(); i += stride) {
            Real mag = abs(vs[i]);
            if (mag.is_zero()) continue;
            out.emplace_back(xs[i], log(mag));
        }
        return out;
    }
    if (crossings.size() < 4)
        throw InsufficientData("envelope fit found only " +
                               std::to_string(crossings.size() ? crossings.size() - 1 : 0) +
                               " complete oscillation lobes; need at least 3");

    oscillatory = true;
    auto lobe_max = [&](size_t first, size_t last, bool interior_only) {
        size_t best = first;
        for (size_t i = first; i <= last; ++i)
            if (abs(vs[i]) > abs(vs[best])) best = i;
        if (interior_only && (best == first || best == last)) return;
        out.emplace_back(xs[best], log(abs(vs[best])));
    };
    // a lobe cut off by the window edge still holds a genuine local maximum
    // when the sampled peak is strictly interior to the visible part
    if (crossings.front() > 0) lobe_max(0, crossings.front(), true);
    for (size_t c = 0; c + 1 < crossings.size(); ++c)
        lobe_max(crossings[c] + 1, crossings[c + 1], false);
    if (crossings.back() + 1 < vs.size() - 1) lobe_max(crossings.back() + 1, vs.size() - 1, true);
    return out;
}

template <class EvalFn>
EnvelopeFit envelope_fit_impl(EvalFn&& value, const Real& lo, const Real& hi, const Real& q,
                              PrecContext ctx) {
    prec_t wp = ctx.work(64);
    bool oscillatory = false;
    std::vector<std::pair<Real, Real>> pts = envelope_samples(value, lo, hi, q, wp, oscillatory);
    if (pts.size() < 3)
        throw InsufficientData("envelope fit needs at least 3 envelope points, found " +
                               std::to_string(pts.size()));

    Real su(0L, wp), suu(0L, wp), sv(0L, wp), suv(0L, wp);
    std::vector<Real> us;
    us.reserve(pts.size());
    for (const auto& [px, pv] : pts) {
        Real u = log1p(px);
        u *= u;
        us.push_back(u);
        su += u;
        suu += u * u;
        sv += pv;
        suv += u * pv;
    }
    Real nw(long(pts.size()), wp);
    Real det = nw * suu - su * su;
    if (det <= ldexp(nw * suu + su * su + 1L, 24 - long(wp)))
        throw InsufficientData("envelope fit abscissae are too clustered to resolve a slope");
    Real gamma = (nw * suv - su * sv) / det;
    Real c = (suu * sv - su * suv) / det;

    Real rss(0L, wp);
    for (size_t i = 0; i < pts.size(); ++i) {
        Real r = pts[i].second - (c + gamma * us[i]);
        rss += r * r;
    }
    EnvelopeFit fit{gamma, c, pts.front().first, pts.back().first, sqrt(rss / nw),
                    long(pts.size()), oscillatory};
    return fit;
}

} // namespace detail

inline EnvelopeFit envelope_fit(const PiecewiseSolution& sol, const Real& x_lo, const Real& x_hi,
                                PrecContext ctx) {
    if (!sol.real_valued) throw InvalidInput("envelope fit requires a real-valued solution");
    if (!(x_lo > 0L) || !(x_hi > x_lo))
        throw InvalidInput("envelope fit requires 0 < x_lo < x_hi");
    Real slack = sol.x_end() * Real(1e-12, 64);
    if (x_lo < sol.x0() - slack || x_hi > sol.x_end() + slack)
        throw InvalidInput("envelope fit range [" + x_lo.str(12) + ", " + x_hi.str(12) +
                           "] is not covered by the solution");
    auto value = [&](const Real& x) { return sol.eval(x).re; };
    return detail::envelope_fit_impl(value, x_lo, x_hi, sol.params.q(), ctx);
}

inline EnvelopeFit envelope_fit(const HighOrderSolution& sol, const Real& x_lo, const Real& x_hi,
                                PrecContext ctx) {
    bool real = true;
    for (const auto& t : sol.fde.terms) real = real && t.a.im.is_zero();
    for (const auto& s : sol.seeds) real = real && s.is_real();
    if (!real) throw InvalidInput("envelope fit requires a real-valued solution");
    if (!(x_lo > 0L) || !(x_hi > x_lo))
        throw InvalidInput("envelope fit requires 0 < x_lo < x_hi");
    Real slack = sol.x_end() * Real(1e-12, 64);
    if (x_lo < sol.x0() - slack || x_hi > sol.x_end() + slack)
        throw InvalidInput("envelope fit range [" + x_lo.str(12) + ", " + x_hi.str(12) +
                           "] is not covered by the solution");
    Real q = Real(1L, sol.fde.alpha_max().prec()) / sol.fde.alpha_max();
    auto value = [&](const Real& x) { return sol.eval(x, 0).re; };
    return detail::envelope_fit_impl(value, x_lo, x_hi, q, ctx);
}

} // namespace pantolab

#pragma once

#include <functional>

#include "pantolab/prec.hpp"
#include "pantolab/real.hpp"

namespace pantolab {

struct RootResult {
    Real root;
    Real enclosure; // final bracket width; the root lies within enclosure of `root`
    int newton_steps = 0;
    int bisection_steps = 0;
};

/// Bracketed root refinement: safeguarded Newton that falls back to
/// bisection whenever a Newton step leaves the bracket or fails to shrink
/// it.  Requires a sign change on [lo, hi].  Stops once the bracket width
/// is below max(target_rel_err, 2^(4-bits)) relative to the root.
inline RootResult refine_root(const std::function<Real(const Real&)>& f,
                              const std::function<Real(const Real&)>& df, const Real& lo,
                              const Real& hi, PrecContext ctx) {
    prec_t wp = ctx.work();
    Real a = lo.with_prec(wp), b = hi.with_prec(wp);
    if (!(a < b)) throw InvalidInput("refine_root: empty bracket");
    Real fa = f(a), fb = f(b);
    if (fa.is_zero()) return {a, Real(0L, wp), 0, 0};
    if (fb.is_zero()) return {b, Real(0L, wp), 0, 0};
    if (fa.sign() == fb.sign()) throw DomainError("refine_root: no sign change on bracket");

    RootResult res{a, b - a, 0, 0};
    Real x = (a + b) / 2L;
    long max_iter = ctx.bits + 192;
    for (long it = 0; it < max_iter; ++it) {
        Real width = b - a;
        Real mid = (a + b) / 2L;
        Real scale = max(abs(mid), Real(1e-300, wp));
        double tol = ctx.target_rel_err;
        double floor_tol = std::ldexp(1.0, ctx.bits < 1070 ? int(4 - ctx.bits) : -1066);
        if (width <= scale * (tol > floor_tol ? tol : floor_tol)) {
            res.root = mid;
            res.enclosure = width;
            return res;
        }

        bool did_newton = false;
        Real fx = f(x);
        if (fx.is_zero()) {
            res.root = x;
            res.enclosure = Real(0L, wp);
            return res;
        }
        // tighten the bracket with the sign of f(x)
        if (fx.sign() == fa.sign()) {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }

        Real dfx = df(x);
        if (!dfx.is_zero() && dfx.is_finite()) {
            Real step = fx / dfx;
            Real xn = x - step;
            if (xn > a && xn < b && abs(step) < (b - a)) {
                x = xn;
                ++res.newton_steps;
                did_newton = true;
            }
        }
        if (!did_newton) {
            x = (a + b) / 2L;
            ++res.bisection_steps;
        }
    }
    throw ConvergenceError("refine_root: iteration cap exceeded", x.str(20));
}

} // namespace pantolab

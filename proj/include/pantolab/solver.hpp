#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "pantolab/chebyshev.hpp"
#include "pantolab/complex.hpp"
#include "pantolab/errors.hpp"
#include "pantolab/prec.hpp"
#include "pantolab/real.hpp"
#include "pantolab/series.hpp"

namespace pantolab {

/// Polynomial segment of an initial function.  Coefficients are monomial in
/// the scaled variable t = (2x - lo - hi) / (hi - lo), so piece data stays
/// well conditioned regardless of where the interval sits.
struct PolyPiece {
    Real lo, hi;
    std::vector<Complex> coeffs;

    Complex eval(const Real& x) const {
        prec_t wp = std::max(x.prec(), lo.prec());
        Real t = (x * 2L - (lo + hi)) / (hi - lo);
        Complex acc(0.0, 0.0, wp);
        for (size_t k = coeffs.size(); k-- > 0;) acc = acc * t + coeffs[k];
        return acc;
    }

    bool is_real() const {
        for (const auto& c : coeffs)
            if (!c.is_real()) return false;
        return true;
    }
};

enum class TableRule { linear, cubic_spline };

/// Initial data for the method of steps: a continuous function on
/// [lambda x0, x0] given as polynomial pieces, interpolated samples, or the
/// restriction of the power-series solution itself.
class InitialFunction {
  public:
    enum class Kind { pieces, table, analytic };

    static InitialFunction from_pieces(std::vector<PolyPiece> pieces,
                                       double join_rel_tol = 1e-9) {
        if (pieces.empty()) throw InvalidInput("initial function needs at least one piece");
        std::sort(pieces.begin(), pieces.end(),
                  [](const PolyPiece& p, const PolyPiece& r) { return p.lo < r.lo; });
        Real scale(0L, 64);
        for (const auto& p : pieces) {
            if (!(p.hi > p.lo)) throw InvalidInput("initial function piece has an empty interval");
            if (p.coeffs.empty()) throw InvalidInput("initial function piece has no coefficients");
            for (const auto& c : p.coeffs) scale = max(scale, abs(c));
        }
        if (scale.is_zero()) scale = Real(1L, 64);
        Real jtol = scale * Real(join_rel_tol, 64);
        for (size_t i = 0; i + 1 < pieces.size(); ++i) {
            const Real& r = pieces[i].hi;
            const Real& l = pieces[i + 1].lo;
            Real gap = abs(r - l);
            if (gap > (pieces[i].hi - pieces[i].lo) * Real(join_rel_tol, 64))
                throw InvalidInput("initial function pieces leave a gap near x = " + r.str(12));
            Complex jump = pieces[i].eval(r) - pieces[i + 1].eval(l);
            if (abs(jump) > jtol)
                throw InvalidInput("initial function is discontinuous at x = " + r.str(12));
            // reconcile joints exactly: data is only trusted to the join
            // tolerance, and continuation needs genuinely continuous input,
            // or corner-image samples straddle a residual jump forever
            if (!(abs(jump).is_zero()))
                pieces[i + 1].coeffs[0] = pieces[i + 1].coeffs[0] + jump;
        }
        InitialFunction f(Kind::pieces, pieces.front().lo, pieces.back().hi);
        for (size_t i = 1; i < pieces.size(); ++i) f.corners_.push_back(pieces[i].lo);
        for (const auto& p : pieces) f.real_ = f.real_ && p.is_real();
        f.pieces_ = std::move(pieces);
        return f;
    }

    static InitialFunction from_table(std::vector<Real> xs, std::vector<Complex> ys,
                                      TableRule rule = TableRule::linear) {
        if (xs.size() != ys.size()) throw InvalidInput("tabulated initial function: xs/ys size mismatch");
        if (xs.size() < 2) throw InvalidInput("tabulated initial function needs at least two samples");
        for (size_t i = 0; i + 1 < xs.size(); ++i)
            if (!(xs[i] < xs[i + 1]))
                throw InvalidInput("tabulated initial function: abscissae must increase strictly");
        InitialFunction f(Kind::table, xs.front(), xs.back());
        f.rule_ = rule;
        for (const auto& y : ys) f.real_ = f.real_ && y.is_real();
        for (size_t i = 1; i + 1 < xs.size(); ++i) f.corners_.push_back(xs[i]);
        if (rule == TableRule::cubic_spline) {
            if (xs.size() < 3)
                throw InvalidInput("cubic spline interpolation needs at least three samples");
            f.spline_ = natural_spline_moments(xs, ys);
        }
        f.xs_ = std::move(xs);
        f.ys_ = std::move(ys);
        return f;
    }

    /// Restriction of the entire power-series solution with the given
    /// parameters (normalized y(0) = 1) to [src.lambda * x0, x0].
    static InitialFunction from_series(const PantographParams& src, const Real& x0,
                                       PrecContext ctx) {
        if (!(x0 > 0L)) throw InvalidInput("initial function requires x0 > 0");
        prec_t wp = std::max(x0.prec(), src.lambda.prec());
        InitialFunction f(Kind::analytic, src.lambda.with_prec(wp) * x0.with_prec(wp),
                          x0.with_prec(wp));
        f.src_.emplace(src);
        f.src_ctx_ = ctx;
        f.real_ = src.is_real();
        return f;
    }

    /// Constant initial data, the classic seed for residual sanity checks.
    static InitialFunction constant(const Real& xmin, const Real& x0, const Complex& value) {
        return from_pieces({PolyPiece{xmin, x0, {value}}});
    }

    Kind kind() const { return kind_; }
    const Real& x0() const { return x0_; }
    const Real& xmin() const { return xmin_; }
    bool is_real() const { return real_; }

    /// Interior abscissae where the data may have a corner; the solver
    /// splits segments at forward images of these.
    const std::vector<Real>& corners() const { return corners_; }

    Complex eval(const Real& x) const {
        Real xc = clamp_domain(x);
        switch (kind_) {
            case Kind::pieces: {
                size_t i = locate(xc, [this](size_t k) { return pieces_[k].hi; }, pieces_.size());
                return pieces_[i].eval(xc);
            }
            case Kind::table:
                return rule_ == TableRule::linear ? table_linear(xc) : table_cubic(xc);
            case Kind::analytic:
                return pantograph_eval_direct(Complex(xc), *src_, src_ctx_).value;
        }
        throw Error("initial function: unreachable kind");
    }

  private:
    InitialFunction(Kind k, Real xmin, Real x0)
        : kind_(k), xmin_(std::move(xmin)), x0_(std::move(x0)) {
        if (!(x0_ > xmin_)) throw InvalidInput("initial function domain is empty");
    }

    Real clamp_domain(const Real& x) const {
        Real slack = (x0_ - xmin_) * Real(1e-9, 64);
        if (x < xmin_) {
            if (x < xmin_ - slack)
                throw DomainError("initial function evaluated left of its domain at x = " + x.str(12));
            return xmin_;
        }
        if (x > x0_) {
            if (x > x0_ + slack)
                throw DomainError("initial function evaluated right of its domain at x = " + x.str(12));
            return x0_;
        }
        return x;
    }

    /// Least index i with x <= hi(i); assumes hi is increasing.
    template <class HiFn>
    static size_t locate(const Real& x, HiFn&& hi, size_t n) {
        size_t lo = 0, up = n - 1;
        while (lo < up) {
            size_t mid = (lo + up) / 2;
            if (x <= hi(mid))
                up = mid;
            else
                lo = mid + 1;
        }
        return lo;
    }

    Complex table_linear(const Real& x) const {
        size_t i = locate(x, [this](size_t k) { return xs_[k + 1]; }, xs_.size() - 1);
        Real t = (x - xs_[i]) / (xs_[i + 1] - xs_[i]);
        return ys_[i] + (ys_[i + 1] - ys_[i]) * t;
    }

    Complex table_cubic(const Real& x) const {
        size_t i = locate(x, [this](size_t k) { return xs_[k + 1]; }, xs_.size() - 1);
        Real h = xs_[i + 1] - xs_[i];
        Real dl = x - xs_[i];
        Real dr = xs_[i + 1] - x;
        Complex cubic = (spline_[i] * (dr * dr * dr) + spline_[i + 1] * (dl * dl * dl)) / (h * 6L);
        Complex lin = (ys_[i] - spline_[i] * (h * h / 6L)) * (dr / h) +
                      (ys_[i + 1] - spline_[i + 1] * (h * h / 6L)) * (dl / h);
        return cubic + lin;
    }

    /// Natural-spline second derivatives by the Thomas algorithm.
    static std::vector<Complex> natural_spline_moments(const std::vector<Real>& xs,
                                                       const std::vector<Complex>& ys) {
        size_t n = xs.size();
        prec_t wp = xs.front().prec();
        for (const auto& x : xs) wp = std::max(wp, x.prec());
        std::vector<Complex> m(n, Complex(0.0, 0.0, wp));
        if (n == 2) return m;
        std::vector<Real> diag(n - 2, Real(0L, wp)), upper(n - 2, Real(0L, wp));
        std::vector<Complex> rhs(n - 2, Complex(0.0, 0.0, wp));
        for (size_t i = 1; i + 1 < n; ++i) {
            Real hl = xs[i] - xs[i - 1];
            Real hr = xs[i + 1] - xs[i];
            diag[i - 1] = (hl + hr) * 2L;
            upper[i - 1] = hr;
            rhs[i - 1] = ((ys[i + 1] - ys[i]) / hr - (ys[i] - ys[i - 1]) / hl) * 6L;
        }
        for (size_t i = 1; i + 2 < n; ++i) {
            Real w = (xs[i + 1] - xs[i]) / diag[i - 1];
            diag[i] = diag[i] - w * upper[i - 1];
            rhs[i] = rhs[i] - rhs[i - 1] * w;
        }
        for (size_t i = n - 2; i-- > 0;) {
            Complex acc = rhs[i];
            if (i + 1 < n - 2) acc = acc - m[i + 2] * upper[i];
            m[i + 1] = acc / diag[i];
        }
        return m;
    }

    Kind kind_;
    Real xmin_, x0_;
    bool real_ = true;
    std::vector<PolyPiece> pieces_;
    std::vector<Real> xs_;
    std::vector<Complex> ys_;
    TableRule rule_ = TableRule::linear;
    std::vector<Complex> spline_;
    std::optional<PantographParams> src_;
    PrecContext src_ctx_{};
    std::vector<Real> corners_;
};

struct SolverOptions {
    long start_degree = 16;
    long max_degree = 128;
    int kink_generations = 6;
    int max_bisect_depth = 14;
    /// Multiplies the per-segment resolution target; < 1 forces finer fits.
    double tol_factor = 1.0;
};

namespace detail {

inline Complex segments_eval(const std::vector<ChebInterpolantC>& segs, const InitialFunction& phi,
                             const Real& x) {
    if (x <= phi.x0() || segs.empty()) return phi.eval(x);
    size_t lo = 0, up = segs.size() - 1;
    while (lo < up) {
        size_t mid = (lo + up) / 2;
        if (x <= segs[mid].hi)
            up = mid;
        else
            lo = mid + 1;
    }
    return segs[lo].eval(x);
}

/// Forward images of the initial data's corners under repeated q-scaling.
/// A corner loses one order of roughness per image, so a few generations
/// suffice; beyond them plain degree adaptation resolves the remainder.
inline std::vector<Real> corner_images(const std::vector<Real>& corners, const Real& q,
                                       const Real& top, int generations) {
    std::vector<Real> out;
    for (const auto& c : corners) {
        Real pos = c;
        for (int g = 0; g < generations; ++g) {
            pos = pos * q;
            if (pos > top) break;
            out.push_back(pos);
        }
    }
    std::sort(out.begin(), out.end(), [](const Real& a, const Real& b) { return a < b; });
    return out;
}

/// Build one sub-segment of the explicit step
///   y(x) = e^{b(x-l)} (y(l) + a * int_l^x e^{-b(s-l)} y(lambda s) ds),
/// adapting the Chebyshev degree and bisecting when the cap is hit.
/// Returns the absolute tail contributed; appends the segment(s).
template <class DelayedFn>
Real first_order_segment(std::vector<ChebInterpolantC>& segs, const Real& l, const Real& h,
                         Complex y_l, const DelayedFn& delayed, const Complex& a, const Complex& b,
                         prec_t wp, const Real& tol_rel, const SolverOptions& opt, int depth) {
    Real len = h - l;
    Real bplus = max(Real(0L, wp), b.re);
    Real alen = abs(a) * len * exp(bplus * len);
    bool bzero = b.re.is_zero() && b.im.is_zero();
    for (long d = opt.start_degree; d <= opt.max_degree; d *= 2) {
        std::vector<Real> nodes = cheb_nodes(l, h, size_t(d), wp);
        std::vector<Complex> eb;
        std::vector<Complex> fv;
        fv.reserve(nodes.size());
        for (const auto& s : nodes) {
            Complex ys = delayed(s);
            if (bzero) {
                fv.push_back(std::move(ys));
            } else {
                Complex e = exp(b * (s - l));
                fv.push_back(ys / e);
                eb.push_back(std::move(e));
            }
        }
        ChebInterpolantC f = cheb_fit_values(fv, l, h, wp);
        ChebInterpolantC F = f.antiderivative();
        std::vector<Complex> yv;
        yv.reserve(nodes.size());
        for (size_t j = 0; j < nodes.size(); ++j) {
            Complex val = y_l + a * F.eval(nodes[j]);
            if (!bzero) val = eb[j] * val;
            yv.push_back(std::move(val));
        }
        ChebInterpolantC y = cheb_fit_values(yv, l, h, wp);
        Real tail = y.trailing_mag() + f.trailing_mag() * alen;
        if (tail <= tol_rel * y.max_coeff_mag()) {
            y.tail_abs = tail;
            segs.push_back(std::move(y));
            return tail;
        }
    }
    if (depth >= opt.max_bisect_depth)
        throw PrecisionError("segment refinement stalled near x = " + l.str(12) +
                                 "; the initial data may be rougher than continuous",
                             long(wp) * 2);
    Real mid = (l + h) / 2L;
    Real e1 = first_order_segment(segs, l, mid, std::move(y_l), delayed, a, b, wp, tol_rel, opt,
                                  depth + 1);
    Complex ymid = segs.back().eval(mid);
    Real e2 = first_order_segment(segs, mid, h, std::move(ymid), delayed, a, b, wp, tol_rel, opt,
                                  depth + 1);
    return e1 + e2;
}

} // namespace detail

/// Solution of y'(x) = a y(lambda x) + b y(x) for x >= x0, continued from
/// initial data phi by the method of steps on the geometric mesh x0 q^k.
/// global_err is the accumulated relative error estimate: every value the
/// solution reports is reliable to about global_err times the solution's
/// scale on the covering segment.  Reported, not certified.
struct PiecewiseSolution {
    PantographParams params;
    InitialFunction phi;
    std::vector<Real> mesh;
    std::vector<ChebInterpolantC> segments;
    Real global_err;
    bool real_valued;

    const Real& x0() const { return phi.x0(); }
    const Real& x_end() const { return segments.back().hi; }

    Complex eval(const Real& x) const {
        check_domain(x, phi.xmin());
        return detail::segments_eval(segments, phi, x);
    }

    /// y'(x) from the equation itself, which is exact wherever y is known;
    /// interpolants are never differentiated here.
    Complex derivative(const Real& x) const {
        check_domain(x, x0());
        return params.a * eval(params.lambda * x) + params.b * eval(x);
    }

    /// Defect of the stored interpolant against the equation, by spectral
    /// differentiation of the covering segment.  Diagnostic; O(d) per call.
    Complex residual(const Real& x) const {
        check_domain(x, x0());
        const ChebInterpolantC& seg = segment_at(x);
        return seg.derivative().eval(x) - derivative(x);
    }

    /// Magnitude scale of the solution near x, for error normalization.
    Real local_scale(const Real& x) const {
        if (x <= x0()) return abs(phi.eval(x));
        return segment_at(x).max_coeff_mag();
    }

    const ChebInterpolantC& segment_at(const Real& x) const {
        size_t lo = 0, up = segments.size() - 1;
        while (lo < up) {
            size_t mid = (lo + up) / 2;
            if (x <= segments[mid].hi)
                up = mid;
            else
                lo = mid + 1;
        }
        return segments[lo];
    }

  private:
    void check_domain(const Real& x, const Real& left) const {
        Real slack = (x_end() - left) * Real(1e-12, 64);
        if (x < left - slack || x > x_end() + slack)
            throw DomainError("solution evaluated outside [" + left.str(12) + ", " +
                              x_end().str(12) + "] at x = " + x.str(12));
    }
};

inline PiecewiseSolution continue_solution(const PantographParams& params,
                                           const InitialFunction& phi, const Real& X_max,
                                           PrecContext ctx, const SolverOptions& opt = {}) {
    ctx.validate();
    prec_t wp = ctx.work(96);
    Real x0 = phi.x0().with_prec(wp);
    if (!(x0 > 0L)) throw InvalidInput("continuation requires x0 > 0");
    if (!(X_max > x0)) throw InvalidInput("continuation requires X_max > x0");
    Real lam = params.lambda.with_prec(wp);
    Real want_min = lam * x0;
    if (abs(phi.xmin() - want_min) > x0 * Real(1e-8, 64))
        throw InvalidInput("initial function domain must be [lambda x0, x0]; its left end is " +
                           phi.xmin().str(12) + " but lambda x0 = " + want_min.str(12));

    Real q = Real(1L, wp) / lam;
    std::vector<Real> mesh{x0};
    while (mesh.back() < X_max) mesh.push_back(mesh.back() * q);

    std::vector<Real> splits =
        detail::corner_images(phi.corners(), q, mesh.back(), opt.kink_generations);

    Real tol_rel = max(Real(ctx.target_rel_err * opt.tol_factor, 64) / 16L,
                       ldexp(Real(1L, wp), 32 - long(wp)));

    PiecewiseSolution sol{params, phi, mesh, {}, Real(0L, wp),
                          params.is_real() && phi.is_real()};
    auto delayed = [&](const Real& s) { return detail::segments_eval(sol.segments, phi, lam * s); };

    Real abs_err(0L, wp);
    Complex y_left = phi.eval(x0);
    for (size_t k = 0; k + 1 < mesh.size(); ++k) {
        const Real& cl = mesh[k];
        const Real& ch = mesh[k + 1];
        Real len = ch - cl;
        Real margin = len * Real(1e-9, 64);

        std::vector<Real> cuts{cl};
        for (const auto& s : splits)
            if (s > cl + margin && s < ch - margin && abs(s - cuts.back()) > margin)
                cuts.push_back(s);
        cuts.push_back(ch);

        Real cell_tail(0L, wp);
        size_t first_new = sol.segments.size();
        for (size_t i = 0; i + 1 < cuts.size(); ++i) {
            cell_tail += detail::first_order_segment(sol.segments, cuts[i], cuts[i + 1], y_left,
                                                     delayed, params.a, params.b, wp, tol_rel, opt,
                                                     0);
            y_left = sol.segments.back().eval(cuts[i + 1]);
        }

        Real scale(0L, wp);
        for (size_t i = first_new; i < sol.segments.size(); ++i)
            scale = max(scale, sol.segments[i].max_coeff_mag());
        if (!scale.is_finite())
            throw PrecisionError("solution magnitude exceeds the representable range near x = " +
                                     cl.str(12),
                                 ctx.bits);
        if (scale.is_zero()) scale = Real(1L, wp);

        Real egrow = exp(max(Real(0L, wp), params.b.re) * len);
        Real amp = egrow * (abs(params.a) * len * egrow + 1L);
        abs_err = abs_err * amp + cell_tail + ldexp(scale, 16 - long(wp));
        Real rel = abs_err / scale;
        if (sol.global_err < rel) sol.global_err = rel;
        if (rel > ldexp(Real(1L, 64), -8)) {
            long lost = rel.exponent() + long(wp) - 16;
            throw PrecisionError("accumulated continuation error exceeds the precision budget",
                                 ctx.bits + std::max(64L, lost + 64));
        }
    }
    return sol;
}

/// One right-hand-side term a * y^{(k)}(alpha x) of a higher-order equation
/// with purely rescaled arguments.
struct HighOrderTerm {
    Complex a;
    Real alpha;
    long k;
};

/// y^{(m)}(x) = sum_j a_j y^{(k_j)}(alpha_j x + beta_j), with every beta
/// required to vanish; shifted arguments would need whole-line data.
struct HighOrderFDE {
    long m;
    std::vector<HighOrderTerm> terms;
    std::vector<Real> betas;

    HighOrderFDE(long m_, std::vector<HighOrderTerm> t, std::vector<Real> b = {})
        : m(m_), terms(std::move(t)), betas(std::move(b)) {
        if (m < 1) throw InvalidInput("higher-order equation requires order m >= 1");
        if (terms.empty()) throw InvalidInput("higher-order equation needs at least one term");
        for (const auto& tm : terms) {
            if (!(tm.alpha > 0L) || !(tm.alpha < 1L))
                throw InvalidInput("higher-order equation requires 0 < alpha < 1");
            if (tm.k < 0 || tm.k >= m)
                throw InvalidInput("higher-order equation requires derivative order k < m");
        }
        if (!betas.empty() && betas.size() != terms.size())
            throw InvalidInput("higher-order equation: betas must match terms");
    }

    bool shifted() const {
        for (const auto& b : betas)
            if (!b.is_zero()) return true;
        return false;
    }

    Real alpha_min() const {
        Real a = terms.front().alpha;
        for (const auto& t : terms) a = min(a, t.alpha);
        return a;
    }

    Real alpha_max() const {
        Real a = terms.front().alpha;
        for (const auto& t : terms) a = max(a, t.alpha);
        return a;
    }
};

/// Vector-valued continuation: segments[i] holds interpolants for
/// y, y', ..., y^{(m-1)} over one subinterval.
struct HighOrderSolution {
    HighOrderFDE fde;
    std::vector<InitialFunction> seeds;
    std::vector<Real> mesh;
    std::vector<std::vector<ChebInterpolantC>> segments;
    Real global_err;

    const Real& x0() const { return seeds.front().x0(); }
    const Real& x_end() const { return segments.back().front().hi; }

    /// Value of y^{(k)} at x, k < m.
    Complex eval(const Real& x, long k = 0) const {
        if (k < 0 || k >= fde.m) throw InvalidInput("derivative order out of range");
        Real slack = (x_end() - seeds.front().xmin()) * Real(1e-12, 64);
        if (x < seeds.front().xmin() - slack || x > x_end() + slack)
            throw DomainError("solution evaluated outside its covered range at x = " + x.str(12));
        if (x <= x0()) return seeds[size_t(k)].eval(x);
        return segment_at(x)[size_t(k)].eval(x);
    }

    /// Defect of y^{(m)} against the right-hand side, by spectral
    /// differentiation of the y^{(m-1)} interpolant.
    Complex residual(const Real& x) const {
        if (x < x0() || x > x_end())
            throw DomainError("residual requested outside [x0, x_end] at x = " + x.str(12));
        const auto& seg = segment_at(x);
        Complex lhs = seg[size_t(fde.m - 1)].derivative().eval(x);
        prec_t wp = x.prec();
        Complex rhs(0.0, 0.0, wp);
        for (const auto& t : fde.terms) rhs = rhs + t.a * eval(t.alpha * x, t.k);
        return lhs - rhs;
    }

    Real local_scale(const Real& x) const {
        if (x <= x0()) return abs(seeds.front().eval(x));
        return segment_at(x).front().max_coeff_mag();
    }

    const std::vector<ChebInterpolantC>& segment_at(const Real& x) const {
        size_t lo = 0, up = segments.size() - 1;
        while (lo < up) {
            size_t mid = (lo + up) / 2;
            if (x <= segments[mid].front().hi)
                up = mid;
            else
                lo = mid + 1;
        }
        return segments[lo];
    }
};

namespace detail {

inline Complex high_order_lookup(const HighOrderSolution& sol, const Real& x, long k) {
    if (x <= sol.seeds.front().x0()) return sol.seeds[size_t(k)].eval(x);
    return sol.segment_at(x)[size_t(k)].eval(x);
}

/// m-fold repeated integration of the fitted right-hand side over [l, h],
/// seeded with the component values at l.  All components stay polynomial,
/// so only the right-hand-side fit needs degree adaptation.
inline Real high_order_segment(HighOrderSolution& sol, const Real& l, const Real& h,
                               const std::vector<Complex>& y_l, prec_t wp, const Real& tol_rel,
                               const SolverOptions& opt, int depth) {
    long m = sol.fde.m;
    Real len = h - l;
    Real lenpow = Real(1L, wp);
    for (long j = 1; j <= m; ++j) lenpow = lenpow * len / double(j);
    for (long d = opt.start_degree; d <= opt.max_degree; d *= 2) {
        std::vector<Real> nodes = cheb_nodes(l, h, size_t(d), wp);
        std::vector<Complex> gv;
        gv.reserve(nodes.size());
        for (const auto& s : nodes) {
            Complex acc(0.0, 0.0, wp);
            for (const auto& t : sol.fde.terms)
                acc = acc + t.a * high_order_lookup(sol, t.alpha * s, t.k);
            gv.push_back(std::move(acc));
        }
        ChebInterpolantC g = cheb_fit_values(gv, l, h, wp);
        Real gtail = g.trailing_mag();
        Real gscale = g.max_coeff_mag();
        std::vector<ChebInterpolantC> comp;
        comp.reserve(size_t(m));
        ChebInterpolantC cur = std::move(g);
        for (long k = m - 1; k >= 0; --k) {
            cur = cur.antiderivative();
            cur.coeffs[0] = cur.coeffs[0] + y_l[size_t(k)];
            comp.push_back(cur);
        }
        std::reverse(comp.begin(), comp.end());
        Real ytail = comp[0].trailing_mag() + gtail * lenpow;
        Real yscale = comp[0].max_coeff_mag();
        if (ytail <= tol_rel * yscale && gtail <= tol_rel * max(gscale, yscale)) {
            comp[0].tail_abs = ytail;
            sol.segments.push_back(std::move(comp));
            return ytail;
        }
    }
    if (depth >= opt.max_bisect_depth)
        throw PrecisionError("segment refinement stalled near x = " + l.str(12) +
                                 "; the initial data may be rougher than continuous",
                             long(wp) * 2);
    Real mid = (l + h) / 2L;
    Real e1 = high_order_segment(sol, l, mid, y_l, wp, tol_rel, opt, depth + 1);
    std::vector<Complex> y_mid;
    y_mid.reserve(size_t(m));
    for (long k = 0; k < m; ++k) y_mid.push_back(sol.segments.back()[size_t(k)].eval(mid));
    Real e2 = high_order_segment(sol, mid, h, y_mid, wp, tol_rel, opt, depth + 1);
    return e1 + e2;
}

} // namespace detail

inline HighOrderSolution continue_high_order(const HighOrderFDE& fde,
                                             const std::vector<InitialFunction>& seeds,
                                             const Real& X_max, PrecContext ctx,
                                             const SolverOptions& opt = {}) {
    ctx.validate();
    if (fde.shifted())
        throw Unsupported("shifted arguments (beta != 0) need initial data on a whole line");
    if (long(seeds.size()) != fde.m)
        throw InvalidInput("higher-order continuation needs one seed per derivative order 0..m-1");
    prec_t wp = ctx.work(96);
    Real x0 = seeds.front().x0().with_prec(wp);
    if (!(x0 > 0L)) throw InvalidInput("continuation requires x0 > 0");
    if (!(X_max > x0)) throw InvalidInput("continuation requires X_max > x0");
    Real amin = fde.alpha_min().with_prec(wp);
    Real want_min = amin * x0;
    for (const auto& s : seeds) {
        if (abs(s.x0() - x0) > x0 * Real(1e-8, 64))
            throw InvalidInput("all seeds must share the same x0");
        if (abs(s.xmin() - want_min) > x0 * Real(1e-8, 64))
            throw InvalidInput("seed domain must be [alpha_min x0, x0]; a left end is " +
                               s.xmin().str(12) + " but alpha_min x0 = " + want_min.str(12));
    }

    Real Q = Real(1L, wp) / fde.alpha_max().with_prec(wp);
    std::vector<Real> mesh{x0};
    while (mesh.back() < X_max) mesh.push_back(mesh.back() * Q);

    std::vector<Real> corners;
    for (const auto& s : seeds)
        corners.insert(corners.end(), s.corners().begin(), s.corners().end());
    std::vector<Real> splits;
    {
        std::vector<Real> gen = corners;
        for (int g = 0; g < opt.kink_generations && !gen.empty() && splits.size() < 512; ++g) {
            std::vector<Real> next;
            for (const auto& c : gen)
                for (const auto& t : fde.terms) {
                    Real img = c / t.alpha;
                    if (img < mesh.back()) next.push_back(img);
                }
            std::sort(next.begin(), next.end(), [](const Real& a, const Real& b) { return a < b; });
            next.erase(std::unique(next.begin(), next.end(),
                                   [&](const Real& a, const Real& b) {
                                       return abs(a - b) <= a * Real(1e-12, 64);
                                   }),
                       next.end());
            for (const auto& p : next)
                if (p > x0) splits.push_back(p);
            gen = std::move(next);
        }
        std::sort(splits.begin(), splits.end(), [](const Real& a, const Real& b) { return a < b; });
    }

    Real tol_rel = max(Real(ctx.target_rel_err * opt.tol_factor, 64) / 16L,
                       ldexp(Real(1L, wp), 32 - long(wp)));

    HighOrderSolution sol{fde, seeds, mesh, {}, Real(0L, wp)};
    Real asum(0L, wp);
    for (const auto& t : fde.terms) asum += abs(t.a);

    Real abs_err(0L, wp);
    std::vector<Complex> y_left;
    y_left.reserve(size_t(fde.m));
    for (long k = 0; k < fde.m; ++k) y_left.push_back(seeds[size_t(k)].eval(x0));

    for (size_t cell = 0; cell + 1 < mesh.size(); ++cell) {
        const Real& cl = mesh[cell];
        const Real& ch = mesh[cell + 1];
        Real len = ch - cl;
        Real margin = len * Real(1e-9, 64);

        std::vector<Real> cuts{cl};
        for (const auto& s : splits)
            if (s > cl + margin && s < ch - margin && abs(s - cuts.back()) > margin)
                cuts.push_back(s);
        cuts.push_back(ch);

        Real cell_tail(0L, wp);
        size_t first_new = sol.segments.size();
        for (size_t i = 0; i + 1 < cuts.size(); ++i) {
            cell_tail += detail::high_order_segment(sol, cuts[i], cuts[i + 1], y_left, wp, tol_rel,
                                                    opt, 0);
            y_left.clear();
            for (long k = 0; k < fde.m; ++k)
                y_left.push_back(sol.segments.back()[size_t(k)].eval(cuts[i + 1]));
        }

        Real scale(0L, wp);
        for (size_t i = first_new; i < sol.segments.size(); ++i)
            scale = max(scale, sol.segments[i].front().max_coeff_mag());
        if (!scale.is_finite())
            throw PrecisionError("solution magnitude exceeds the representable range near x = " +
                                     cl.str(12),
                                 ctx.bits);
        if (scale.is_zero()) scale = Real(1L, wp);

        Real amp(1L, wp);
        Real lenpow(1L, wp);
        for (long j = 1; j < fde.m; ++j) {
            lenpow = lenpow * len / double(j);
            amp += lenpow;
        }
        amp += asum * lenpow * len / double(fde.m);
        abs_err = abs_err * amp + cell_tail + ldexp(scale, 16 - long(wp));
        Real rel = abs_err / scale;
        if (sol.global_err < rel) sol.global_err = rel;
        if (rel > ldexp(Real(1L, 64), -8)) {
            long lost = rel.exponent() + long(wp) - 16;
            throw PrecisionError("accumulated continuation error exceeds the precision budget",
                                 ctx.bits + std::max(64L, lost + 64));
        }
    }
    return sol;
}

} // namespace pantolab

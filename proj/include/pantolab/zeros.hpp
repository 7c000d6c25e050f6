#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "pantolab/chebyshev.hpp"
#include "pantolab/roots.hpp"
#include "pantolab/series.hpp"
#include "pantolab/solver.hpp"

namespace pantolab {

enum class ZeroSource { series, piecewise_solution };

/// One positive zero of a real solution.  Indices are 0-based in order of
/// magnitude within the scanned window; `enclosure` is the final bracket
/// width left by the refinement.
struct ZeroRecord {
    long n;
    Real x;
    Real enclosure;
    ZeroSource source;
};

namespace detail {

/// Sign of the power-series solution at x, or 0 when the value does not
/// stand clear of the accumulated tail-plus-roundoff noise.
inline int series_sign(const Real& x, const PantographParams& p, PrecContext ctx) {
    SeriesResult r = pantograph_eval_direct(Complex(x), p, ctx);
    if (abs(r.value.re) > r.noise_bound * 8L) return r.value.re.sign();
    return 0;
}

/// Certified sign at a scan probe.  A probe that lands inside the noise band
/// is nudged by h/7 to either side; if no nearby point certifies, the
/// precision genuinely cannot separate the solution from zero there.
inline int probed_sign(Real& x, const Real& h, const PantographParams& p, PrecContext ctx) {
    int s = series_sign(x, p, ctx);
    if (s != 0) return s;
    for (long dir : {1L, -1L}) {
        Real shifted = x + h * dir / 7L;
        s = series_sign(shifted, p, ctx);
        if (s != 0) {
            x = shifted;
            return s;
        }
    }
    throw PrecisionError("cannot certify the solution sign near x = " + x.str(12),
                         ctx.bits + 128);
}

/// Series value at a fixed working precision, with no certification retry.
/// Root refinement evaluates at points ever closer to the zero, where the
/// value is honestly tiny relative to the largest term; re-certifying it
/// there demands unbounded precision for no gain, since the rounding floor
/// of a fixed-precision sum already sits far below the bracket-width stop.
inline Real series_value_fixed(const Real& x, const PantographParams& p, prec_t wp,
                               double target) {
    Complex zw(x.with_prec(wp));
    Real az = abs(zw.re);
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
    return sum_series(std::move(term0), next, wp, target).value.re;
}

/// Sign of the real part of a continued solution against its error floor.
inline int solution_sign(const PiecewiseSolution& sol, const Real& x) {
    Complex v = sol.eval(x);
    if (abs(v.re) > sol.local_scale(x) * sol.global_err * 8L) return v.re.sign();
    return 0;
}

} // namespace detail

/// Zeros of the power-series solution (normalized y(0) = 1) on [x_lo, x_hi].
/// The scan grid is geometric with `probes_per_gap` points per expected
/// inter-zero gap [x, qx]; it starts at the zero-free radius log 2/(|a|+|b|),
/// below which |y - 1| < 1.  Brackets are polished with the equation-exact
/// derivative y'(x) = a y(lambda x) + b y(x).
inline std::vector<ZeroRecord> enumerate_zeros(const PantographParams& p, const Real& x_lo,
                                               const Real& x_hi, size_t max_count,
                                               PrecContext ctx, long probes_per_gap = 32) {
    if (!p.is_real()) throw InvalidInput("zero enumeration requires real equation parameters");
    if (!(x_lo >= 0L) || !(x_hi > x_lo))
        throw InvalidInput("zero enumeration requires 0 <= x_lo < x_hi");
    if (probes_per_gap < 4) throw InvalidInput("zero enumeration needs >= 4 probes per gap");

    std::vector<ZeroRecord> out;
    if (max_count == 0) return out;
    prec_t wp = ctx.work(32);
    Real coeff_sum = abs(p.a.re) + abs(p.b.re);
    if (coeff_sum.is_zero()) return out;
    Real radius = log(Real(2L, wp)) / coeff_sum;
    Real ratio = pow(p.q().with_prec(wp), Real(1L, wp) / probes_per_gap);

    prec_t wf = ctx.work(288);
    auto value = [&](const Real& x) {
        return detail::series_value_fixed(x, p, wf, ctx.target_rel_err);
    };
    auto deriv = [&](const Real& x) {
        return p.a.re * value(p.lambda * x) + p.b.re * value(x);
    };

    Real x_prev = max(x_lo.with_prec(wp), radius);
    if (!(x_prev < x_hi)) return out;
    int s_prev = detail::probed_sign(x_prev, x_prev * (ratio - 1L), p, ctx);
    while (x_prev < x_hi && out.size() < max_count) {
        Real x_next = min(x_prev * ratio, x_hi.with_prec(wp));
        int s_next = detail::probed_sign(x_next, x_next - x_prev, p, ctx);
        if (s_prev * s_next < 0) {
            RootResult r = refine_root(value, deriv, x_prev, x_next, ctx);
            out.push_back({long(out.size()), r.root, r.enclosure, ZeroSource::series});
        }
        x_prev = std::move(x_next);
        s_prev = s_next;
    }
    return out;
}

/// Zeros of a real-valued continued solution on [x_lo, x_hi], clipped to the
/// continued range (x0, x_end].  Each segment's Chebyshev coefficients feed a
/// companion-matrix localization; candidates are bracketed by certified-sign
/// probes at segment ends and candidate midpoints, then refined with the
/// equation-exact derivative.  Zeros rediscovered across a shared knot are
/// deduplicated.
inline std::vector<ZeroRecord> enumerate_zeros(const PiecewiseSolution& sol, const Real& x_lo,
                                               const Real& x_hi, size_t max_count,
                                               PrecContext ctx) {
    if (!sol.real_valued) throw InvalidInput("zero enumeration requires a real-valued solution");
    if (!(x_hi > x_lo)) throw InvalidInput("zero enumeration requires x_lo < x_hi");

    auto value = [&](const Real& x) { return sol.eval(x).re; };
    auto deriv = [&](const Real& x) { return sol.derivative(x).re; };

    std::vector<ZeroRecord> found;
    Real lo_lim = max(x_lo, sol.x0());
    Real hi_lim = min(x_hi, sol.x_end());
    for (const auto& seg : sol.segments) {
        Real lo = max(seg.lo, lo_lim);
        Real hi = min(seg.hi, hi_lim);
        if (!(lo < hi)) continue;

        std::vector<Real> re_coeffs;
        re_coeffs.reserve(seg.coeffs.size());
        for (const auto& c : seg.coeffs) re_coeffs.push_back(c.re);
        ChebInterpolant re_part(seg.lo, seg.hi, std::move(re_coeffs));
        std::vector<double> cand = cheb_root_candidates(re_part);
        std::sort(cand.begin(), cand.end());

        prec_t wp = seg.prec();
        std::vector<Real> probes;
        probes.push_back(lo);
        double lo_d = lo.to_double(), hi_d = hi.to_double();
        double last = lo_d;
        for (double c : cand) {
            if (!(c > lo_d) || !(c < hi_d)) continue;
            if (last > lo_d) probes.push_back(Real((last + c) / 2, wp));
            last = c;
        }
        probes.push_back(hi);

        // certified signs at the probes; uncertified probes are nudged by a
        // hair, preferring the outward direction at segment ends so a zero
        // sitting exactly on a knot stays bracketed on at least one side
        Real delta = ldexp(hi - lo, -30);
        std::vector<Real> pts;
        std::vector<int> sgn;
        for (size_t i = 0; i < probes.size(); ++i) {
            Real x = probes[i];
            int s = detail::solution_sign(sol, x);
            if (s == 0) {
                std::vector<Real> trial;
                bool at_lo = i == 0, at_hi = i + 1 == probes.size();
                if (at_lo && probes[i] - delta >= sol.x0()) trial.push_back(x - delta);
                if (at_hi && probes[i] + delta <= sol.x_end()) trial.push_back(x + delta);
                trial.push_back(x + delta);
                trial.push_back(x - delta);
                trial.push_back(x + delta * 64L);
                trial.push_back(x - delta * 64L);
                for (const Real& t : trial) {
                    if (t < sol.x0() || t > sol.x_end()) continue;
                    s = detail::solution_sign(sol, t);
                    if (s != 0) {
                        x = t;
                        break;
                    }
                }
            }
            if (s == 0)
                throw PrecisionError("cannot certify the solution sign near x = " + x.str(12),
                                     ctx.bits + 128);
            if (!pts.empty() && !(x > pts.back())) continue;
            pts.push_back(std::move(x));
            sgn.push_back(s);
        }

        for (size_t i = 0; i + 1 < pts.size(); ++i) {
            if (sgn[i] * sgn[i + 1] >= 0) continue;
            RootResult r = refine_root(value, deriv, pts[i], pts[i + 1], ctx);
            found.push_back({0, r.root, r.enclosure, ZeroSource::piecewise_solution});
        }
    }

    std::sort(found.begin(), found.end(),
              [](const ZeroRecord& a, const ZeroRecord& b) { return a.x < b.x; });
    std::vector<ZeroRecord> out;
    for (auto& r : found) {
        if (!out.empty() &&
            r.x - out.back().x <= (r.enclosure + out.back().enclosure) * 16L + abs(r.x) * 1e-20)
            continue;
        out.push_back(std::move(r));
    }
    if (out.size() > max_count) out.erase(out.begin() + long(max_count), out.end());
    for (size_t i = 0; i < out.size(); ++i) out[i].n = long(i);
    return out;
}

/// Consistency report for the geometric spacing law x_{n+1} ~ q x_n.
struct RatioReport {
    bool pass;
    std::vector<Real> ratios;     // x_{n+1} / x_n
    std::vector<Real> deviations; // |ratio/q - 1|
    Real first_dev;
    Real final_dev;
    double tolerance;
};

/// Deviations of consecutive-zero ratios from q.  Passes when the final
/// deviation does not exceed the first and sits below the tolerance.
inline RatioReport ratio_check(const std::vector<ZeroRecord>& zeros, const Real& q,
                               double tolerance = 0.1) {
    if (zeros.size() < 3) throw InsufficientData("ratio check needs at least 3 zeros");
    prec_t wp = q.prec();
    RatioReport rep{false, {}, {}, Real(0L, wp), Real(0L, wp), tolerance};
    for (size_t i = 0; i + 1 < zeros.size(); ++i) {
        if (!(zeros[i].x > 0L) || !(zeros[i + 1].x > zeros[i].x))
            throw InvalidInput("ratio check needs positive strictly increasing zeros");
        Real r = zeros[i + 1].x / zeros[i].x;
        rep.deviations.push_back(abs(r / q - 1L));
        rep.ratios.push_back(std::move(r));
    }
    rep.first_dev = rep.deviations.front();
    rep.final_dev = rep.deviations.back();
    rep.pass = rep.final_dev <= rep.first_dev && rep.final_dev.to_double() < tolerance;
    return rep;
}

/// Least-squares fit of normalized zeros against gamma + c log(n)/n.
struct GammaFit {
    Real gamma;
    Real c;
    long offset;                 // index shift k0 applied before normalizing
    std::vector<Real> residuals; // fit residuals over the tail window
    Real rms;                    // corrected-model rms over the window
    Real tail_mean;              // plain mean of the last 5 normalized ratios
    Real uncorrected_rms;        // rms around tail_mean over the window
};

namespace detail {

struct GammaRows {
    std::vector<Real> u, y;
};

/// Normalized ratios y_n = x_n / ((n-k0) q^{n-k0-1}) with regressor
/// u_n = log(n)/n, over the records where both are defined.
inline GammaRows gamma_rows(const std::vector<ZeroRecord>& zeros, const Real& q, long k0,
                            prec_t wp) {
    GammaRows rows;
    for (const auto& z : zeros) {
        long m = z.n - k0;
        if (z.n < 1 || m < 1) continue;
        Real n(z.n, wp);
        rows.u.push_back(log(n) / n);
        rows.y.push_back(z.x.with_prec(wp) / (Real(m, wp) * pow(q, m - 1)));
    }
    return rows;
}

} // namespace detail

/// Fits x_n = (n-k0) q^{n-k0-1} (gamma + c log(n)/n) over candidate offsets
/// k0 in [0, 8], using the tail half of the usable rows (the model is
/// asymptotic; early indices carry unmodeled lower-order terms).  Returns the
/// offset with the smallest relative rms.
inline GammaFit gamma_fit(const std::vector<ZeroRecord>& zeros, const Real& q, PrecContext ctx) {
    if (zeros.size() < 6) throw InsufficientData("gamma fit needs at least 6 zeros");
    prec_t wp = ctx.work(32);
    Real qw = q.with_prec(wp);

    bool have = false;
    GammaFit best{Real(0L, wp), Real(0L, wp), 0, {}, Real(0L, wp), Real(0L, wp), Real(0L, wp)};
    Real best_score(0L, wp);
    for (long k0 = 0; k0 <= 8; ++k0) {
        detail::GammaRows rows = detail::gamma_rows(zeros, qw, k0, wp);
        size_t total = rows.u.size();
        if (total < 4) continue;
        size_t win = std::max<size_t>(6, (total + 1) / 2);
        if (win > total) win = total;
        size_t start = total - win;

        Real su(0L, wp), sy(0L, wp), suu(0L, wp), suy(0L, wp);
        for (size_t i = start; i < total; ++i) {
            su += rows.u[i];
            sy += rows.y[i];
            suu += rows.u[i] * rows.u[i];
            suy += rows.u[i] * rows.y[i];
        }
        Real nw(long(win), wp);
        Real det = nw * suu - su * su;
        if (!(det > ldexp(nw * suu + su * su + 1L, 24 - long(wp)))) continue;
        Real gamma = (suu * sy - su * suy) / det;
        Real c = (nw * suy - su * sy) / det;

        std::vector<Real> res;
        Real ss(0L, wp);
        for (size_t i = start; i < total; ++i) {
            Real r = rows.y[i] - gamma - c * rows.u[i];
            ss += r * r;
            res.push_back(std::move(r));
        }
        Real rms = sqrt(ss / nw);

        size_t tail = std::min<size_t>(5, win);
        Real tm(0L, wp);
        for (size_t i = total - tail; i < total; ++i) tm += rows.y[i];
        tm = tm / long(tail);
        Real us(0L, wp);
        for (size_t i = start; i < total; ++i) {
            Real r = rows.y[i] - tm;
            us += r * r;
        }
        Real urms = sqrt(us / nw);

        Real score = rms / max(abs(gamma), ldexp(Real(1L, wp), -long(wp) / 2));
        if (!have || score < best_score) {
            have = true;
            best_score = std::move(score);
            best = GammaFit{std::move(gamma), std::move(c),    k0,
                            std::move(res),   std::move(rms),  std::move(tm),
                            std::move(urms)};
        }
    }
    if (!have) throw InsufficientData("gamma fit found no usable index offset");
    if (!(best.gamma > 0L))
        throw ConvergenceError("gamma fit is degenerate: leading constant is not positive",
                               best.gamma.str(12));
    return best;
}

/// Deviation report against the shifted law x_{k0+k} ~ (k+1) q^k.
struct RobinsonReport {
    bool pass;
    long offset;
    std::vector<Real> deviations; // |x_{k0+k} / ((k+1) q^k) - 1| for k = 0, 1, ...
    Real last5_max;
    Real first_dev;
    Real final_dev;
    double gate;
};

namespace detail {

inline std::vector<Real> robinson_devs(const std::vector<ZeroRecord>& zeros, const Real& q,
                                       long k0, prec_t wp) {
    std::vector<Real> devs;
    for (const auto& z : zeros) {
        long k = z.n - k0;
        if (k < 0) continue;
        devs.push_back(abs(z.x.with_prec(wp) / (Real(k + 1, wp) * pow(q, k)) - 1L));
    }
    return devs;
}

/// Index shift in [0, 8] whose last five deviations have the smallest mean.
inline long robinson_offset(const std::vector<ZeroRecord>& zeros, const Real& q, prec_t wp) {
    long best = -1;
    Real best_mean(0L, wp);
    for (long k0 = 0; k0 <= 8; ++k0) {
        std::vector<Real> devs = robinson_devs(zeros, q, k0, wp);
        if (devs.size() < 6) continue;
        Real mean(0L, wp);
        for (size_t i = devs.size() - 5; i < devs.size(); ++i) mean += devs[i];
        if (best < 0 || mean < best_mean) {
            best = k0;
            best_mean = std::move(mean);
        }
    }
    if (best < 0) throw InsufficientData("offset detection needs 6 zeros past the shift window");
    return best;
}

} // namespace detail

/// Fits the index shift k0 and reports deviations from (k+1) q^k.  Passes
/// when the last five deviations stay under the gate and the trend has not
/// grown from the first deviation to the last.
inline RobinsonReport robinson_check(const std::vector<ZeroRecord>& zeros, const Real& q,
                                     double gate = 0.05) {
    prec_t wp = q.prec() < 128 ? 128 : q.prec();
    Real qw = q.with_prec(wp);
    long k0 = detail::robinson_offset(zeros, qw, wp);
    std::vector<Real> devs = detail::robinson_devs(zeros, qw, k0, wp);
    RobinsonReport rep{false,          k0,           std::move(devs), Real(0L, wp),
                       Real(0L, wp),   Real(0L, wp), gate};
    rep.first_dev = rep.deviations.front();
    rep.final_dev = rep.deviations.back();
    for (size_t i = rep.deviations.size() - 5; i < rep.deviations.size(); ++i)
        rep.last5_max = max(rep.last5_max, rep.deviations[i]);
    rep.pass = rep.last5_max.to_double() <= gate && rep.final_dev <= rep.first_dev;
    return rep;
}

/// Value of sum_{k>=1} sigma(k) q^{-k}, truncated with a certified tail.
struct DivisorGF {
    Real q;
    Real value;
    long terms;
};

namespace detail {

/// Sum of divisors of k by trial division.
inline long sigma_divisors(long k) {
    long s = 0;
    for (long d = 1; d * d <= k; ++d) {
        if (k % d != 0) continue;
        s += d;
        if (d != k / d) s += k / d;
    }
    return s;
}

} // namespace detail

/// Generating function of the sum-of-divisors function at q^{-1}.  The tail
/// past N is bounded via sigma(k) <= k^2 by the geometric majorant
/// (N+1)^2 r^{N+1} / (1 - rho) with rho = r ((N+2)/(N+1))^2, and summation
/// stops once that certified remainder drops below the target.
inline DivisorGF divisor_gf(const Real& q, PrecContext ctx) {
    if (!(q > 1L)) throw DomainError("divisor generating function diverges for q <= 1");
    prec_t wp = ctx.work(32);
    Real qw = q.with_prec(wp);
    Real r = Real(1L, wp) / qw;
    Real value(0L, wp);
    Real rk(1L, wp);
    for (long k = 1; k <= 2000000; ++k) {
        rk = rk * r;
        value += rk * detail::sigma_divisors(k);
        Real grow = Real(k + 2, wp) / Real(k + 1, wp);
        Real rho = r * grow * grow;
        if (!(rho < 1L)) continue;
        Real tail = Real(k + 1, wp) * Real(k + 1, wp) * rk * r / (Real(1L, wp) - rho);
        if (tail <= value * ctx.target_rel_err) return DivisorGF{std::move(qw), std::move(value), k};
    }
    throw PrecisionError("divisor generating function tail does not certify; q is too close to 1",
                         ctx.bits);
}

/// Tail diagnostic for the second-order law x_n ~ m q^{m-1} (1 + psi/m^2)
/// with m = n - k0 + 1; compares the tail of s_m = (x_n/(m q^{m-1}) - 1) m^2
/// against the divisor generating function.  The argument convention of psi
/// is not settled, so the agreement ratio is reported rather than gated.
struct ZhangReport {
    bool pass;
    long offset;
    std::vector<Real> s; // (x_n / (m q^{m-1}) - 1) m^2 for m = 1, 2, ...
    Real tail_mean;      // mean of the last 5 s values
    Real psi;            // divisor_gf(q)
    Real agreement;      // tail_mean / psi
};

inline ZhangReport zhang_check(const std::vector<ZeroRecord>& zeros, const Real& q,
                               PrecContext ctx) {
    if (zeros.size() < 10) throw InsufficientData("zhang check needs at least 10 zeros");
    prec_t wp = ctx.work(32);
    Real qw = q.with_prec(wp);
    DivisorGF gf = divisor_gf(qw, ctx);
    long k0 = detail::robinson_offset(zeros, qw, wp);

    ZhangReport rep{false, k0, {}, Real(0L, wp), gf.value, Real(0L, wp)};
    for (const auto& z : zeros) {
        long m = z.n - k0 + 1;
        if (m < 1) continue;
        Real mm(m, wp);
        rep.s.push_back((z.x.with_prec(wp) / (mm * pow(qw, m - 1)) - 1L) * mm * mm);
    }
    size_t tail = std::min<size_t>(5, rep.s.size());
    for (size_t i = rep.s.size() - tail; i < rep.s.size(); ++i) rep.tail_mean += rep.s[i];
    rep.tail_mean = rep.tail_mean / long(tail);
    rep.agreement = rep.tail_mean / rep.psi;
    rep.pass = abs(rep.agreement - 1L).to_double() <= 0.5;
    return rep;
}

/// One solved point of the zero map log x - log log x = (x0 + k) log q.
struct LemmaZero {
    long k;
    Real x;
    Real C; // x / (k q^k)
};

/// Newton solutions of the zero map for k = k_min..k_max, with the predicted
/// limit constant q^{x0} log q.
struct LemmaZeroMap {
    long k_min;
    std::vector<LemmaZero> entries;
    Real limit;
};

/// Solves log x - log log x = (x0 + k) log q for each admissible k.  The
/// right-hand side must clear 1 (the map's value at x = e) for the root to
/// exist above e, so k starts at the smallest index with (x0 + k) log q
/// >= 1.1.  Newton runs from the seed (x0 + k) log q * q^{x0+k}, which sits
/// below the root; the iteration is monotone increasing from there.
inline LemmaZeroMap lemma_zero_map(const Real& x0, const Real& lambda, long k_max,
                                   PrecContext ctx) {
    if (!(x0 >= 0L) || !(x0 < 1L)) throw InvalidInput("zero map requires x0 in [0, 1)");
    if (!(lambda > 0L) || !(lambda < 1L)) throw InvalidInput("zero map requires 0 < lambda < 1");
    prec_t wp = ctx.work(32);
    Real q = Real(1L, wp) / lambda.with_prec(wp);
    Real L = log(q);
    Real x0w = x0.with_prec(wp);

    long k_min = 1;
    while (((x0w + k_min) * L).to_double() < 1.1) ++k_min;
    if (k_max < k_min)
        throw InvalidInput("zero map needs k_max >= " + std::to_string(k_min) +
                           " for this lambda");

    LemmaZeroMap map{k_min, {}, pow(q, x0w) * L};
    Real stop = ldexp(Real(1L, wp), 24 - long(wp));
    for (long k = k_min; k <= k_max; ++k) {
        Real target = (x0w + k) * L;
        Real x = target * exp(target);
        bool done = false;
        for (int it = 0; it < 200 && !done; ++it) {
            Real lx = log(x);
            Real f = lx - log(lx) - target;
            Real step = f * x * lx / (lx - 1L);
            done = abs(step) <= x * stop;
            Real xn = x - step;
            if (!(xn > 3L)) xn = (x + 3L) / 2L;
            x = std::move(xn);
        }
        if (!done)
            throw ConvergenceError("zero map Newton stalled at k = " + std::to_string(k),
                                   x.str(20));
        Real C = x / (Real(k, wp) * pow(q, k));
        map.entries.push_back({k, std::move(x), std::move(C)});
    }
    return map;
}

} // namespace pantolab

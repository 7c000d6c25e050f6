#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <climits>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "pantolab/complex.hpp"
#include "pantolab/prec.hpp"

namespace pantolab {

namespace detail {
template <class T>
T zero_like(prec_t p);
template <>
inline Real zero_like<Real>(prec_t p) {
    return Real(0L, p);
}
template <>
inline Complex zero_like<Complex>(prec_t p) {
    return Complex(p);
}

inline Real abs_val(const Real& x) { return abs(x); }
inline Real abs_val(const Complex& z) { return abs(z); }
} // namespace detail

/// Chebyshev expansion sum c_k T_k(t), t the affine image of [lo, hi] on
/// [-1, 1].  Value type is Real or Complex; abscissae are always Real.
/// tail_abs is an absolute error bound for the represented function over
/// the interval (zero for exact polynomial content).
template <class T>
struct ChebSeries {
    Real lo, hi;
    std::vector<T> coeffs;
    Real tail_abs;

    ChebSeries(Real l, Real h, std::vector<T> c)
        : lo(std::move(l)), hi(std::move(h)), coeffs(std::move(c)), tail_abs(0L, lo.prec()) {}

    size_t degree() const { return coeffs.empty() ? 0 : coeffs.size() - 1; }

    prec_t prec() const { return coeffs.empty() ? lo.prec() : coeffs.front().prec(); }

    Real to_unit(const Real& x) const { return (x * 2L - (lo + hi)) / (hi - lo); }

    /// Clenshaw evaluation.
    T eval(const Real& x) const {
        prec_t wp = prec() > x.prec() ? prec() : x.prec();
        if (coeffs.empty()) return detail::zero_like<T>(wp);
        Real t = to_unit(x.with_prec(wp));
        Real t2 = t * 2L;
        T b1 = detail::zero_like<T>(wp);
        T b2 = detail::zero_like<T>(wp);
        for (size_t k = coeffs.size() - 1; k >= 1; --k) {
            T next = coeffs[k] + b1 * t2 - b2;
            b2 = std::move(b1);
            b1 = std::move(next);
        }
        return coeffs[0] + b1 * t - b2;
    }

    /// Antiderivative normalized to vanish at lo.  Degree grows by one.
    ChebSeries antiderivative() const {
        prec_t wp = prec();
        size_t d = degree();
        Real s = (hi - lo) / 2L;
        std::vector<T> a;
        a.reserve(d + 2);
        a.push_back(detail::zero_like<T>(wp));
        for (size_t k = 1; k <= d + 1; ++k) {
            // int T_0 = T_1 while int T_n = T_{n+1}/(2(n+1)) - T_{n-1}/(2(n-1)),
            // so the k = 1 row picks up c_0 with weight 1, not 1/2
            T num = k <= d ? coeffs[k - 1] : detail::zero_like<T>(wp);
            if (k == 1) num = num + num;
            if (k + 1 <= d) num = num - coeffs[k + 1];
            a.push_back(num * (s / double(2 * k)));
        }
        T a0 = detail::zero_like<T>(wp);
        for (size_t k = 1; k < a.size(); ++k) {
            if (k % 2)
                a0 += a[k];
            else
                a0 -= a[k];
        }
        a[0] = a0;
        ChebSeries out(lo, hi, std::move(a));
        out.tail_abs = tail_abs * s * 2L;
        return out;
    }

    /// Derivative series (degree drops by one).
    ChebSeries derivative() const {
        prec_t wp = prec();
        size_t d = degree();
        if (d == 0) {
            ChebSeries out(lo, hi, {detail::zero_like<T>(wp)});
            return out;
        }
        Real inv_s = Real(2L, wp) / (hi - lo);
        std::vector<T> b(d, detail::zero_like<T>(wp));
        for (size_t k = d; k >= 1; --k) {
            T bk = (k + 1 < d ? b[k + 1] : detail::zero_like<T>(wp)) + coeffs[k] * double(2 * k);
            b[k - 1] = std::move(bk);
        }
        b[0] = b[0] * Real(0.5, wp);
        for (auto& c : b) c = c * inv_s;
        ChebSeries out(lo, hi, std::move(b));
        out.tail_abs = tail_abs * inv_s * double(d ? d * d : 1);
        return out;
    }

    /// Max trailing-coefficient magnitude, the usual resolution proxy.
    Real trailing_mag() const {
        prec_t wp = prec();
        Real m(0L, wp);
        size_t n = coeffs.size();
        for (size_t k = n > 3 ? n - 3 : 0; k < n; ++k) m = max(m, detail::abs_val(coeffs[k]));
        return m;
    }

    Real max_coeff_mag() const {
        Real m(0L, prec());
        for (const auto& c : coeffs) m = max(m, detail::abs_val(c));
        return m;
    }
};

using ChebInterpolant = ChebSeries<Real>;
using ChebInterpolantC = ChebSeries<Complex>;

/// Chebyshev-Gauss-Lobatto nodes on [lo, hi], ordered hi -> lo.
inline std::vector<Real> cheb_nodes(const Real& lo, const Real& hi, size_t degree, prec_t wp) {
    std::vector<Real> xs;
    xs.reserve(degree + 1);
    Real mid = (lo.with_prec(wp) + hi.with_prec(wp)) / 2L;
    Real half = (hi.with_prec(wp) - lo.with_prec(wp)) / 2L;
    Real pi = Real::pi(wp);
    for (size_t j = 0; j <= degree; ++j) {
        Real t = cos(pi * double(j) / double(degree == 0 ? 1 : degree));
        xs.push_back(mid + half * t);
    }
    return xs;
}

/// Interpolate from samples fs taken at the CGL nodes of cheb_nodes(lo, hi,
/// degree, wp), in the same hi -> lo order.  The discrete cosine transform
/// is done directly in O(d^2) full-precision operations; degrees here stay
/// small enough that this is not a bottleneck.
template <class T>
ChebSeries<T> cheb_fit_values(const std::vector<T>& fs, const Real& lo, const Real& hi,
                              prec_t wp) {
    size_t degree = fs.size() - 1;
    if (degree == 0) return ChebSeries<T>(lo.with_prec(wp), hi.with_prec(wp), {fs[0]});

    Real pi = Real::pi(wp);
    std::vector<T> c(degree + 1, detail::zero_like<T>(wp));
    for (size_t j = 0; j <= degree; ++j) {
        Real tj = cos(pi * double(j) / double(degree));
        Real tj2 = tj * 2L;
        T fj = fs[j];
        if (j == 0 || j == degree) fj = fj * Real(0.5, wp);
        // cos(k j pi / d) by the T_k recurrence in k
        Real ck_prev(1.0, wp);
        Real ck = tj;
        c[0] += fj;
        for (size_t k = 1; k <= degree; ++k) {
            c[k] += fj * ck;
            Real nxt = tj2 * ck - ck_prev;
            ck_prev = std::move(ck);
            ck = std::move(nxt);
        }
    }
    Real norm = Real(2L, wp) / double(degree);
    for (auto& ck : c) ck = ck * norm;
    c[0] = c[0] * Real(0.5, wp);
    c[degree] = c[degree] * Real(0.5, wp);
    return ChebSeries<T>(lo.with_prec(wp), hi.with_prec(wp), std::move(c));
}

/// Interpolate f at the CGL nodes of the given degree.
template <class T>
ChebSeries<T> cheb_fit(const std::function<T(const Real&)>& f, const Real& lo, const Real& hi,
                       size_t degree, prec_t wp) {
    std::vector<Real> xs = cheb_nodes(lo, hi, degree, wp);
    std::vector<T> fs;
    fs.reserve(degree + 1);
    for (const auto& x : xs) fs.push_back(f(x));
    return cheb_fit_values(fs, lo, hi, wp);
}

/// Approximate real roots of a Real-coefficient Chebyshev series inside
/// [lo, hi], located via the colleague-matrix eigenproblem in double
/// precision.  Callers bracket and polish the candidates at full precision.
inline std::vector<double> cheb_root_candidates(const ChebInterpolant& p, double imag_tol = 1e-6,
                                                double unit_slack = 1e-8) {
    size_t n = p.coeffs.size();
    if (n == 0) return {};
    long emax = LONG_MIN;
    for (const auto& c : p.coeffs)
        if (!c.is_zero() && c.exponent() > emax) emax = c.exponent();
    if (emax == LONG_MIN) return {};
    std::vector<double> a(n);
    for (size_t k = 0; k < n; ++k) a[k] = ldexp(p.coeffs[k], -emax).to_double();
    size_t deg = n - 1;
    double amax = 0;
    for (double v : a) amax = std::max(amax, std::abs(v));
    while (deg > 0 && std::abs(a[deg]) < 1e-14 * amax) --deg;
    if (deg == 0) return {};
    if (deg == 1) {
        double t = -a[0] / a[1];
        if (std::abs(t) <= 1.0 + unit_slack) {
            double mid = ((p.lo + p.hi) / 2L).to_double();
            double half = ((p.hi - p.lo) / 2L).to_double();
            return {mid + half * t};
        }
        return {};
    }
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(deg, deg);
    M(0, 1) = 1.0;
    for (size_t j = 1; j + 1 < deg; ++j) {
        M(j, j - 1) = 0.5;
        M(j, j + 1) = 0.5;
    }
    for (size_t k = 0; k < deg; ++k) M(deg - 1, k) = -a[k] / (2.0 * a[deg]);
    M(deg - 1, deg - 2) += 0.5;
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);

    // few double Newton steps on the Clenshaw form: the unbalanced
    // eigensolve alone is only good to ~1e-4 when trailing coefficients
    // are small, which is plenty for seeding but worth tightening here
    auto clenshaw = [&](double t, const std::vector<double>& c, size_t n) {
        double b1 = 0, b2 = 0;
        for (size_t k = n; k >= 1; --k) {
            double nb = c[k] + 2 * t * b1 - b2;
            b2 = b1;
            b1 = nb;
        }
        return c[0] + t * b1 - b2;
    };
    std::vector<double> da(deg, 0.0);
    {
        std::vector<double> b(deg + 2, 0.0);
        for (size_t k = deg; k >= 1; --k) b[k - 1] = (k + 1 < deg ? b[k + 1] : 0.0) + 2.0 * double(k) * a[k];
        b[0] /= 2;
        da.assign(b.begin(), b.begin() + long(deg));
    }

    std::vector<double> roots;
    double mid = ((p.lo + p.hi) / 2L).to_double();
    double half = ((p.hi - p.lo) / 2L).to_double();
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        std::complex<double> ev = es.eigenvalues()[i];
        if (std::abs(ev.imag()) > imag_tol * (1.0 + std::abs(ev.real()))) continue;
        double t = ev.real();
        if (std::abs(t) > 1.0 + unit_slack) continue;
        t = std::clamp(t, -1.0, 1.0);
        for (int it = 0; it < 6; ++it) {
            double pv = clenshaw(t, a, deg);
            double dv = deg >= 1 ? clenshaw(t, da, deg - 1) : 0.0;
            if (dv == 0.0) break;
            double step = pv / dv;
            if (!std::isfinite(step) || std::abs(step) > 0.5) break;
            t -= step;
            if (std::abs(step) < 1e-15) break;
        }
        if (std::abs(t) > 1.0 + unit_slack) continue;
        roots.push_back(mid + half * std::clamp(t, -1.0, 1.0));
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

} // namespace pantolab

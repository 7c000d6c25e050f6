#pragma once

#include <string>
#include <utility>

#include "pantolab/real.hpp"

namespace pantolab {

/// Complex number over Real.  MPC is not assumed; the handful of complex
/// transcendentals the library needs are built from MPFR primitives.
/// log/pow use the principal branch (Arg in (-pi, pi], negative reals get
/// the limit from above).
class Complex {
  public:
    Real re, im;

    explicit Complex(prec_t prec) : re(0L, prec), im(0L, prec) {}
    Complex(Real r, Real i) : re(std::move(r)), im(std::move(i)) {}
    explicit Complex(Real r) : re(std::move(r)), im(0L, re.prec()) {}
    Complex(double r, double i, prec_t prec) : re(r, prec), im(i, prec) {}

    prec_t prec() const { return re.prec() > im.prec() ? re.prec() : im.prec(); }

    bool is_finite() const { return re.is_finite() && im.is_finite(); }
    bool is_real() const { return im.is_zero(); }

    std::string str() const {
        if (im.is_zero()) return re.str();
        std::string i = im.str();
        if (i[0] == '-') return re.str() + i.substr(0, 1) + i.substr(1) + "i";
        return re.str() + "+" + i + "i";
    }

    friend Complex operator-(const Complex& a) { return {-a.re, -a.im}; }

    friend Complex operator+(const Complex& a, const Complex& b) {
        return {a.re + b.re, a.im + b.im};
    }
    friend Complex operator-(const Complex& a, const Complex& b) {
        return {a.re - b.re, a.im - b.im};
    }
    friend Complex operator*(const Complex& a, const Complex& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend Complex operator/(const Complex& a, const Complex& b) {
        Real d = b.re * b.re + b.im * b.im;
        return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
    }

    friend Complex operator+(const Complex& a, const Real& b) { return {a.re + b, a.im}; }
    friend Complex operator+(const Real& a, const Complex& b) { return b + a; }
    friend Complex operator-(const Complex& a, const Real& b) { return {a.re - b, a.im}; }
    friend Complex operator-(const Real& a, const Complex& b) { return {a - b.re, -b.im}; }
    friend Complex operator*(const Complex& a, const Real& b) { return {a.re * b, a.im * b}; }
    friend Complex operator*(const Real& a, const Complex& b) { return b * a; }
    friend Complex operator/(const Complex& a, const Real& b) { return {a.re / b, a.im / b}; }
    friend Complex operator/(const Real& a, const Complex& b) {
        Real d = b.re * b.re + b.im * b.im;
        return {a * b.re / d, -(a * b.im) / d};
    }
    friend Complex operator+(const Complex& a, long b) { return {a.re + b, a.im}; }
    friend Complex operator-(const Complex& a, long b) { return {a.re - b, a.im}; }
    friend Complex operator*(const Complex& a, long b) { return {a.re * b, a.im * b}; }
    friend Complex operator/(const Complex& a, long b) { return {a.re / b, a.im / b}; }
    friend Complex operator*(const Complex& a, double b) { return {a.re * b, a.im * b}; }
    friend Complex operator/(const Complex& a, double b) { return {a.re / b, a.im / b}; }

    Complex& operator+=(const Complex& b) {
        re += b.re;
        im += b.im;
        return *this;
    }
    Complex& operator-=(const Complex& b) {
        re -= b.re;
        im -= b.im;
        return *this;
    }
    Complex& operator*=(const Complex& b) {
        *this = *this * b;
        return *this;
    }

    friend bool operator==(const Complex& a, const Complex& b) {
        return a.re == b.re && a.im == b.im;
    }
};

inline Complex conj(const Complex& z) { return {z.re, -z.im}; }

inline Real norm2(const Complex& z) { return z.re * z.re + z.im * z.im; }

inline Real abs(const Complex& z) { return hypot(z.re, z.im); }

/// Principal argument in (-pi, pi]; negative real axis maps to +pi.
inline Real arg(const Complex& z) { return atan2(z.im, z.re); }

inline Complex exp(const Complex& z) {
    Real m = exp(z.re);
    return {m * cos(z.im), m * sin(z.im)};
}

/// Principal logarithm.  Throws PoleError at zero.
inline Complex log(const Complex& z) {
    if (z.re.is_zero() && z.im.is_zero()) throw PoleError("log of zero");
    return {log(abs(z)), arg(z)};
}

inline Complex sqrt(const Complex& z) {
    if (z.im.is_zero() && z.re >= 0L) return Complex(sqrt(z.re));
    Real m = abs(z);
    Real u = sqrt((m + z.re) / 2L);
    Real v = sqrt((m - z.re) / 2L);
    if (z.im.sign() < 0) v = -v;
    return {u, v};
}

inline Complex pow(const Complex& b, const Complex& e) { return exp(e * log(b)); }

inline Complex pow(const Complex& b, long e) {
    if (e == 0) return Complex(1.0, 0.0, b.prec());
    Complex acc(1.0, 0.0, b.prec());
    Complex base = b;
    unsigned long n = e < 0 ? (unsigned long)(-e) : (unsigned long)e;
    while (n) {
        if (n & 1) acc *= base;
        base *= base;
        n >>= 1;
    }
    if (e < 0) return Real(1L, b.prec()) / acc;
    return acc;
}

inline Complex cos(const Complex& z) {
    return {cos(z.re) * cosh(z.im), -(sin(z.re) * sinh(z.im))};
}

inline Complex sin(const Complex& z) {
    return {sin(z.re) * cosh(z.im), cos(z.re) * sinh(z.im)};
}

} // namespace pantolab

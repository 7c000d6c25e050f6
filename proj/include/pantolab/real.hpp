#pragma once

#include <mpfr.h>

#include <cstdlib>
#include <string>
#include <utility>

#include "pantolab/errors.hpp"
#include "pantolab/prec.hpp"

namespace pantolab {

/// Arbitrary-precision real number backed by MPFR.
///
/// Every value carries its own precision; binary operations round correctly
/// at the larger of the two operand precisions.  Copy assignment preserves
/// the source precision, so values never silently lose bits.
class Real {
  public:
    explicit Real(prec_t prec) {
        mpfr_init2(v_, clamp(prec));
        mpfr_set_nan(v_);
    }
    Real(double x, prec_t prec) {
        mpfr_init2(v_, clamp(prec));
        mpfr_set_d(v_, x, MPFR_RNDN);
    }
    Real(long x, prec_t prec) {
        mpfr_init2(v_, clamp(prec));
        mpfr_set_si(v_, x, MPFR_RNDN);
    }
    Real(int x, prec_t prec) : Real(long(x), prec) {}

    /// Parse a decimal string.  Throws InvalidInput on trailing garbage.
    static Real parse(const std::string& s, prec_t prec) {
        Real r(prec);
        char* end = nullptr;
        int rc = mpfr_strtofr(r.v_, s.c_str(), &end, 10, MPFR_RNDN);
        (void)rc;
        if (end == s.c_str() || (end && *end != '\0'))
            throw InvalidInput("cannot parse real number: '" + s + "'");
        return r;
    }

    Real(const Real& o) {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
        mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    Real(Real&& o) noexcept {
        mpfr_init2(v_, MPFR_PREC_MIN);
        mpfr_swap(v_, o.v_);
    }
    Real& operator=(const Real& o) {
        if (this != &o) {
            mpfr_set_prec(v_, mpfr_get_prec(o.v_));
            mpfr_set(v_, o.v_, MPFR_RNDN);
        }
        return *this;
    }
    Real& operator=(Real&& o) noexcept {
        mpfr_swap(v_, o.v_);
        return *this;
    }
    ~Real() { mpfr_clear(v_); }

    prec_t prec() const { return mpfr_get_prec(v_); }

    /// Copy rounded to a different precision.
    Real with_prec(prec_t p) const {
        Real r(clamp(p));
        mpfr_set(r.v_, v_, MPFR_RNDN);
        return r;
    }

    mpfr_ptr raw() { return v_; }
    mpfr_srcptr raw() const { return v_; }

    // ---- queries -------------------------------------------------------

    bool is_nan() const { return mpfr_nan_p(v_) != 0; }
    bool is_inf() const { return mpfr_inf_p(v_) != 0; }
    bool is_finite() const { return mpfr_number_p(v_) != 0; }
    bool is_zero() const { return mpfr_zero_p(v_) != 0; }
    bool is_integer() const { return mpfr_integer_p(v_) != 0; }
    int sign() const { return mpfr_sgn(v_); }

    /// Binary exponent e with |x| in [2^(e-1), 2^e); 0 for zero/nan.
    long exponent() const {
        if (!is_finite() || is_zero()) return 0;
        return long(mpfr_get_exp(v_));
    }

    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
    long to_long() const { return mpfr_get_si(v_, MPFR_RNDN); }

    /// Shortest decimal string that parses back to the same value.
    std::string str() const {
        if (is_nan()) return "nan";
        if (is_inf()) return sign() < 0 ? "-inf" : "inf";
        if (is_zero()) return sign() < 0 ? "-0" : "0";
        mpfr_exp_t e;
        char* digits = mpfr_get_str(nullptr, &e, 10, 0, v_, MPFR_RNDN);
        std::string d(digits);
        mpfr_free_str(digits);
        std::string sgn;
        if (d[0] == '-') {
            sgn = "-";
            d = d.substr(1);
        }
        while (d.size() > 1 && d.back() == '0') d.pop_back();
        // digits are 0.d1d2... * 10^e; emit d1.d2...e(e-1)
        std::string out = sgn + d.substr(0, 1);
        if (d.size() > 1) out += "." + d.substr(1);
        out += "e" + std::to_string(long(e) - 1);
        return out;
    }

    /// Fixed number of significant digits (for human-facing summaries).
    std::string str(size_t digits) const {
        if (!is_finite()) return str();
        if (is_zero()) return "0";
        mpfr_exp_t e;
        char* p = mpfr_get_str(nullptr, &e, 10, digits, v_, MPFR_RNDN);
        std::string d(p);
        mpfr_free_str(p);
        std::string sgn;
        if (d[0] == '-') {
            sgn = "-";
            d = d.substr(1);
        }
        std::string out = sgn + d.substr(0, 1);
        if (d.size() > 1) out += "." + d.substr(1);
        out += "e" + std::to_string(long(e) - 1);
        return out;
    }

    // ---- arithmetic ----------------------------------------------------

    friend Real operator-(const Real& a) {
        Real r(a.prec());
        mpfr_neg(r.v_, a.v_, MPFR_RNDN);
        return r;
    }

#define PANTOLAB_REAL_BINOP(op, fn, fn_d, fn_si)                               \
    friend Real operator op(const Real& a, const Real& b) {                    \
        Real r(join(a, b));                                                    \
        fn(r.v_, a.v_, b.v_, MPFR_RNDN);                                       \
        return r;                                                              \
    }                                                                          \
    friend Real operator op(const Real& a, double b) {                         \
        Real r(a.prec());                                                      \
        fn_d(r.v_, a.v_, b, MPFR_RNDN);                                        \
        return r;                                                              \
    }                                                                          \
    friend Real operator op(const Real& a, long b) {                           \
        Real r(a.prec());                                                      \
        fn_si(r.v_, a.v_, b, MPFR_RNDN);                                       \
        return r;                                                              \
    }                                                                          \
    friend Real operator op(const Real& a, int b) { return a op long(b); }     \
    Real& operator op##=(const Real & b) {                                     \
        if (b.prec() > prec()) *this = (*this op b);                           \
        else fn(v_, v_, b.v_, MPFR_RNDN);                                      \
        return *this;                                                          \
    }                                                                          \
    Real& operator op##=(double b) {                                           \
        fn_d(v_, v_, b, MPFR_RNDN);                                            \
        return *this;                                                          \
    }                                                                          \
    Real& operator op##=(long b) {                                             \
        fn_si(v_, v_, b, MPFR_RNDN);                                           \
        return *this;                                                          \
    }

    PANTOLAB_REAL_BINOP(+, mpfr_add, mpfr_add_d, mpfr_add_si)
    PANTOLAB_REAL_BINOP(-, mpfr_sub, mpfr_sub_d, mpfr_sub_si)
    PANTOLAB_REAL_BINOP(*, mpfr_mul, mpfr_mul_d, mpfr_mul_si)
    PANTOLAB_REAL_BINOP(/, mpfr_div, mpfr_div_d, mpfr_div_si)
#undef PANTOLAB_REAL_BINOP

    friend Real operator+(double a, const Real& b) { return b + a; }
    friend Real operator*(double a, const Real& b) { return b * a; }
    friend Real operator+(long a, const Real& b) { return b + a; }
    friend Real operator*(long a, const Real& b) { return b * a; }
    friend Real operator+(int a, const Real& b) { return b + long(a); }
    friend Real operator*(int a, const Real& b) { return b * long(a); }
    friend Real operator-(double a, const Real& b) {
        Real r(b.prec());
        mpfr_d_sub(r.v_, a, b.v_, MPFR_RNDN);
        return r;
    }
    friend Real operator-(long a, const Real& b) { return -(b - a); }
    friend Real operator-(int a, const Real& b) { return -(b - long(a)); }
    friend Real operator/(double a, const Real& b) {
        Real r(b.prec());
        mpfr_d_div(r.v_, a, b.v_, MPFR_RNDN);
        return r;
    }
    friend Real operator/(long a, const Real& b) {
        Real r(b.prec());
        mpfr_si_div(r.v_, a, b.v_, MPFR_RNDN);
        return r;
    }
    friend Real operator/(int a, const Real& b) { return long(a) / b; }

    // ---- comparison (exact, no tolerance) ------------------------------

    friend bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }
    friend bool operator!=(const Real& a, const Real& b) { return mpfr_lessgreater_p(a.v_, b.v_) != 0; }
    friend bool operator<(const Real& a, const Real& b) { return mpfr_less_p(a.v_, b.v_) != 0; }
    friend bool operator<=(const Real& a, const Real& b) { return mpfr_lessequal_p(a.v_, b.v_) != 0; }
    friend bool operator>(const Real& a, const Real& b) { return mpfr_greater_p(a.v_, b.v_) != 0; }
    friend bool operator>=(const Real& a, const Real& b) { return mpfr_greaterequal_p(a.v_, b.v_) != 0; }

    friend bool operator<(const Real& a, double b) { return mpfr_cmp_d(a.v_, b) < 0; }
    friend bool operator<=(const Real& a, double b) { return mpfr_cmp_d(a.v_, b) <= 0; }
    friend bool operator>(const Real& a, double b) { return mpfr_cmp_d(a.v_, b) > 0; }
    friend bool operator>=(const Real& a, double b) { return mpfr_cmp_d(a.v_, b) >= 0; }
    friend bool operator==(const Real& a, double b) { return mpfr_cmp_d(a.v_, b) == 0; }
    friend bool operator<(const Real& a, long b) { return mpfr_cmp_si(a.v_, b) < 0; }
    friend bool operator<=(const Real& a, long b) { return mpfr_cmp_si(a.v_, b) <= 0; }
    friend bool operator>(const Real& a, long b) { return mpfr_cmp_si(a.v_, b) > 0; }
    friend bool operator>=(const Real& a, long b) { return mpfr_cmp_si(a.v_, b) >= 0; }
    friend bool operator==(const Real& a, long b) { return mpfr_cmp_si(a.v_, b) == 0; }
    friend bool operator==(const Real& a, int b) { return mpfr_cmp_si(a.v_, b) == 0; }
    friend bool operator<(double a, const Real& b) { return b > a; }
    friend bool operator>(double a, const Real& b) { return b < a; }

    // ---- constants -----------------------------------------------------

    static Real pi(prec_t p) {
        Real r(clamp(p));
        mpfr_const_pi(r.v_, MPFR_RNDN);
        return r;
    }
    static Real ln2(prec_t p) {
        Real r(clamp(p));
        mpfr_const_log2(r.v_, MPFR_RNDN);
        return r;
    }
    static Real euler_gamma(prec_t p) {
        Real r(clamp(p));
        mpfr_const_euler(r.v_, MPFR_RNDN);
        return r;
    }

  private:
    static prec_t clamp(prec_t p) { return p < MPFR_PREC_MIN ? MPFR_PREC_MIN : p; }
    static prec_t join(const Real& a, const Real& b) {
        return a.prec() > b.prec() ? a.prec() : b.prec();
    }

    mpfr_t v_;
};

// ---- elementary functions (result precision = operand precision) --------

#define PANTOLAB_REAL_FN(name, fn)                                             \
    inline Real name(const Real& x) {                                          \
        Real r(x.prec());                                                      \
        fn(r.raw(), x.raw(), MPFR_RNDN);                                       \
        return r;                                                              \
    }

PANTOLAB_REAL_FN(abs, mpfr_abs)
PANTOLAB_REAL_FN(sqrt, mpfr_sqrt)
PANTOLAB_REAL_FN(exp, mpfr_exp)
PANTOLAB_REAL_FN(expm1, mpfr_expm1)
PANTOLAB_REAL_FN(log, mpfr_log)
PANTOLAB_REAL_FN(log1p, mpfr_log1p)
PANTOLAB_REAL_FN(sin, mpfr_sin)
PANTOLAB_REAL_FN(cos, mpfr_cos)
PANTOLAB_REAL_FN(tan, mpfr_tan)
PANTOLAB_REAL_FN(atan, mpfr_atan)
PANTOLAB_REAL_FN(sinh, mpfr_sinh)
PANTOLAB_REAL_FN(cosh, mpfr_cosh)
#undef PANTOLAB_REAL_FN

// floor/ceil/trunc are 2-argument macros in mpfr.h, so spell them out
inline Real floor(const Real& x) {
    Real r(x.prec());
    mpfr_rint(r.raw(), x.raw(), MPFR_RNDD);
    return r;
}
inline Real ceil(const Real& x) {
    Real r(x.prec());
    mpfr_rint(r.raw(), x.raw(), MPFR_RNDU);
    return r;
}
inline Real trunc(const Real& x) {
    Real r(x.prec());
    mpfr_rint(r.raw(), x.raw(), MPFR_RNDZ);
    return r;
}

inline Real round_nearest(const Real& x) {
    Real r(x.prec());
    mpfr_rint(r.raw(), x.raw(), MPFR_RNDN);
    return r;
}

inline Real atan2(const Real& y, const Real& x) {
    Real r(y.prec() > x.prec() ? y.prec() : x.prec());
    mpfr_atan2(r.raw(), y.raw(), x.raw(), MPFR_RNDN);
    return r;
}

inline Real hypot(const Real& x, const Real& y) {
    Real r(y.prec() > x.prec() ? y.prec() : x.prec());
    mpfr_hypot(r.raw(), x.raw(), y.raw(), MPFR_RNDN);
    return r;
}

inline Real pow(const Real& b, const Real& e) {
    Real r(b.prec() > e.prec() ? b.prec() : e.prec());
    mpfr_pow(r.raw(), b.raw(), e.raw(), MPFR_RNDN);
    return r;
}

inline Real pow(const Real& b, long e) {
    Real r(b.prec());
    mpfr_pow_si(r.raw(), b.raw(), e, MPFR_RNDN);
    return r;
}

inline Real ldexp(const Real& x, long e) {
    Real r(x.prec());
    mpfr_mul_2si(r.raw(), x.raw(), e, MPFR_RNDN);
    return r;
}

inline Real fmod(const Real& x, const Real& y) {
    Real r(x.prec() > y.prec() ? x.prec() : y.prec());
    mpfr_fmod(r.raw(), x.raw(), y.raw(), MPFR_RNDN);
    return r;
}

inline const Real& min(const Real& a, const Real& b) { return b < a ? b : a; }
inline const Real& max(const Real& a, const Real& b) { return a < b ? b : a; }

/// Fused a*b+c at the precision of the result arguments.
inline Real fma(const Real& a, const Real& b, const Real& c) {
    prec_t p = a.prec();
    if (b.prec() > p) p = b.prec();
    if (c.prec() > p) p = c.prec();
    Real r(p);
    mpfr_fma(r.raw(), a.raw(), b.raw(), c.raw(), MPFR_RNDN);
    return r;
}

} // namespace pantolab

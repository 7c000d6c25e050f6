#pragma once

#include <gmp.h>

#include <string>
#include <utility>

#include "pantolab/real.hpp"

namespace pantolab {

/// Minimal exact rational, used by the Bernoulli table and by the
/// exact-arithmetic test modes (coefficient recurrences, polynomial-solution
/// detection).  Always stored in canonical form.
class Rational {
  public:
    Rational() { mpq_init(q_); }
    Rational(long num, long den = 1) {
        mpq_init(q_);
        if (den == 0) throw DomainError("rational with zero denominator");
        mpq_set_si(q_, num, 1);
        if (den != 1) {
            mpq_t d;
            mpq_init(d);
            mpq_set_si(d, den, 1);
            mpq_div(q_, q_, d);
            mpq_clear(d);
        }
        mpq_canonicalize(q_);
    }
    Rational(const Rational& o) {
        mpq_init(q_);
        mpq_set(q_, o.q_);
    }
    Rational(Rational&& o) noexcept {
        mpq_init(q_);
        mpq_swap(q_, o.q_);
    }
    Rational& operator=(const Rational& o) {
        if (this != &o) mpq_set(q_, o.q_);
        return *this;
    }
    Rational& operator=(Rational&& o) noexcept {
        mpq_swap(q_, o.q_);
        return *this;
    }
    ~Rational() { mpq_clear(q_); }

    mpq_ptr raw() { return q_; }
    mpq_srcptr raw() const { return q_; }

    bool is_zero() const { return mpq_sgn(q_) == 0; }
    int sign() const { return mpq_sgn(q_); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        Rational r;
        mpq_add(r.q_, a.q_, b.q_);
        return r;
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        Rational r;
        mpq_sub(r.q_, a.q_, b.q_);
        return r;
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        Rational r;
        mpq_mul(r.q_, a.q_, b.q_);
        return r;
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.is_zero()) throw DomainError("rational division by zero");
        Rational r;
        mpq_div(r.q_, a.q_, b.q_);
        return r;
    }
    friend Rational operator-(const Rational& a) {
        Rational r;
        mpq_neg(r.q_, a.q_);
        return r;
    }
    friend bool operator==(const Rational& a, const Rational& b) {
        return mpq_equal(a.q_, b.q_) != 0;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }

    Rational& operator+=(const Rational& b) {
        mpq_add(q_, q_, b.q_);
        return *this;
    }
    Rational& operator*=(const Rational& b) {
        mpq_mul(q_, q_, b.q_);
        return *this;
    }

    Real to_real(prec_t prec) const {
        Real r(prec);
        mpfr_set_q(r.raw(), q_, MPFR_RNDN);
        return r;
    }

    std::string str() const {
        char* s = mpq_get_str(nullptr, 10, q_);
        std::string out(s);
        std::free(s);
        return out;
    }

  private:
    mpq_t q_;
};

} // namespace pantolab

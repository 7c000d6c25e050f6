#include <catch2/catch_amalgamated.hpp>

#include <mpfr.h>

#include "pantolab/chebyshev.hpp"
#include "pantolab/complex.hpp"
#include "pantolab/gamma.hpp"
#include "pantolab/prec.hpp"
#include "pantolab/rational.hpp"
#include "pantolab/real.hpp"
#include "pantolab/roots.hpp"

#include "test_support.hpp"

using namespace pantolab;
using pltest::close_rel;
using pltest::rel_diff;
using pltest::Rng;

namespace {

Real mpfr_oracle_lngamma(const Real& x, prec_t p) {
    Real r(p);
    int sign;
    mpfr_lgamma(r.raw(), &sign, x.raw(), MPFR_RNDN);
    return r;
}

Real mpfr_oracle_digamma(const Real& x, prec_t p) {
    Real r(p);
    mpfr_digamma(r.raw(), x.raw(), MPFR_RNDN);
    return r;
}

} // namespace

TEST_CASE("PrecContext validation") {
    CHECK_NOTHROW(PrecContext(64, 1e-10));
    CHECK_THROWS_AS(PrecContext(32, 1e-10), InvalidInput);
    CHECK_THROWS_AS(PrecContext(256, -1.0), InvalidInput);
    CHECK_THROWS_AS(PrecContext(64, 1e-40), InvalidInput); // below 2^(1-64)
}

TEST_CASE("Real string round trip and exact integer arithmetic") {
    Real a = Real::parse("1.5", 128);
    CHECK(a == Real(1.5, 128));
    CHECK(Real::parse(a.str(), 128) == a);

    Real third = Real(1L, 256) / 3L;
    CHECK(Real::parse(third.str(), 256) == third);

    Real big(123456789L, 128);
    CHECK((big * 2L - big - big).is_zero());
    CHECK_THROWS_AS(Real::parse("1.5abc", 64), InvalidInput);

    CHECK(Real(0.0, 64).str() == "0");
    CHECK(Real(2.0, 64).exponent() == 2);
}

TEST_CASE("Real precision join") {
    Real lo(1.0, 64), hi(1.0, 256);
    CHECK((lo + hi).prec() == 256);
    CHECK((hi * lo).prec() == 256);
    CHECK(lo.with_prec(300).prec() == 300);
}

TEST_CASE("Real bits ladder: doubling precision changes results below 2^-(bits-8)") {
    for (long bits : {128L, 256L, 512L}) {
        Real x1 = exp(sqrt(Real(2L, bits)));
        Real x2 = exp(sqrt(Real(2L, 2 * bits)));
        CHECK(rel_diff(x1, x2) <= ldexp(Real(1L, 64), -(bits - 8)));

        Real y1 = atan2(Real(3L, bits), Real(-7L, bits)) * log(Real(10L, bits));
        Real y2 = atan2(Real(3L, 2 * bits), Real(-7L, 2 * bits)) * log(Real(10L, 2 * bits));
        CHECK(rel_diff(y1, y2) <= ldexp(Real(1L, 64), -(bits - 8)));
    }
}

TEST_CASE("Complex arithmetic basics") {
    prec_t p = 128;
    Complex a(1.0, 2.0, p), b(3.0, -1.0, p);
    Complex prod = a * b;
    CHECK(prod.re == Real(5.0, p));
    CHECK(prod.im == Real(5.0, p));

    Complex q = prod / b;
    CHECK(close_rel(q, a, 1e-35));

    CHECK(abs(Complex(3.0, 4.0, p)) == Real(5.0, p));
}

TEST_CASE("Complex log/exp principal branch") {
    prec_t p = 256;
    PrecContext ctx(256, 1e-40);
    (void)ctx;
    Complex z(0.7, 2.2, p);
    CHECK(close_rel(log(exp(z)), z, 1e-70));

    // negative real axis: limit from above, Arg = +pi
    Complex m1(-1.0, 0.0, p);
    Complex lm1 = log(m1);
    CHECK(lm1.re.is_zero());
    CHECK(close_rel(lm1.im, Real::pi(p), 1e-70));

    Complex s = sqrt(Complex(-4.0, 0.0, p));
    CHECK(close_rel(s.im, Real(2L, p), 1e-70));

    // integer power vs exp-log power
    Complex w(1.3, -0.4, p);
    CHECK(close_rel(pow(w, 7L), pow(w, Complex(7.0, 0.0, p)), 1e-70));
}

TEST_CASE("Bernoulli numbers are exact") {
    using detail::bernoulli_exact;
    CHECK(bernoulli_exact(2) == Rational(1, 6));
    CHECK(bernoulli_exact(4) == Rational(-1, 30));
    CHECK(bernoulli_exact(6) == Rational(1, 42));
    CHECK(bernoulli_exact(8) == Rational(-1, 30));
    CHECK(bernoulli_exact(10) == Rational(5, 66));
    CHECK(bernoulli_exact(12) == Rational(-691, 2730));
    CHECK(bernoulli_exact(3).is_zero());
    CHECK(bernoulli_exact(11).is_zero());
}

TEST_CASE("log_gamma against the MPFR oracle on the positive axis") {
    PrecContext ctx(256, 1e-60);
    for (double x : {0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 23.75, 101.5, 1000.25}) {
        Real xr(x, 320);
        Real mine = log_gamma(xr, ctx);
        Real oracle = mpfr_oracle_lngamma(xr, 320);
        INFO("x = " << x);
        CHECK(abs(mine - oracle) <= max(abs(oracle), Real(1L, 64)) * 1e-60);
    }
    // Gamma(1) = Gamma(2) = 1
    CHECK(abs(log_gamma(Real(1L, 256), ctx)) < 1e-70);
    CHECK(abs(log_gamma(Real(2L, 256), ctx)) < 1e-70);
}

TEST_CASE("digamma and trigamma oracles") {
    PrecContext ctx(256, 1e-60);
    for (double x : {0.5, 1.0, 2.5, 7.0, 55.25}) {
        Real xr(x, 320);
        CHECK(abs(digamma(xr, ctx) - mpfr_oracle_digamma(xr, 320)) <=
              max(abs(mpfr_oracle_digamma(xr, 320)), Real(1L, 64)) * 1e-60);
    }
    // psi(1) = -euler_gamma
    CHECK(close_rel(digamma(Real(1L, 256), ctx), -Real::euler_gamma(256), 1e-60));
    // psi'(1) = pi^2/6, psi'(1/2) = pi^2/2
    Real pi2 = Real::pi(320) * Real::pi(320);
    CHECK(close_rel(trigamma(Real(1L, 256), ctx), pi2 / 6L, 1e-60));
    CHECK(close_rel(trigamma(Real(0.5, 256), ctx), pi2 / 2L, 1e-60));
}

TEST_CASE("log_gamma duplication formula at real points") {
    PrecContext ctx(256, 1e-60);
    for (double x : {0.8, 3.7, 12.3}) {
        Real z(x, 320);
        Real lhs = log_gamma(z, ctx) + log_gamma(z + 0.5, ctx);
        Real rhs = (1L - z * 2L) * Real::ln2(320) + log(Real::pi(320)) / 2L +
                   log_gamma(z * 2L, ctx);
        CHECK(close_rel(lhs, rhs, 1e-58));
    }
}

TEST_CASE("gamma-family recurrences at random complex points") {
    PrecContext ctx(192, 1e-40);
    Rng rng(20260818u);
    int done = 0;
    while (done < 100) {
        double radius = 0.2 + 49.8 * rng.uniform();
        double theta = (rng.uniform() * 2.0 - 1.0) * (3.141592653589793 - 0.1);
        Complex z(radius * std::cos(theta), radius * std::sin(theta), 256);
        Complex zp1 = z + 1L;

        Complex dg = log_gamma(zp1, ctx) - log_gamma(z, ctx) - log(z);
        CHECK(abs(dg) <= max(abs(log_gamma(zp1, ctx)), Real(1L, 64)) * 1e-40);

        Complex dps = digamma(zp1, ctx) - digamma(z, ctx) - Real(1L, 256) / z;
        CHECK(abs(dps) <= max(abs(digamma(zp1, ctx)), Real(1L, 64)) * 1e-40);

        Complex iz = Real(1L, 256) / z;
        Complex dtr = trigamma(zp1, ctx) - trigamma(z, ctx) + iz * iz;
        CHECK(abs(dtr) <= max(abs(trigamma(zp1, ctx)), Real(1L, 64)) * 1e-40);
        ++done;
    }
}

TEST_CASE("log_gamma conjugate symmetry and poles") {
    PrecContext ctx(192, 1e-40);
    Complex z(2.3, 1.7, 256);
    Complex a = log_gamma(z, ctx);
    Complex b = log_gamma(conj(z), ctx);
    CHECK(close_rel(conj(b), a, 1e-40));

    CHECK_THROWS_AS(log_gamma(Complex(0.0, 0.0, 256), ctx), PoleError);
    CHECK_THROWS_AS(log_gamma(Complex(-3.0, 0.0, 256), ctx), PoleError);
    CHECK_THROWS_AS(digamma(Complex(-17.0, 0.0, 256), ctx), PoleError);
}

TEST_CASE("Chebyshev fit of exp reproduces values, derivative, antiderivative") {
    prec_t wp = 256;
    auto f = std::function<Real(const Real&)>([&](const Real& x) { return exp(x); });
    ChebInterpolant p = cheb_fit<Real>(f, Real(0L, wp), Real(1L, wp), 40, wp);

    CHECK(p.trailing_mag() < 1e-45);

    ChebInterpolant dp = p.derivative();
    ChebInterpolant ip = p.antiderivative();
    for (int i = 0; i <= 10; ++i) {
        Real x(i / 10.0, wp);
        CHECK(close_rel(p.eval(x), exp(x), 1e-40));
        CHECK(close_rel(dp.eval(x), exp(x), 1e-38));
        CHECK(abs(ip.eval(x) - (exp(x) - 1L)) < 1e-40);
    }
}

TEST_CASE("Chebyshev root candidates locate sin(3x) zeros") {
    prec_t wp = 256;
    PrecContext ctx(256, 1e-50);
    auto f = std::function<Real(const Real&)>([&](const Real& x) { return sin(x * 3L); });
    ChebInterpolant p = cheb_fit<Real>(f, Real(0.1, wp), Real(10L, wp), 80, wp);
    std::vector<double> cand = cheb_root_candidates(p);

    // true zeros k*pi/3 in (0.1, 10): k = 1..9
    REQUIRE(cand.size() == 9);
    Real pi = Real::pi(wp);
    for (size_t k = 0; k < cand.size(); ++k) {
        Real truth = pi * double(k + 1) / 3.0;
        CHECK(std::abs(cand[k] - truth.to_double()) < 1e-6);
    }

    // polish one root at full precision through the actual function
    auto df = std::function<Real(const Real&)>([&](const Real& x) { return cos(x * 3L) * 3L; });
    RootResult r = refine_root(f, df, Real(2.0, wp), Real(2.2, wp), ctx);
    CHECK(close_rel(r.root, pi * 2L / 3L, 1e-49));
    CHECK(r.enclosure <= abs(r.root) * 1e-49);
    CHECK(r.newton_steps > 0);
}

TEST_CASE("refine_root contracts and validates") {
    PrecContext ctx(256, 1e-30);
    auto f = std::function<Real(const Real&)>(
        [](const Real& x) { return x * x - 2L; });
    auto df = std::function<Real(const Real&)>([](const Real& x) { return x * 2L; });
    RootResult r = refine_root(f, df, Real(1L, 256), Real(2L, 256), ctx);
    CHECK(close_rel(r.root, sqrt(Real(2L, 288)), 1e-30));
    CHECK(abs(f(r.root)) < 1e-28);

    CHECK_THROWS_AS(refine_root(f, df, Real(2L, 256), Real(3L, 256), ctx), DomainError);
    CHECK_THROWS_AS(refine_root(f, df, Real(2L, 256), Real(1L, 256), ctx), InvalidInput);
}

TEST_CASE("Rational exact arithmetic") {
    Rational a(1, 3), b(1, 6);
    CHECK(a + b == Rational(1, 2));
    CHECK(a * b == Rational(1, 18));
    CHECK((a - a).is_zero());
    CHECK_THROWS_AS(Rational(1, 0), DomainError);
    CHECK(Rational(2, 4) == Rational(1, 2));
    CHECK(close_rel(Rational(1, 3).to_real(128), Real(1L, 128) / 3L, 1e-37));
}

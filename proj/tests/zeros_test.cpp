#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "pantolab/rational.hpp"
#include "pantolab/zeros.hpp"
#include "test_support.hpp"

using namespace pantolab;
using pltest::close_rel;
using pltest::rel_diff;

namespace {

PantographParams pparams(double lam, double a, double b, prec_t p = 256) {
    return PantographParams(Real(lam, p), Complex(a, 0.0, p), Complex(b, 0.0, p));
}

/// Zeros of the lambda = 1/2, a = -1 analytic solution through n = 20.
const std::vector<ZeroRecord>& half_zeros21() {
    static const std::vector<ZeroRecord> zs = [] {
        PrecContext ctx(512, 1e-30);
        return enumerate_zeros(pparams(0.5, -1.0, 0.0, 512), Real(0L, 512), Real(3.0e7, 512),
                               64, ctx);
    }();
    return zs;
}

std::vector<ZeroRecord> synth(const std::vector<Real>& xs, prec_t p = 320) {
    std::vector<ZeroRecord> zs;
    for (size_t i = 0; i < xs.size(); ++i)
        zs.push_back({long(i), xs[i].with_prec(p), Real(0L, p), ZeroSource::series});
    return zs;
}

/// First zero of the deformed exponential by brute force: a 10^5-point sign
/// scan over [1.2, 1.8] at 512 bits followed by plain bisection.
Real t0_oracle() {
    PrecContext ctx(512, 1e-30);
    Real lam(0.5, 512);
    auto g = [&](const Real& x) { return deformed_exp_eval(x, lam, ctx).value.re; };
    const long n_pts = 100000;
    Real lo(1.2, 512), hi(1.8, 512);
    Real step = (hi - lo) / n_pts;
    Real bl(0L, 512), bh(0L, 512);
    int brackets = 0;
    int s_prev = g(lo).sign();
    Real x = lo;
    for (long i = 1; i <= n_pts; ++i) {
        Real xn = lo + step * i;
        int s = g(xn).sign();
        if (s_prev * s < 0) {
            ++brackets;
            bl = x;
            bh = xn;
        }
        x = std::move(xn);
        s_prev = s;
    }
    REQUIRE(brackets == 1);
    int s_lo = g(bl).sign();
    for (int i = 0; i < 170; ++i) {
        Real mid = (bl + bh) / 2L;
        if (g(mid).sign() == s_lo)
            bl = std::move(mid);
        else
            bh = std::move(mid);
    }
    return (bl + bh) / 2L;
}

} // namespace

TEST_CASE("series enumeration locates the first zero against a dense-scan oracle") {
    Real t0 = t0_oracle();
    CHECK(t0 > 1.4);
    CHECK(t0 < 1.5);

    PrecContext ctx(512, 1e-30);
    std::vector<ZeroRecord> zs =
        enumerate_zeros(pparams(0.5, -1.0, 0.0, 512), Real(0L, 512), Real(2L, 512), 8, ctx);
    REQUIRE(zs.size() == 1);
    CHECK(zs[0].n == 0);
    CHECK(zs[0].source == ZeroSource::series);
    CHECK(close_rel(zs[0].x, t0, 1e-28));
    CHECK(zs[0].enclosure <= zs[0].x * 2e-30);
}

TEST_CASE("series enumeration is stable under scan density, windows, and caps") {
    PrecContext ctx(512, 1e-30);
    PantographParams p = pparams(0.5, -1.0, 0.0, 512);
    Real top(32768.0, 512);

    std::vector<ZeroRecord> z32 = enumerate_zeros(p, Real(0L, 512), top, 100, ctx);
    std::vector<ZeroRecord> z64 = enumerate_zeros(p, Real(0L, 512), top, 100, ctx, 64);
    REQUIRE(z32.size() == z64.size());
    CHECK(z32.size() == 12);
    for (size_t i = 0; i < z32.size(); ++i) {
        CHECK(z32[i].n == long(i));
        CHECK(close_rel(z32[i].x, z64[i].x, 1e-28));
        CHECK(z32[i].enclosure <= z32[i].x * 2e-30);
        if (i > 0) CHECK(z32[i].x > z32[i - 1].x);
    }

    std::vector<ZeroRecord> capped = enumerate_zeros(p, Real(0L, 512), top, 3, ctx);
    REQUIRE(capped.size() == 3);
    for (size_t i = 0; i < 3; ++i) CHECK(close_rel(capped[i].x, z32[i].x, 1e-28));

    // a window past t_0 skips it and renumbers from the window start
    std::vector<ZeroRecord> tail = enumerate_zeros(p, Real(2L, 512), top, 100, ctx);
    REQUIRE(tail.size() == 11);
    CHECK(tail[0].n == 0);
    CHECK(close_rel(tail[0].x, z32[1].x, 1e-28));

    // [0, 0.6] sits inside the zero-free radius log 2
    CHECK(enumerate_zeros(p, Real(0L, 512), Real(0.6, 512), 10, ctx).empty());
}

TEST_CASE("series enumeration rejects bad input and sees no phantom zeros") {
    PrecContext ctx(256, 1e-30);
    PantographParams cplx(Real(0.5, 256), Complex(0.0, 1.0, 256), Complex(0.0, 0.0, 256));
    CHECK_THROWS_AS(enumerate_zeros(cplx, Real(0L, 256), Real(9L, 256), 4, ctx), InvalidInput);

    PantographParams p = pparams(0.5, -1.0, 0.0);
    CHECK_THROWS_AS(enumerate_zeros(p, Real(-1L, 256), Real(2L, 256), 4, ctx), InvalidInput);
    CHECK_THROWS_AS(enumerate_zeros(p, Real(2L, 256), Real(2L, 256), 4, ctx), InvalidInput);
    CHECK_THROWS_AS(enumerate_zeros(p, Real(0L, 256), Real(2L, 256), 4, ctx, 2), InvalidInput);

    CHECK(enumerate_zeros(p, Real(0L, 256), Real(2L, 256), 0, ctx).empty());

    // all-positive series: y' = y(x/2) grows monotonically
    CHECK(enumerate_zeros(pparams(0.5, 1.0, 0.0), Real(0L, 256), Real(50L, 256), 10, ctx)
              .empty());
    // plain decaying exponential has no zeros either
    CHECK(enumerate_zeros(pparams(0.5, 0.0, -1.0), Real(0L, 256), Real(20L, 256), 10, ctx)
              .empty());
    // degenerate y' = 0 keeps y = 1
    CHECK(enumerate_zeros(pparams(0.5, 0.0, 0.0), Real(0L, 256), Real(20L, 256), 10, ctx)
              .empty());
}

TEST_CASE("the solution keeps a constant certified sign between consecutive zeros") {
    const std::vector<ZeroRecord>& zs = half_zeros21();
    REQUIRE(zs.size() == 21);
    PrecContext ctx(512, 1e-30);
    PantographParams p = pparams(0.5, -1.0, 0.0, 512);

    int prev_sign = 0;
    for (size_t i = 0; i + 1 < zs.size(); ++i) {
        Real lo = zs[i].x + zs[i].enclosure * 2L;
        Real hi = zs[i + 1].x - zs[i + 1].enclosure * 2L;
        Real step = (hi - lo) / 65L;
        int gap_sign = 0;
        for (int j = 1; j <= 64; ++j) {
            SeriesResult r = pantograph_eval_direct(Complex(lo + step * j), p, ctx);
            if (!(abs(r.value.re) > r.noise_bound * 8L)) continue;
            int s = r.value.re.sign();
            if (gap_sign == 0) gap_sign = s;
            CHECK(s == gap_sign);
        }
        REQUIRE(gap_sign != 0);
        if (prev_sign != 0) CHECK(gap_sign == -prev_sign);
        prev_sign = gap_sign;
    }
}

TEST_CASE("piecewise enumeration agrees with the series path and respects windows") {
    PrecContext ctx(512, 1e-30);
    PantographParams p = pparams(0.5, -1.0, 0.0, 512);
    InitialFunction phi = InitialFunction::from_series(p, Real(1L, 512), ctx);
    PiecewiseSolution sol = continue_solution(p, phi, Real(32768.0, 512), ctx);

    std::vector<ZeroRecord> zp =
        enumerate_zeros(sol, Real(0L, 512), Real(32768.0, 512), 100, ctx);
    const std::vector<ZeroRecord>& zs = half_zeros21();
    REQUIRE(zp.size() == 12);
    for (size_t i = 0; i < zp.size(); ++i) {
        CHECK(zp[i].n == long(i));
        CHECK(zp[i].source == ZeroSource::piecewise_solution);
        CHECK(close_rel(zp[i].x, zs[i].x, 1e-20));
        CHECK(zp[i].enclosure <= zp[i].x * 2e-30);
    }

    std::vector<ZeroRecord> window =
        enumerate_zeros(sol, Real(5L, 512), Real(100L, 512), 100, ctx);
    std::vector<Real> expect;
    for (const auto& z : zp)
        if (z.x >= 5L && z.x <= 100L) expect.push_back(z.x);
    REQUIRE(window.size() == expect.size());
    REQUIRE(window.size() >= 3);
    for (size_t i = 0; i < window.size(); ++i) {
        CHECK(window[i].n == long(i));
        CHECK(close_rel(window[i].x, expect[i], 1e-25));
    }

    PantographParams cplx(Real(0.5, 256), Complex(0.0, 1.0, 256), Complex(0.0, 0.0, 256));
    InitialFunction cphi = InitialFunction::constant(Real(0.5, 256), Real(1L, 256),
                                                     Complex(1.0, 0.0, 256));
    PiecewiseSolution csol = continue_solution(cplx, cphi, Real(4L, 256), PrecContext());
    CHECK_THROWS_AS(enumerate_zeros(csol, Real(1L, 256), Real(4L, 256), 10, PrecContext()),
                    InvalidInput);
}

TEST_CASE("zeros and fitted constants are invariant under solution scaling") {
    PrecContext ctx(448, 1e-30);
    PantographParams p = pparams(0.5, -1.0, 0.0, 448);
    Real top(8192.0, 448);
    InitialFunction phi_a =
        InitialFunction::constant(Real(0.5, 448), Real(1L, 448), Complex(2.5, 0.0, 448));
    InitialFunction phi_b =
        InitialFunction::constant(Real(0.5, 448), Real(1L, 448), Complex(7.5, 0.0, 448));
    PiecewiseSolution sa = continue_solution(p, phi_a, top, ctx);
    PiecewiseSolution sb = continue_solution(p, phi_b, top, ctx);

    std::vector<ZeroRecord> za = enumerate_zeros(sa, Real(0L, 448), top, 50, ctx);
    std::vector<ZeroRecord> zb = enumerate_zeros(sb, Real(0L, 448), top, 50, ctx);
    REQUIRE(za.size() == zb.size());
    REQUIRE(za.size() >= 8);
    for (size_t i = 0; i < za.size(); ++i) CHECK(close_rel(za[i].x, zb[i].x, 1e-24));

    Real q(2L, 448);
    GammaFit ga = gamma_fit(za, q, ctx);
    GammaFit gb = gamma_fit(zb, q, ctx);
    CHECK(ga.offset == gb.offset);
    CHECK(close_rel(ga.gamma, gb.gamma, 1e-20));

    RatioReport ra = ratio_check(za, q);
    RatioReport rb = ratio_check(zb, q);
    REQUIRE(ra.deviations.size() == rb.deviations.size());
    for (size_t i = 0; i < ra.deviations.size(); ++i)
        CHECK(abs(ra.deviations[i] - rb.deviations[i]) <= Real(1e-20, 448));
}

TEST_CASE("ratio check flags geometric spacing and rejects degenerate input") {
    std::vector<Real> geo;
    for (long n = 0; n < 10; ++n) geo.push_back(Real(1L << n, 320));
    RatioReport exact = ratio_check(synth(geo), Real(2L, 320));
    CHECK(exact.pass);
    for (const auto& d : exact.deviations) CHECK(d <= Real(1e-70, 320));

    std::vector<Real> flat(5, Real(1L, 320));
    CHECK_THROWS_AS(ratio_check(synth(flat), Real(2L, 320)), InvalidInput);
    CHECK_THROWS_AS(ratio_check(synth({geo[0], geo[1]}), Real(2L, 320)), InsufficientData);

    const std::vector<ZeroRecord>& zs = half_zeros21();
    RatioReport rep = ratio_check(zs, Real(2L, 512));
    CHECK(rep.pass);
    CHECK(rep.final_dev < rep.first_dev);
    CHECK(rep.final_dev.to_double() < 0.06);
    CHECK(rep.final_dev < rep.deviations[2]);
    CHECK(rep.deviations[2] < rep.deviations[0]);
}

TEST_CASE("gamma fit recovers synthetic laws") {
    prec_t p = 512;
    PrecContext ctx(p, 1e-30);
    Real q(2L, p);

    std::vector<Real> xs{Real(1L, p)};
    for (long n = 1; n < 20; ++n) xs.push_back(Real(3 * n, p) * pow(q, n - 1));
    GammaFit plain = gamma_fit(synth(xs, p), q, ctx);
    CHECK(plain.offset == 0);
    CHECK(close_rel(plain.gamma, Real(3L, p), 1e-40));
    CHECK(abs(plain.c) <= Real(1e-60, p));
    CHECK(plain.rms <= Real(1e-60, p));

    std::vector<Real> xc{Real(1L, p)};
    for (long n = 1; n < 30; ++n) {
        Real nn(n, p);
        xc.push_back(nn * pow(q, n - 1) * (Real(3L, p) + log(nn) / nn));
    }
    GammaFit corrected = gamma_fit(synth(xc, p), q, ctx);
    CHECK(corrected.offset == 0);
    CHECK(close_rel(corrected.gamma, Real(3L, p), 1e-6));
    CHECK(close_rel(corrected.c, Real(1L, p), 1e-6));
    CHECK(corrected.rms < corrected.uncorrected_rms);
    CHECK(corrected.residuals.size() >= 6);

    std::vector<Real> five;
    for (long n = 0; n < 5; ++n) five.push_back(Real(n + 1, p));
    CHECK_THROWS_AS(gamma_fit(synth(five, p), q, ctx), InsufficientData);

    // linear growth cannot follow the law: the fitted constant collapses
    std::vector<Real> lin;
    for (long n = 0; n < 12; ++n) lin.push_back(Real(n + 1, p));
    CHECK_THROWS_AS(gamma_fit(synth(lin, p), q, ctx), ConvergenceError);
}

TEST_CASE("gamma fit on analytic zeros matches the known growth constant") {
    PrecContext ctx(1152, 1e-30);
    PantographParams p = pparams(0.5, -1.0, 0.0, 1152);
    std::vector<ZeroRecord> zs =
        enumerate_zeros(p, Real(0L, 1152), Real(7.0e11, 1152), 64, ctx);
    REQUIRE(zs.size() >= 34);

    Real q(2L, 1152);
    GammaFit fit = gamma_fit(zs, q, ctx);
    CHECK(fit.offset == 0);
    Real normalized = fit.gamma / pow(q, fit.offset + 1);
    CHECK(abs(normalized - 1L).to_double() <= 0.05);
    CHECK(fit.rms < fit.uncorrected_rms);

    RobinsonReport rob = robinson_check(zs, q);
    CHECK(rob.offset == fit.offset);
}

TEST_CASE("robinson deviations vanish on the exact law and detect index shifts") {
    prec_t p = 320;
    Real q(2L, p);

    std::vector<Real> exact;
    for (long n = 0; n < 15; ++n) exact.push_back(Real(n + 1, p) * pow(q, n));
    RobinsonReport clean = robinson_check(synth(exact, p), q);
    CHECK(clean.pass);
    CHECK(clean.offset == 0);
    CHECK(clean.last5_max <= Real(1e-50, p));

    std::vector<Real> shifted;
    for (long n = 0; n < 3; ++n) shifted.push_back(Real(n + 1, p) * 0.001);
    for (long n = 3; n < 15; ++n) shifted.push_back(Real(n - 2, p) * pow(q, n - 3));
    RobinsonReport found = robinson_check(synth(shifted, p), q);
    CHECK(found.pass);
    CHECK(found.offset == 3);
    CHECK(found.last5_max <= Real(1e-50, p));

    std::vector<Real> five;
    for (long n = 0; n < 5; ++n) five.push_back(Real(n + 1, p) * pow(q, n));
    CHECK_THROWS_AS(robinson_check(synth(five, p), q), InsufficientData);

    const std::vector<ZeroRecord>& zs = half_zeros21();
    RobinsonReport real_zeros = robinson_check(zs, Real(2L, 512));
    CHECK(real_zeros.pass);
    CHECK(real_zeros.offset == 0);
    CHECK(real_zeros.last5_max.to_double() <= 0.05);
    CHECK(real_zeros.final_dev <= real_zeros.first_dev);
}

TEST_CASE("divisor generating function sums with a certified tail") {
    CHECK(detail::sigma_divisors(1) == 1);
    CHECK(detail::sigma_divisors(2) == 3);
    CHECK(detail::sigma_divisors(3) == 4);
    CHECK(detail::sigma_divisors(4) == 7);
    CHECK(detail::sigma_divisors(5) == 6);
    CHECK(detail::sigma_divisors(6) == 12);
    CHECK(detail::sigma_divisors(28) == 56);

    PrecContext ctx(256, 1e-30);
    DivisorGF gf = divisor_gf(Real(2L, 256), ctx);
    Rational sum(0);
    Rational rk(1);
    const Rational half(1, 2);
    for (long k = 1; k <= 128; ++k) {
        rk = rk * half;
        sum += rk * Rational(detail::sigma_divisors(k));
    }
    Real oracle = sum.to_real(512);
    CHECK(close_rel(gf.value, oracle, 1e-28));
    CHECK(gf.value > 2.74);
    CHECK(gf.value < 2.75);
    CHECK(gf.terms >= 64);

    DivisorGF far = divisor_gf(Real(1.0e9, 256), ctx);
    CHECK(close_rel(far.value * Real(1.0e9, 256), Real(1L, 256), 1e-8));

    DivisorGF near = divisor_gf(Real(1.001, 256), ctx);
    CHECK(near.value > 1e6);

    CHECK_THROWS_AS(divisor_gf(Real(1L, 256), ctx), DomainError);
    CHECK_THROWS_AS(divisor_gf(Real(0.5, 256), ctx), DomainError);
}

TEST_CASE("zhang tail statistic matches a law-built synthetic and reports real zeros") {
    prec_t p = 288;
    PrecContext ctx(256, 1e-30);
    Real q(2L, p);
    Real psi = divisor_gf(q, ctx).value;

    std::vector<Real> xs;
    for (long n = 0; n < 15; ++n) {
        Real m(n + 1, p);
        xs.push_back(m * pow(q, n) * (Real(1L, p) + psi / (m * m)));
    }
    ZhangReport law = zhang_check(synth(xs, p), q, ctx);
    CHECK(law.pass);
    CHECK(law.offset == 0);
    CHECK(close_rel(law.agreement, Real(1L, p), 1e-40));

    const std::vector<ZeroRecord>& zs = half_zeros21();
    PrecContext ctx512(512, 1e-30);
    ZhangReport rep = zhang_check(zs, Real(2L, 512), ctx512);
    CHECK(rep.offset == 0);
    CHECK(rep.psi > 2.74);
    CHECK(rep.psi < 2.75);
    CHECK(rep.tail_mean.is_finite());
    CHECK(rep.agreement.is_finite());
    INFO("agreement ratio " << rep.agreement.str(8));

    std::vector<ZeroRecord> few(zs.begin(), zs.begin() + 9);
    CHECK_THROWS_AS(zhang_check(few, Real(2L, 512), ctx512), InsufficientData);
    CHECK_THROWS_AS(zhang_check(zs, Real(1L, 512), ctx512), DomainError);
}

TEST_CASE("zero map solves the transcendental law and converges to its constant") {
    PrecContext ctx(256, 1e-30);
    Real half(0.5, 256);

    LemmaZeroMap base = lemma_zero_map(Real(0L, 256), half, 100, ctx);
    CHECK(base.k_min == 2);
    REQUIRE(base.entries.size() == 99);
    CHECK(base.entries.front().k == 2);
    CHECK(close_rel(base.limit, log(Real(2L, 288)), 1e-60));

    Real L = log(Real(2L, 288));
    for (const auto& e : base.entries) {
        Real lhs = log(e.x) - log(log(e.x));
        CHECK(close_rel(lhs, L * e.k, 1e-50));
    }
    for (size_t i = 1; i < base.entries.size(); ++i)
        CHECK(base.entries[i].x > base.entries[i - 1].x);

    auto dev = [&](const LemmaZero& e) { return abs(e.C / base.limit - 1L); };
    CHECK(dev(base.entries[98]) < dev(base.entries[18]));
    CHECK(dev(base.entries[18]) < dev(base.entries[3]));

    LemmaZeroMap quarter = lemma_zero_map(Real(0.25, 256), half, 100, ctx);
    Real limit = pow(Real(2L, 288), Real(0.25, 288)) * log(Real(2L, 288));
    CHECK(close_rel(quarter.limit, limit, 1e-60));
    for (const auto& e : quarter.entries) {
        if (e.k < 5) continue;
        Real bound = Real(3L, 288) * log(Real(e.k, 288)) / e.k;
        CHECK(abs(e.C / limit - 1L) <= bound);
    }

    CHECK(lemma_zero_map(Real(0L, 256), Real(0.9, 256), 20, ctx).k_min == 11);

    CHECK_THROWS_AS(lemma_zero_map(Real(1L, 256), half, 10, ctx), InvalidInput);
    CHECK_THROWS_AS(lemma_zero_map(Real(-0.1, 256), half, 10, ctx), InvalidInput);
    CHECK_THROWS_AS(lemma_zero_map(Real(0L, 256), Real(1.5, 256), 10, ctx), InvalidInput);
    CHECK_THROWS_AS(lemma_zero_map(Real(0L, 256), half, 1, ctx), InvalidInput);
}

TEST_CASE("randomized seeds keep the spacing law with solution-specific constants") {
    PrecContext ctx(512, 1e-30);
    PantographParams p = pparams(0.5, -1.0, 0.0, 512);
    Real q(2L, 512);
    Real top(16384.0, 512);

    std::vector<Real> gammas;
    for (uint64_t seed : {11ULL, 23ULL}) {
        pltest::Rng rng(seed);
        std::vector<Real> xs;
        std::vector<Complex> ys;
        for (int i = 0; i <= 4; ++i) {
            xs.push_back(Real(0.5 + i * 0.125, 512));
            ys.push_back(Complex(rng.uniform(0.25, 2.0), 0.0, 512));
        }
        InitialFunction phi = InitialFunction::from_table(xs, ys, TableRule::linear);
        PiecewiseSolution sol = continue_solution(p, phi, top, ctx);
        std::vector<ZeroRecord> zs = enumerate_zeros(sol, Real(0L, 512), top, 64, ctx);
        REQUIRE(zs.size() >= 10);

        RatioReport ratio = ratio_check(zs, q, 0.3);
        CHECK(ratio.pass);
        GammaFit fit = gamma_fit(zs, q, ctx);
        CHECK(fit.gamma > 0L);
        gammas.push_back(fit.gamma);
    }
    CHECK(rel_diff(gammas[0], gammas[1]) > 1e-3);
}

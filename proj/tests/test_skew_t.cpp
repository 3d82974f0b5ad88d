#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bubblecast/quadrature.hpp"
#include "bubblecast/rng.hpp"
#include "bubblecast/skew_t.hpp"
#include "bubblecast/special_functions.hpp"
#include "support/test_helpers.hpp"

using namespace bubblecast;
using skewt::MixtureParams;
using skewt::SkewedTParams;

namespace {

constexpr double PI = 3.141592653589793238462643383279502884;

// test-side oracle: Student-t tail mass beyond z from the power law
double t_tail_oracle(double z, double nu) {
    const double log_c = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                         0.5 * std::log(nu * PI);
    return std::exp(log_c + 0.5 * (nu + 1.0) * std::log(nu) -
                    nu * std::log(z)) /
           nu;
}

// test-side oracle: integral of a pdf over [-Z, Z] with graded panels
template <typename F>
double integrate_sym(F pdf, double z_max, double first = 0.01) {
    const auto panels = quad::graded_panels(-z_max, z_max, 0.0, first, 1.5);
    return quad::over_panels(pdf, panels);
}

MixtureParams random_mixture(rng::Xoshiro256pp& gen) {
    const std::size_t k = 1 + gen.below(4);
    MixtureParams m;
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        const double w = gen.uniform(0.1, 1.0);
        m.weights.push_back(w);
        total += w;
        m.components.emplace_back(gen.uniform(-5.0, 5.0), gen.uniform(0.05, 3.0),
                                  gen.uniform(-4.0, 4.0), gen.uniform(0.3, 20.0));
    }
    for (auto& w : m.weights) w /= total;
    // compensate rounding so the simplex invariant holds exactly enough
    double s = 0.0;
    for (double w : m.weights) s += w;
    m.weights.back() += 1.0 - s;
    return m;
}

}  // namespace

TEST_CASE("student t pdf closed forms") {
    CHECK(skewt::student_t_pdf(0.0, 1.0) == doctest::Approx(1.0 / PI).epsilon(1e-14));
    const double expect5 = std::exp(std::lgamma(3.0) - std::lgamma(2.5)) /
                           std::sqrt(5.0 * PI);
    CHECK(skewt::student_t_pdf(0.0, 5.0) == doctest::Approx(expect5).epsilon(1e-13));
    CHECK(expect5 == doctest::Approx(0.3796066898224944).epsilon(1e-12));
    CHECK_THROWS_AS(skewt::student_t_pdf(0.0, 0.0), std::invalid_argument);
}

TEST_CASE("student t pdf integrates to one for light and heavy tails") {
    for (double nu : {0.5, 2.0, 30.0}) {
        const double z_max = 1e7;
        const double body = integrate_sym(
            [&](double z) { return skewt::student_t_pdf(z, nu); }, z_max);
        const double total = body + 2.0 * t_tail_oracle(z_max, nu);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("student t cdf: symmetry, Cauchy case, quadrature inversion") {
    for (double nu : {0.4, 1.0, 7.3, 40.0})
        CHECK(skewt::student_t_cdf(0.0, nu) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(skewt::student_t_cdf(1.0, 1.0) == doctest::Approx(0.75).epsilon(1e-12));

    // invert the quadrature CDF at 0.95 by bisection and compare
    const double nu = 5.0;
    auto cdf_quad = [&](double z) {
        return 0.5 + quad::composite(
                         [&](double s) { return skewt::student_t_pdf(s, nu); },
                         0.0, z, 64);
    };
    double lo = 0.0, hi = 10.0;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (cdf_quad(mid) < 0.95 ? lo : hi) = mid;
    }
    const double z95 = 0.5 * (lo + hi);
    CHECK(z95 == doctest::Approx(2.015).epsilon(5e-4));
    CHECK(skewt::student_t_cdf(z95, nu) == doctest::Approx(0.95).epsilon(1e-9));

    // absolute error against quadrature on a grid
    for (double z : {-6.0, -2.0, -0.5, 0.3, 1.7, 4.0})
        CHECK(std::fabs(skewt::student_t_cdf(z, nu) - cdf_quad(z)) < 1e-10);
}

TEST_CASE("log student t cdf stays finite deep in the left tail") {
    const double lt = skewt::log_student_t_cdf(-1e8, 3.0);
    CHECK(std::isfinite(lt));
    CHECK(lt < -50.0);
    CHECK(std::exp(skewt::log_student_t_cdf(-3.0, 3.0)) ==
          doctest::Approx(skewt::student_t_cdf(-3.0, 3.0)).epsilon(1e-12));
}

TEST_CASE("skew-t reduces exactly to student t at xi = 0") {
    const SkewedTParams p(0.7, 1.3, 0.0, 4.2);
    for (double y : {-8.0, -1.0, 0.7, 2.0, 11.0}) {
        const double z = (y - p.mu) / p.sigma;
        const double expect = skewt::student_t_pdf(z, p.nu) / p.sigma;
        CHECK(std::fabs(skewt::skewt_pdf(y, p) - expect) < 1e-12);
    }
    const SkewedTParams std_cauchy(0.0, 1.0, 0.0, 1.0);
    CHECK(skewt::skewt_pdf(0.0, std_cauchy) == doctest::Approx(1.0 / PI).epsilon(1e-13));
}

TEST_CASE("skew-t density integrates to one over the (xi, nu) grid") {
    for (double xi : {-3.0, 0.0, 3.0}) {
        for (double nu : {0.5, 2.0, 30.0}) {
            const SkewedTParams p(0.0, 1.0, xi, nu);
            const double z_max = 1e7;
            const double body = integrate_sym(
                [&](double y) { return skewt::skewt_pdf(y, p); }, z_max);
            const double c_hi = skewt::student_t_cdf(xi * std::sqrt(nu + 1.0), nu + 1.0);
            const double c_lo = skewt::student_t_cdf(-xi * std::sqrt(nu + 1.0), nu + 1.0);
            const double tails = 2.0 * (c_hi + c_lo) * t_tail_oracle(z_max, nu);
            CHECK(body + tails == doctest::Approx(1.0).epsilon(1e-3));
        }
    }
}

TEST_CASE("skew-t cdf against direct quadrature") {
    const SkewedTParams p(0.5, 2.0, 1.5, 3.0);
    auto cdf_quad = [&](double y) {
        // anchored at the median of the symmetric-free integral: integrate
        // from far left with the analytic left-tail mass
        const double z_lo = -2e6;
        const double y_lo = p.mu + p.sigma * z_lo;
        const double c_lo =
            skewt::student_t_cdf(-p.xi * std::sqrt(p.nu + 1.0), p.nu + 1.0);
        const double tail = 2.0 * c_lo * t_tail_oracle(-z_lo, p.nu);
        const auto panels = quad::graded_panels(y_lo, y, p.mu, 1e-3, 1.5);
        return tail + quad::over_panels(
                          [&](double s) { return skewt::skewt_pdf(s, p); },
                          panels);
    };
    for (double y : {-15.0, -3.0, 0.5, 2.5, 9.0, 40.0}) {
        CHECK(std::fabs(skewt::skewt_cdf(y, p) - cdf_quad(y)) < 1e-6);
    }
    SUBCASE("limits and symmetry") {
        const SkewedTParams sym(1.0, 0.5, 0.0, 2.0);
        CHECK(skewt::skewt_cdf(1.0, sym) == doctest::Approx(0.5).epsilon(1e-10));
        CHECK(skewt::skewt_cdf(1e12, sym) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(skewt::skewt_cdf(-1e12, sym) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    }
    SUBCASE("median round trip") {
        const double med = skewt::skewt_quantile(0.5, p);
        CHECK(std::fabs(skewt::skewt_cdf(med, p) - 0.5) < 1e-5);
    }
}

TEST_CASE("skew-t log-pdf gradient matches central finite differences") {
    const SkewedTParams base(0.3, 1.7, -1.2, 3.5);
    for (double y : {-4.0, 0.0, 0.31, 2.0, 15.0}) {
        const auto g = skewt::skewt_log_pdf_grad(y, base);
        CHECK(g.log_pdf == doctest::Approx(skewt::skewt_log_pdf(y, base)).epsilon(1e-12));
        const double h = 1e-6;
        const auto fd = [&](auto mutate) {
            SkewedTParams up = base, dn = base;
            mutate(up, h);
            mutate(dn, -h);
            return (skewt::skewt_log_pdf(y, up) - skewt::skewt_log_pdf(y, dn)) /
                   (2.0 * h);
        };
        const double d_mu = fd([](SkewedTParams& p, double e) { p.mu += e; });
        const double d_sigma = fd([](SkewedTParams& p, double e) { p.sigma += e; });
        const double d_xi = fd([](SkewedTParams& p, double e) { p.xi += e; });
        const double d_nu = fd([](SkewedTParams& p, double e) { p.nu += e; });
        CHECK(g.d_mu == doctest::Approx(d_mu).epsilon(1e-5));
        CHECK(g.d_sigma == doctest::Approx(d_sigma).epsilon(1e-5));
        CHECK(g.d_xi == doctest::Approx(d_xi).epsilon(1e-5));
        CHECK(g.d_nu == doctest::Approx(d_nu).epsilon(1e-4));
    }
}

TEST_CASE("mixture with one component reduces to that component") {
    MixtureParams m;
    m.weights = {1.0};
    m.components.emplace_back(1.0, 0.8, 2.0, 6.0);
    const skewt::MixtureDensity d(m);
    const SkewedTParams& c = m.components[0];
    for (double y : {-2.0, 0.5, 1.0, 3.0}) {
        CHECK(d.pdf(y) == doctest::Approx(skewt::skewt_pdf(y, c)).epsilon(1e-14));
        CHECK(d.cdf(y) == doctest::Approx(skewt::skewt_cdf(y, c)).epsilon(1e-10));
    }
    CHECK(d.quantile(0.3) ==
          doctest::Approx(skewt::skewt_quantile(0.3, c)).epsilon(1e-8));
}

TEST_CASE("equal-weight symmetric pair has cdf one half at the center") {
    MixtureParams m;
    m.weights = {0.5, 0.5};
    m.components.emplace_back(-2.0, 1.0, 0.0, 4.0);
    m.components.emplace_back(2.0, 1.0, 0.0, 4.0);
    const skewt::MixtureDensity d(m);
    CHECK(d.cdf(0.0) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("mixture quantile/cdf round trip on a grid") {
    rng::Xoshiro256pp gen(404);
    const auto m = random_mixture(gen);
    const skewt::MixtureDensity d(m);
    for (double y : {-6.0, -2.0, -0.1, 0.8, 3.0, 7.5}) {
        const double p = d.cdf(y);
        if (p <= 1e-9 || p >= 1.0 - 1e-9) continue;
        CHECK(d.quantile(p) == doctest::Approx(y).epsilon(1e-5));
    }
}

TEST_CASE("log-pdf consistency with pdf") {
    rng::Xoshiro256pp gen(11);
    for (int rep = 0; rep < 10; ++rep) {
        const auto m = random_mixture(gen);
        for (double y : {-3.0, 0.0, 1.5, 20.0}) {
            const double pdf = skewt::mixture_pdf(m, y);
            if (pdf < 1e-300) continue;
            CHECK(std::exp(skewt::mixture_logpdf(m, y)) ==
                  doctest::Approx(pdf).epsilon(1e-10));
        }
    }
}

TEST_CASE("mixture pdf integrates to one: randomized property") {
    rng::Xoshiro256pp gen(2024);
    for (int rep = 0; rep < 100; ++rep) {
        const auto m = random_mixture(gen);
        const skewt::MixtureDensity d(m);
        const double a = d.quantile(1e-6);
        const double b = d.quantile(1.0 - 1e-6);
        // test-side panel set: graded around every component center so that
        // narrow separated modes are resolved independently of the library
        std::vector<double> bounds{a, b};
        for (const auto& c : m.components) {
            const auto part = quad::graded_panels(
                a, b, std::clamp(c.mu, a, b), 0.1 * c.sigma, 1.4);
            bounds.insert(bounds.end(), part.begin(), part.end());
        }
        std::sort(bounds.begin(), bounds.end());
        bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());
        const double mass =
            quad::over_panels([&](double y) { return d.pdf(y); }, bounds);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("mixture cdf is monotone on a sorted grid") {
    rng::Xoshiro256pp gen(77);
    const auto m = random_mixture(gen);
    const skewt::MixtureDensity d(m);
    double prev = -1.0;
    for (int i = 0; i <= 2000; ++i) {
        const double y = -30.0 + 0.03 * i;
        const double f = d.cdf(y);
        CHECK(f >= prev - 1e-12);
        prev = f;
    }
}

TEST_CASE("skewness direction of the truncated mean") {
    MixtureParams pos, neg;
    pos.weights = neg.weights = {1.0};
    pos.components.emplace_back(0.0, 1.0, 2.5, 5.0);
    neg.components.emplace_back(0.0, 1.0, -2.5, 5.0);
    CHECK(skewt::mixture_moment(pos, 1, 0.01, 0.99) > 0.0);
    CHECK(skewt::mixture_moment(neg, 1, 0.01, 0.99) < 0.0);
}

TEST_CASE("moments: symmetry zero, degenerate point mass, MC cross-check") {
    MixtureParams sym;
    sym.weights = {1.0};
    sym.components.emplace_back(0.0, 1.0, 0.0, 4.0);
    CHECK(std::fabs(skewt::mixture_moment(sym, 1, 0.001, 0.999)) < 1e-8);

    MixtureParams point;
    point.weights = {1.0};
    point.components.emplace_back(3.0, 1e-4, 0.0, 30.0);
    // the truncation drops 0.2% of the near-point mass at 9
    CHECK(skewt::mixture_moment(point, 2, 0.001, 0.999) ==
          doctest::Approx(9.0 * 0.998).epsilon(1e-4));

    rng::Xoshiro256pp gen(5150);
    const auto m = random_mixture(gen);
    const skewt::MixtureDensity d(m);
    const double p_lo = 0.01, p_hi = 0.99;
    const double target = d.moment(1, p_lo, p_hi) / (p_hi - p_lo);
    // truncated draws through the inverse CDF
    rng::Xoshiro256pp ug(99);
    const std::size_t n = 200000;
    double acc = 0.0, acc2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double y = d.quantile(p_lo + (p_hi - p_lo) * ug.uniform());
        acc += y;
        acc2 += y * y;
    }
    const double mc = acc / static_cast<double>(n);
    const double se = std::sqrt((acc2 / n - mc * mc) / static_cast<double>(n));
    CHECK(std::fabs(mc - target) < 3.0 * se + 1e-6);
}

TEST_CASE("mixture sampling is deterministic and matches the cdf") {
    rng::Xoshiro256pp gen(31337);
    const auto m = random_mixture(gen);
    const skewt::MixtureDensity d(m);
    const auto s1 = d.sample(20000, 5);
    const auto s2 = d.sample(20000, 5);
    CHECK(s1 == s2);
    const double ks =
        test_helpers::ks_statistic(s1, [&](double y) { return d.cdf(y); });
    CHECK(ks < 0.012);
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(SkewedTParams(0.0, -1.0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(SkewedTParams(0.0, 1.0, 0.0, 0.0), std::invalid_argument);
    const SkewedTParams floored(0.0, 1e-9, 0.0, 1e-3);
    CHECK(floored.sigma == SkewedTParams::SIGMA_FLOOR);
    CHECK(floored.nu == SkewedTParams::NU_FLOOR);

    MixtureParams bad;
    bad.weights = {0.6, 0.6};
    bad.components.emplace_back(0.0, 1.0, 0.0, 1.0);
    bad.components.emplace_back(0.0, 1.0, 0.0, 1.0);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK_THROWS_AS(skewt::mixture_moment(bad, 1, 0.1, 0.9), std::invalid_argument);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bubblecast/marma.hpp"
#include "bubblecast/rng.hpp"
#include "bubblecast/tail_weighting.hpp"
#include "support/test_helpers.hpp"

using namespace bubblecast;

TEST_CASE("bounds on standard normal data land near the normal quantiles") {
    rng::Xoshiro256pp gen(123);
    std::vector<double> data(100000);
    for (auto& x : data) x = gen.normal();
    const auto bounds = tails::fit_tail_bounds(data, 0.05);
    CHECK(bounds.lower == doctest::Approx(-1.96).epsilon(0.10));
    CHECK(bounds.upper == doctest::Approx(1.96).epsilon(0.10));
}

TEST_CASE("smaller delta gives wider bounds") {
    rng::Xoshiro256pp gen(5);
    std::vector<double> data(20000);
    for (auto& x : data) x = gen.normal() + 0.3 * std::exp(gen.normal());
    const auto wide = tails::fit_tail_bounds(data, 0.02);
    const auto narrow = tails::fit_tail_bounds(data, 0.10);
    CHECK(wide.lower < narrow.lower);
    CHECK(wide.upper > narrow.upper);
}

TEST_CASE("detection rate calibrates to delta on heavy-tailed MAR paths") {
    for (double delta : {0.05, 0.1}) {
        double rate_acc = 0.0;
        const int n_seeds = 5;
        for (int s = 0; s < n_seeds; ++s) {
            const auto path = marma::simulate_marma(
                marma::preset("MAR01", 1.4), 5000, 2000, 40 + static_cast<unsigned>(s));
            const auto bounds = tails::fit_tail_bounds(path.values, delta);
            const auto w = tails::compute_weights(path.values, bounds);
            rate_acc += static_cast<double>(w.n_tail) /
                        static_cast<double>(w.n_total);
        }
        const double rate = rate_acc / n_seeds;
        CHECK(rate > 0.5 * delta);
        CHECK(rate < 1.5 * delta);
    }
}

TEST_CASE("bounds are affine-equivariant") {
    rng::Xoshiro256pp gen(77);
    std::vector<double> data(5000);
    for (auto& x : data) x = std::tan(1.4 * (gen.uniform() - 0.5));
    const auto base = tails::fit_tail_bounds(data, 0.05);
    const double a = 2.5, b = -7.0;
    std::vector<double> mapped(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) mapped[i] = a * data[i] + b;
    const auto moved = tails::fit_tail_bounds(mapped, 0.05);
    CHECK(moved.lower == doctest::Approx(a * base.lower + b).epsilon(1e-12));
    CHECK(moved.upper == doctest::Approx(a * base.upper + b).epsilon(1e-12));
}

TEST_CASE("weights follow the square-root rule exactly") {
    std::vector<double> series(100, 0.0);
    for (int i = 0; i < 25; ++i) series[static_cast<std::size_t>(i)] = 10.0;
    const tails::TailBounds bounds{-1.0, 1.0, 0.05};
    const auto w = tails::compute_weights(series, bounds);
    CHECK(w.n_total == 100);
    CHECK(w.n_tail == 25);
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i] > 1.0)
            CHECK(w.weights[i] == doctest::Approx(2.0).epsilon(1e-15));
        else
            CHECK(w.weights[i] == 1.0);
    }
    SUBCASE("weights depend only on tail membership") {
        std::vector<double> permuted(series);
        std::swap(permuted[40], permuted[60]);  // both bulk values
        const auto w2 = tails::compute_weights(permuted, bounds);
        CHECK(w2.weights == w.weights);
    }
}

TEST_CASE("empty tail set yields unit weights with a warning flag") {
    const std::vector<double> series(200, 0.5);
    const tails::TailBounds bounds{-1.0, 1.0, 0.05};
    const auto w = tails::compute_weights(series, bounds);
    CHECK(w.empty_tail_warning);
    CHECK(w.n_tail == 0);
    for (double v : w.weights) CHECK(v == 1.0);
}

TEST_CASE("weighted sampler hits the target probabilities") {
    SUBCASE("uniform weights give uniform frequencies") {
        tails::SampleWeights w;
        w.weights.assign(100, 1.0);
        w.n_total = 100;
        const auto draws = tails::weighted_batch_sampler(w, 100000, 31);
        std::vector<double> counts(100, 0.0);
        for (std::size_t i : draws) counts[i] += 1.0;
        const std::vector<double> expected(100, 1000.0);
        CHECK(test_helpers::chi2_pvalue(counts, expected) > 0.01);
    }
    SUBCASE("tail points of weight 2 are drawn with probability 0.4 overall") {
        std::vector<double> series(100, 0.0);
        for (int i = 0; i < 25; ++i) series[static_cast<std::size_t>(i)] = 5.0;
        const auto w =
            tails::compute_weights(series, tails::TailBounds{-1.0, 1.0, 0.1});
        const auto draws = tails::weighted_batch_sampler(w, 100000, 8);
        double tail_count = 0.0;
        for (std::size_t i : draws)
            if (series[i] > 1.0) tail_count += 1.0;
        CHECK(tail_count / 100000.0 == doctest::Approx(0.4).epsilon(0.025));
    }
    SUBCASE("batch size may exceed the sample size") {
        tails::SampleWeights w;
        w.weights.assign(10, 1.0);
        const auto draws = tails::weighted_batch_sampler(w, 50, 3);
        CHECK(draws.size() == 50);
    }
    SUBCASE("deterministic given the seed") {
        tails::SampleWeights w;
        w.weights.assign(64, 1.0);
        CHECK(tails::weighted_batch_sampler(w, 1000, 17) ==
              tails::weighted_batch_sampler(w, 1000, 17));
    }
}

TEST_CASE("dual weighting identity: sampling x loss emphasis = n/n_tail") {
    std::vector<double> series(1000, 0.0);
    for (int i = 0; i < 50; ++i) series[static_cast<std::size_t>(i)] = 9.0;
    const auto w =
        tails::compute_weights(series, tails::TailBounds{-1.0, 1.0, 0.05});
    const double w_tail = std::sqrt(1000.0 / 50.0);
    // sampling probability ratio (tail vs bulk) times loss weight ratio
    const double sampling_ratio = w_tail / 1.0;
    const double loss_ratio = w_tail / 1.0;
    CHECK(sampling_ratio * loss_ratio ==
          doctest::Approx(1000.0 / 50.0).epsilon(1e-12));
    CHECK(w.weights[0] == doctest::Approx(w_tail));
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(tails::fit_tail_bounds(std::vector<double>(50, 1.0), 0.05),
                    std::invalid_argument);
    rng::Xoshiro256pp gen(1);
    std::vector<double> data(500);
    for (auto& x : data) x = gen.normal();
    CHECK_THROWS_AS(tails::fit_tail_bounds(data, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(tails::fit_tail_bounds(data, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(
        tails::fit_tail_bounds(std::vector<double>(200, 3.14), 0.05),
        std::invalid_argument);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bubblecast/errors.hpp"
#include "bubblecast/marma.hpp"
#include "bubblecast/mdn.hpp"
#include "bubblecast/rng.hpp"
#include "support/test_helpers.hpp"

using namespace bubblecast;

namespace {

mdn::TrainingSet gaussian_set(std::size_t n, std::uint64_t seed,
                              double target_mean = 0.0, double target_sd = 1.0) {
    rng::Xoshiro256pp gen(seed);
    mdn::TrainingSet set;
    set.input_dim = 1;
    set.inputs.resize(n);
    set.targets.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        set.inputs[i] = gen.normal();
        set.targets[i] = target_mean + target_sd * gen.normal();
    }
    set.weights.weights.assign(n, 1.0);
    set.weights.tail_mask.assign(n, false);
    set.weights.n_total = n;
    return set;
}

mdn::MdnConfig small_config(std::uint64_t seed) {
    mdn::MdnConfig cfg;
    cfg.hidden = {8};
    cfg.n_mixtures = 2;
    cfg.epochs = 1;
    cfg.batch_size = 32;
    cfg.noise_std = 0.0;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("forward produces a valid mixture for arbitrary finite inputs") {
    const auto data = gaussian_set(256, 3);
    const auto result = mdn::train(data, small_config(1));
    rng::Xoshiro256pp gen(9);
    for (int rep = 0; rep < 200; ++rep) {
        const double x = gen.uniform(-1e6, 1e6);
        const auto m = result.model.forward({x});
        CHECK_NOTHROW(m.validate());
        double s = 0.0;
        for (double w : m.weights) s += w;
        CHECK(s == doctest::Approx(1.0).epsilon(1e-8));
        for (const auto& c : m.components) {
            CHECK(c.sigma >= skewt::SkewedTParams::SIGMA_FLOOR);
            CHECK(c.nu >= skewt::SkewedTParams::NU_FLOOR);
            CHECK(std::isfinite(c.mu));
            CHECK(std::isfinite(c.xi));
        }
    }
    CHECK_THROWS_AS(result.model.forward(
                        {std::numeric_limits<double>::infinity()}),
                    std::invalid_argument);
}

TEST_CASE("forward is deterministic") {
    const auto data = gaussian_set(256, 4);
    const auto result = mdn::train(data, small_config(2));
    const auto a = result.model.forward({0.7});
    const auto b = result.model.forward({0.7});
    CHECK(a.weights == b.weights);
    for (std::size_t j = 0; j < a.components.size(); ++j) {
        CHECK(a.components[j].mu == b.components[j].mu);
        CHECK(a.components[j].sigma == b.components[j].sigma);
    }
}

TEST_CASE("weighted NLL algebra") {
    const auto data = gaussian_set(64, 5);
    const auto model = mdn::train(data, small_config(3)).model;

    SUBCASE("all weights one is the plain mean NLL") {
        std::vector<std::size_t> idx = {0, 1, 2, 3};
        const double loss = mdn::weighted_nll(model, data, idx);
        double manual = 0.0;
        for (std::size_t i : idx) {
            const auto m = model.forward({data.inputs[i]});
            manual -= skewt::mixture_logpdf(m, data.targets[i]);
        }
        CHECK(loss == doctest::Approx(manual / 4.0).epsilon(1e-12));
    }

    SUBCASE("a single observation's loss does not depend on its weight") {
        mdn::TrainingSet one = data;
        one.weights.weights[7] = 13.5;
        CHECK(mdn::weighted_nll(model, one, {7}) ==
              doctest::Approx(mdn::weighted_nll(model, data, {7})).epsilon(1e-14));
    }

    SUBCASE("weight two equals duplicating the observation") {
        mdn::TrainingSet w2 = data;
        w2.weights.weights[3] = 2.0;
        const double weighted = mdn::weighted_nll(model, w2, {3, 5});
        const double duplicated = mdn::weighted_nll(model, data, {3, 3, 5});
        CHECK(weighted == doctest::Approx(duplicated).epsilon(1e-12));
    }

    SUBCASE("zero-weight entries contribute zero gradient") {
        mdn::TrainingSet z = data;
        z.weights.weights[1] = 0.0;
        std::vector<double> g_both, g_first;
        mdn::weighted_nll_grad(model, z, {0, 1}, g_both);
        mdn::weighted_nll_grad(model, z, {0}, g_first);
        for (std::size_t i = 0; i < g_both.size(); ++i)
            CHECK(g_both[i] == doctest::Approx(g_first[i]).epsilon(1e-10));
    }
}

TEST_CASE("analytic gradient matches central finite differences") {
    for (std::uint64_t seed : {11ull, 12ull}) {
        const auto data = gaussian_set(64, seed);
        auto model = mdn::train(data, small_config(seed)).model;
        std::vector<std::size_t> idx = {0, 5, 9, 13, 21, 33, 40, 63};
        std::vector<double> grad;
        mdn::weighted_nll_grad(model, data, idx, grad);

        const double h = 1e-5;
        std::size_t checked = 0;
        for (std::size_t i = 0; i < model.params.size(); ++i) {
            if (std::fabs(grad[i]) <= 1e-6) continue;
            const double saved = model.params[i];
            model.params[i] = saved + h;
            const double up = mdn::weighted_nll(model, data, idx);
            model.params[i] = saved - h;
            const double dn = mdn::weighted_nll(model, data, idx);
            model.params[i] = saved;
            const double fd = (up - dn) / (2.0 * h);
            CHECK(std::fabs(grad[i] - fd) / std::fabs(grad[i]) < 1e-4);
            ++checked;
        }
        CHECK(checked > 50);  // the fixture must exercise most parameters
    }
}

TEST_CASE("pi-logit gradient is orthogonal to the all-ones direction") {
    const auto data = gaussian_set(64, 21);
    const auto model = mdn::train(data, small_config(9)).model;
    std::vector<double> grad;
    mdn::weighted_nll_grad(model, data, {2, 3, 4}, grad);
    // pi-head bias block is the first head after the trunk: locate it by
    // reconstructing the layout sizes
    const std::size_t trunk = 8 * 1 + 8;
    const std::size_t head_w = 2 * 8;
    const std::size_t pi_b = trunk + head_w;
    const double s = grad[pi_b] + grad[pi_b + 1];
    CHECK(std::fabs(s) < 1e-12);
}

TEST_CASE("training is deterministic given the seed") {
    const auto data = gaussian_set(512, 6);
    mdn::MdnConfig cfg = small_config(77);
    cfg.epochs = 3;
    const auto a = mdn::train(data, cfg);
    const auto b = mdn::train(data, cfg);
    CHECK(a.model.params == b.model.params);
    CHECK(a.log.size() == b.log.size());
    for (std::size_t e = 0; e < a.log.size(); ++e)
        CHECK(a.log[e].mean_loss == b.log[e].mean_loss);
}

TEST_CASE("constant-rescaled weights follow the identical trajectory") {
    auto data = gaussian_set(512, 61);
    mdn::MdnConfig cfg = small_config(5);
    cfg.epochs = 2;
    const auto base = mdn::train(data, cfg);
    for (auto& w : data.weights.weights) w = 2.0;  // exact power of two
    const auto scaled = mdn::train(data, cfg);
    CHECK(base.model.params == scaled.model.params);
}

TEST_CASE("degenerate single-component fit recovers Gaussian moments") {
    const double mean = 1.7, sd = 0.6;
    const auto data = gaussian_set(4000, 13, mean, sd);
    mdn::MdnConfig cfg;
    cfg.hidden = {16};
    cfg.n_mixtures = 1;
    cfg.epochs = 40;
    cfg.batch_size = 128;
    cfg.noise_std = 0.0;
    cfg.freeze_shape_heads = true;  // xi = 0, nu = 50
    cfg.seed = 4;
    const auto result = mdn::train(data, cfg);
    const auto m = result.model.forward({0.0});
    CHECK(m.components[0].mu == doctest::Approx(mean).epsilon(0.1));
    CHECK(m.components[0].sigma == doctest::Approx(sd).epsilon(0.1));
    CHECK(m.components[0].xi == 0.0);
    CHECK(m.components[0].nu == doctest::Approx(50.0).epsilon(1e-6));
}

TEST_CASE("training on a MAR(0,1) path reduces the loss") {
    const auto path =
        marma::simulate_marma(marma::preset("MAR01", 1.4), 3000, 2000, 500);
    auto set = mdn::make_training_set(path.values, 1, 1);
    const auto bounds = tails::fit_tail_bounds(path.values, 0.05);
    mdn::apply_tail_weights(set, bounds);

    mdn::MdnConfig cfg;
    cfg.epochs = 15;
    cfg.seed = 99;
    const auto result = mdn::train(set, cfg);
    REQUIRE(result.log.size() == 15);
    CHECK(result.log.back().mean_loss < result.log.front().mean_loss);

    // predictive density integrates to ~1 through the mixture contract
    const auto d = result.model.predict_density({path.values[100]});
    const double mass = d->cdf(d->quantile(0.999)) - d->cdf(d->quantile(0.001));
    CHECK(mass == doctest::Approx(0.998).epsilon(1e-3));
}

TEST_CASE("training-set construction and validation") {
    std::vector<double> series{1, 2, 3, 4, 5, 6, 7, 8};
    const auto set = mdn::make_training_set(series, 2, 1);
    REQUIRE(set.rows() == 6);
    CHECK(set.inputs[0] == 1.0);  // first window (X_0, X_1)
    CHECK(set.inputs[1] == 2.0);
    CHECK(set.targets[0] == 3.0);
    CHECK(set.inputs[10] == 6.0);
    CHECK(set.inputs[11] == 7.0);
    CHECK(set.targets[5] == 8.0);

    mdn::MdnConfig bad;
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK_THROWS_AS(mdn::make_training_set({1.0, 2.0}, 1, 5),
                    std::invalid_argument);
}

TEST_CASE("loss reports the offending row on a non-finite log-density") {
    const auto data = gaussian_set(64, 5);
    const auto model = mdn::train(data, small_config(3)).model;
    mdn::TrainingSet poisoned = data;
    poisoned.targets[2] = std::numeric_limits<double>::infinity();
    bool threw = false;
    try {
        mdn::weighted_nll(model, poisoned, {0, 1, 2, 3});
    } catch (const loss_diagnostic_error& e) {
        threw = true;
        CHECK(e.batch_index == 2);
    }
    CHECK(threw);
}

#include "bubblecast/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bubblecast/errors.hpp"
#include "bubblecast/marma.hpp"
#include "bubblecast/quadrature.hpp"
#include "bubblecast/rng.hpp"

namespace bubblecast::eval {

namespace {

constexpr double DENSITY_FLOOR = 1e-300;
constexpr std::size_t POINTS_PER_INTERVAL = 2048;
constexpr std::size_t PANELS_PER_INTERVAL = POINTS_PER_INTERVAL / 16;

double integrate_region(const std::function<double(double)>& f,
                        const std::vector<Interval>& region) {
    double acc = 0.0;
    for (const Interval& iv : region) {
        if (!(iv.lo < iv.hi))
            throw std::invalid_argument("region interval with lo >= hi");
        acc += quad::composite(f, iv.lo, iv.hi, PANELS_PER_INTERVAL);
    }
    return acc;
}

}  // namespace

RegionPartition::Zone RegionPartition::classify(double x) const {
    if (x < q01 || x > q99) return Zone::outside;
    if (x >= q10 && x <= q90) return Zone::center;
    return Zone::tails;
}

RegionPartition RegionPartition::from_series(const std::vector<double>& series) {
    const auto q = marma::empirical_quantiles(series, {0.01, 0.10, 0.90, 0.99});
    return RegionPartition{q[0], q[1], q[2], q[3]};
}

double kl_divergence(const DensityFn& p, const DensityFn& q,
                     const std::vector<Interval>& region) {
    return integrate_region(
        [&](double y) {
            const double py = p(y);
            const double qy = q(y);
            if (py < 0.0 || qy < 0.0)
                throw numeric_error("kl_divergence: negative density value");
            if (py <= 0.0) return 0.0;
            return py * (std::log(py) - std::log(std::max(qy, DENSITY_FLOOR)));
        },
        region);
}

double ise(const DensityFn& p, const DensityFn& q,
           const std::vector<Interval>& region) {
    return integrate_region(
        [&](double y) {
            const double py = p(y);
            const double qy = q(y);
            if (py < 0.0 || qy < 0.0)
                throw numeric_error("ise: negative density value");
            const double d = py - qy;
            return d * d;
        },
        region);
}

double crps(const PredictiveDensity& density, double y, double trunc_lo,
            double trunc_hi) {
    if (!std::isfinite(y)) throw std::invalid_argument("crps: non-finite y");
    const double a = density.quantile(trunc_lo);
    const double b = density.quantile(trunc_hi);
    auto integrand = [&](double z) {
        const double f = density.cdf(z);
        const double step = z >= y ? 1.0 : 0.0;
        const double d = f - step;
        return d * d;
    };
    // split at the realized value: the integrand has a kink there
    double acc = 0.0;
    const std::size_t panels = 64;
    if (y > a && y < b) {
        acc += quad::composite(integrand, a, y, panels);
        acc += quad::composite(integrand, y, b, panels);
    } else {
        acc += quad::composite(integrand, a, b, 2 * panels);
    }
    return acc;
}

double log_score(const PredictiveDensity& density, double y) {
    if (!std::isfinite(y))
        throw std::invalid_argument("log_score: non-finite y");
    return std::log(std::max(density.pdf(y), DENSITY_FLOOR));
}

double cde_loss_single(const PredictiveDensity& density, double y,
                       double trunc_lo, double trunc_hi) {
    const double a = density.quantile(trunc_lo);
    const double b = density.quantile(trunc_hi);
    return density.squared_density_mass(a, b) - 2.0 * density.pdf(y);
}

double quantile_score(const PredictiveDensity& density, double y, double tau) {
    if (!(tau > 0.0 && tau < 1.0))
        throw std::invalid_argument("quantile_score: tau must lie in (0,1)");
    const double q = density.quantile(tau);
    const double u = y - q;
    return u * (tau - (u < 0.0 ? 1.0 : 0.0));
}

RegionValues moment_rmse(const std::vector<double>& grid,
                         const std::vector<double>& estimated,
                         const std::vector<double>& reference,
                         const RegionPartition& regions) {
    if (grid.size() != estimated.size() || grid.size() != reference.size())
        throw std::invalid_argument("moment_rmse: misaligned grids");
    double sc = 0.0, st = 0.0, sa = 0.0;
    std::size_t nc = 0, nt = 0, na = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double d = estimated[i] - reference[i];
        switch (regions.classify(grid[i])) {
            case RegionPartition::Zone::center:
                sc += d * d;
                ++nc;
                sa += d * d;
                ++na;
                break;
            case RegionPartition::Zone::tails:
                st += d * d;
                ++nt;
                sa += d * d;
                ++na;
                break;
            case RegionPartition::Zone::outside:
                break;
        }
    }
    const auto rmse = [](double s, std::size_t n) {
        return n > 0 ? std::sqrt(s / static_cast<double>(n))
                     : std::numeric_limits<double>::quiet_NaN();
    };
    return RegionValues{rmse(sc, nc), rmse(st, nt), rmse(sa, na)};
}

McsResult model_confidence_set(const std::vector<std::vector<double>>& losses,
                               double alpha, std::size_t n_boot,
                               std::uint64_t seed) {
    const std::size_t n_models = losses.size();
    if (n_models < 2)
        throw std::invalid_argument("model_confidence_set: need >= 2 models");
    const std::size_t n = losses[0].size();
    for (const auto& l : losses)
        if (l.size() != n || n == 0)
            throw std::invalid_argument(
                "model_confidence_set: loss series must be equal-length");

    const std::size_t block =
        static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(n))));

    // circular block bootstrap index sets, shared across models
    std::vector<std::vector<std::size_t>> boot_idx(n_boot,
                                                   std::vector<std::size_t>(n));
    rng::Xoshiro256pp gen(seed);
    for (std::size_t b = 0; b < n_boot; ++b) {
        std::size_t filled = 0;
        while (filled < n) {
            const std::size_t start = gen.below(n);
            for (std::size_t k = 0; k < block && filled < n; ++k)
                boot_idx[b][filled++] = (start + k) % n;
        }
    }

    // per-model overall and per-replicate bootstrap means
    std::vector<double> mean(n_models, 0.0);
    std::vector<std::vector<double>> boot_mean(n_models,
                                               std::vector<double>(n_boot));
    for (std::size_t i = 0; i < n_models; ++i) {
        double acc = 0.0;
        for (double v : losses[i]) acc += v;
        mean[i] = acc / static_cast<double>(n);
        for (std::size_t b = 0; b < n_boot; ++b) {
            double ba = 0.0;
            for (std::size_t t : boot_idx[b]) ba += losses[i][t];
            boot_mean[i][b] = ba / static_cast<double>(n);
        }
    }

    std::vector<bool> active(n_models, true);
    std::vector<double> p_values(n_models, 1.0);
    double p_running = 0.0;
    std::size_t n_active = n_models;

    while (n_active > 1) {
        // studentized pairwise statistics among active models
        std::vector<std::size_t> act;
        for (std::size_t i = 0; i < n_models; ++i)
            if (active[i]) act.push_back(i);

        double t_max = 0.0;
        std::size_t worst = act[0];
        double worst_t = -std::numeric_limits<double>::infinity();
        std::vector<std::vector<double>> sd(act.size(),
                                            std::vector<double>(act.size(), 0.0));
        bool any_positive_var = false;
        for (std::size_t a = 0; a < act.size(); ++a) {
            double row_max = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < act.size(); ++c) {
                if (a == c) continue;
                const std::size_t i = act[a], j = act[c];
                double var = 0.0;
                for (std::size_t b = 0; b < n_boot; ++b) {
                    const double d =
                        (boot_mean[i][b] - boot_mean[j][b]) - (mean[i] - mean[j]);
                    var += d * d;
                }
                var /= static_cast<double>(n_boot);
                sd[a][c] = std::sqrt(var);
                double t_ij;
                if (sd[a][c] > 0.0) {
                    any_positive_var = true;
                    t_ij = (mean[i] - mean[j]) / sd[a][c];
                } else {
                    // zero-variance differential: exact tie when means agree
                    t_ij = mean[i] == mean[j]
                               ? 0.0
                               : (mean[i] > mean[j] ? 1e30 : -1e30);
                }
                t_max = std::max(t_max, std::fabs(t_ij));
                row_max = std::max(row_max, t_ij);
            }
            if (row_max > worst_t) {
                worst_t = row_max;
                worst = act[a];
            }
        }

        if (!any_positive_var && t_max == 0.0) break;  // all exact ties

        // bootstrap distribution of the range statistic
        std::size_t exceed = 0;
        for (std::size_t b = 0; b < n_boot; ++b) {
            double tb = 0.0;
            for (std::size_t a = 0; a < act.size(); ++a)
                for (std::size_t c = 0; c < act.size(); ++c) {
                    if (a == c || !(sd[a][c] > 0.0)) continue;
                    const std::size_t i = act[a], j = act[c];
                    const double d = (boot_mean[i][b] - boot_mean[j][b]) -
                                     (mean[i] - mean[j]);
                    tb = std::max(tb, std::fabs(d) / sd[a][c]);
                }
            if (tb >= t_max) ++exceed;
        }
        const double p_round =
            static_cast<double>(exceed) / static_cast<double>(n_boot);
        p_running = std::max(p_running, p_round);
        p_values[worst] = p_running;
        active[worst] = false;
        --n_active;
    }
    // models never eliminated keep p-value 1

    McsResult result;
    result.p_values = p_values;
    for (std::size_t i = 0; i < n_models; ++i)
        if (p_values[i] >= alpha) result.survivors.push_back(i);
    return result;
}

}  // namespace bubblecast::eval

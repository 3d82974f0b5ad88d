#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bubblecast/density.hpp"

namespace bubblecast::eval {

struct Interval {
    double lo;
    double hi;
};

/// Evaluation regions in data units, cut at the marginal quantiles of a
/// reference series: center [q10, q90], tails [q01, q10) u (q90, q99],
/// total [q01, q99]. Every point of the total belongs to exactly one of
/// center/tails.
struct RegionPartition {
    double q01, q10, q90, q99;

    std::vector<Interval> center() const { return {{q10, q90}}; }
    std::vector<Interval> tails() const { return {{q01, q10}, {q90, q99}}; }
    std::vector<Interval> total() const { return {{q01, q99}}; }

    enum class Zone { outside, center, tails };
    Zone classify(double x) const;

    static RegionPartition from_series(const std::vector<double>& series);
};

using DensityFn = std::function<double(double)>;

/// KL(p || q) restricted to the given intervals, composite quadrature with
/// 2048 points per interval; q floored at 1e-300. Throws numeric_error on
/// negative density values.
double kl_divergence(const DensityFn& p, const DensityFn& q,
                     const std::vector<Interval>& region);

/// Integrated squared error over the region, same quadrature layout.
double ise(const DensityFn& p, const DensityFn& q,
           const std::vector<Interval>& region);

/// CRPS with the integration truncated to [Q(trunc_lo), Q(trunc_hi)] of the
/// predictive itself (mandatory: CRPS diverges for alpha <= 1 tails).
double crps(const PredictiveDensity& density, double y, double trunc_lo = 0.001,
            double trunc_hi = 0.999);

/// log p(y), floored at log(1e-300); higher is better.
double log_score(const PredictiveDensity& density, double y);

/// Mean over observations of the per-density CDE loss
/// int p^2 - 2 p(y_i), squared-density integral over the truncated support.
double cde_loss_single(const PredictiveDensity& density, double y,
                       double trunc_lo = 0.001, double trunc_hi = 0.999);

/// Pinball loss rho_tau(y - q_tau).
double quantile_score(const PredictiveDensity& density, double y, double tau);

/// Per-region RMSE between aligned per-grid-point moment estimates.
struct RegionValues {
    double center, tails, total;
};
RegionValues moment_rmse(const std::vector<double>& grid,
                         const std::vector<double>& estimated,
                         const std::vector<double>& reference,
                         const RegionPartition& regions);

/// Model Confidence Set via the range statistic over pairwise mean loss
/// differentials, studentized by a circular block bootstrap
/// (B replicates, block length ceil(n^(1/3))). Models with p-value >= alpha
/// survive at the 1 - alpha confidence level; p-values are monotonized
/// along the elimination order, so survivor sets nest across levels.
struct McsResult {
    std::vector<double> p_values;       // per model, input order
    std::vector<std::size_t> survivors;  // indices with p >= alpha
};
McsResult model_confidence_set(const std::vector<std::vector<double>>& losses,
                               double alpha = 0.10, std::size_t n_boot = 1000,
                               std::uint64_t seed = 7);

}  // namespace bubblecast::eval

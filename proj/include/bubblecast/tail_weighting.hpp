#pragma once

#include <cstdint>
#include <vector>

namespace bubblecast::tails {

/// Tail fences from the generalized-boxplot construction: the data is
/// rank-transformed to normal scores, a Tukey g-and-h law is fitted by
/// letter-value quantile matching, and the fitted quantiles at delta/2 and
/// 1 - delta/2 are mapped back to data units through the inverse rank
/// transform.
struct TailBounds {
    double lower;
    double upper;
    double delta;
};

struct SampleWeights {
    std::vector<double> weights;
    std::vector<bool> tail_mask;
    std::size_t n_total = 0;
    std::size_t n_tail = 0;
    bool empty_tail_warning = false;
};

/// delta in (0, 0.5); series length >= 100. Letter-value levels
/// {0.75, 0.9, 0.95, 0.99} (mirrored); h clamped to [0, 0.5]; the inverse
/// rank transform interpolates the empirical CDF piecewise-linearly and
/// extrapolates linearly in the extreme 1/(n+1) mass.
TailBounds fit_tail_bounds(const std::vector<double>& series, double delta);

/// w_t = sqrt(n_total/n_tail) on the tail set {X_t < lower or X_t > upper},
/// 1 elsewhere. An empty tail set yields all-ones weights with a flag.
SampleWeights compute_weights(const std::vector<double>& series,
                              const TailBounds& bounds);

/// Weighted random sampling with replacement, P(t) = w_t / sum(w).
std::vector<std::size_t> weighted_batch_sampler(const SampleWeights& weights,
                                                std::size_t batch_size,
                                                std::uint64_t seed);

/// Fitted g-and-h coefficients on the normal-scores scale; exposed for
/// diagnostics and the experiment audit log.
struct TghFit {
    double median;
    double g;
    double h;
    double scale;
};
TghFit fit_tgh(const std::vector<double>& normal_scores_sorted);

}  // namespace bubblecast::tails

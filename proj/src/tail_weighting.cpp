#include "bubblecast/tail_weighting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bubblecast/rng.hpp"
#include "bubblecast/special_functions.hpp"

namespace bubblecast::tails {

namespace {

// type-7 quantile of a sorted vector
double sorted_quantile(const std::vector<double>& s, double p) {
    const double h = (static_cast<double>(s.size()) - 1.0) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (h - std::floor(h)) * (s[hi] - s[lo]);
}

// Tukey g-and-h transform of a normal score, with the g -> 0 limit.
double tgh_transform(double z, double g, double h) {
    const double base = std::fabs(g) < 1e-8 ? z : std::expm1(g * z) / g;
    return base * std::exp(0.5 * h * z * z);
}

// Linear interpolation of the empirical CDF: probability u -> data units,
// pairs (i+1)/(n+1) -> sorted[i], extrapolating linearly in the extreme
// 1/(n+1) mass on either side.
double inverse_rank_transform(const std::vector<double>& sorted, double u) {
    const double n = static_cast<double>(sorted.size());
    const double pos = u * (n + 1.0) - 1.0;  // 0-indexed
    const std::size_t last = sorted.size() - 1;
    if (pos <= 0.0) return sorted[0] + pos * (sorted[1] - sorted[0]);
    if (pos >= static_cast<double>(last))
        return sorted[last] +
               (pos - static_cast<double>(last)) * (sorted[last] - sorted[last - 1]);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - std::floor(pos);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

TghFit fit_tgh(const std::vector<double>& scores) {
    static const double LEVELS[] = {0.75, 0.9, 0.95, 0.99};
    TghFit fit{};
    fit.median = sorted_quantile(scores, 0.5);

    // letter-value estimate of g: median of per-level log half-spread ratios
    std::vector<double> gs;
    for (double p : LEVELS) {
        const double zp = sf::norm_ppf(p);
        const double uhs = sorted_quantile(scores, p) - fit.median;
        const double lhs = fit.median - sorted_quantile(scores, 1.0 - p);
        if (uhs > 0.0 && lhs > 0.0) gs.push_back(std::log(uhs / lhs) / zp);
    }
    if (gs.empty()) {
        fit.g = 0.0;
    } else {
        std::sort(gs.begin(), gs.end());
        fit.g = 0.5 * (gs[(gs.size() - 1) / 2] + gs[gs.size() / 2]);
    }

    // given g, h and log-scale from regressing the spread equation on z^2/2
    double sxx = 0.0, sxy = 0.0, sx = 0.0, sy = 0.0;
    int m = 0;
    for (double p : LEVELS) {
        const double zp = sf::norm_ppf(p);
        const double spread =
            sorted_quantile(scores, p) - sorted_quantile(scores, 1.0 - p);
        const double denom = std::fabs(fit.g) < 1e-8
                                 ? 2.0 * zp
                                 : (std::exp(fit.g * zp) - std::exp(-fit.g * zp)) / fit.g;
        if (!(spread > 0.0) || !(denom > 0.0)) continue;
        const double x = 0.5 * zp * zp;
        const double y = std::log(spread / denom);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m >= 2) {
        const double denom = m * sxx - sx * sx;
        const double slope = (m * sxy - sx * sy) / denom;
        const double intercept = (sy - slope * sx) / m;
        fit.h = std::clamp(slope, 0.0, 0.5);
        fit.scale = std::exp(intercept);
    } else {
        fit.h = 0.0;
        fit.scale = 1.0;
    }
    return fit;
}

TailBounds fit_tail_bounds(const std::vector<double>& series, double delta) {
    if (series.size() < 100)
        throw std::invalid_argument("fit_tail_bounds: need at least 100 points");
    if (!(delta > 0.0 && delta < 0.5))
        throw std::invalid_argument("fit_tail_bounds: delta must lie in (0, 0.5)");

    std::vector<double> sorted(series);
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back())
        throw std::invalid_argument("fit_tail_bounds: degenerate series");

    // rank-preserving transform to normal scores
    const double n1 = static_cast<double>(sorted.size()) + 1.0;
    std::vector<double> scores(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i)
        scores[i] = sf::norm_ppf(static_cast<double>(i + 1) / n1);

    const TghFit fit = fit_tgh(scores);

    const double z_lo =
        fit.median + fit.scale * tgh_transform(sf::norm_ppf(0.5 * delta), fit.g, fit.h);
    const double z_hi =
        fit.median + fit.scale * tgh_transform(sf::norm_ppf(1.0 - 0.5 * delta), fit.g, fit.h);

    TailBounds bounds{};
    bounds.delta = delta;
    bounds.lower = inverse_rank_transform(sorted, sf::norm_cdf(z_lo));
    bounds.upper = inverse_rank_transform(sorted, sf::norm_cdf(z_hi));
    if (!(bounds.lower < bounds.upper))
        throw std::invalid_argument("fit_tail_bounds: degenerate bounds");
    return bounds;
}

SampleWeights compute_weights(const std::vector<double>& series,
                              const TailBounds& bounds) {
    if (!(bounds.lower < bounds.upper))
        throw std::invalid_argument("compute_weights: invalid bounds");
    SampleWeights out;
    out.n_total = series.size();
    out.tail_mask.resize(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        const bool tail = series[i] < bounds.lower || series[i] > bounds.upper;
        out.tail_mask[i] = tail;
        if (tail) ++out.n_tail;
    }
    out.weights.assign(series.size(), 1.0);
    if (out.n_tail == 0) {
        out.empty_tail_warning = true;
        return out;
    }
    const double w_tail = std::sqrt(static_cast<double>(out.n_total) /
                                    static_cast<double>(out.n_tail));
    for (std::size_t i = 0; i < series.size(); ++i)
        if (out.tail_mask[i]) out.weights[i] = w_tail;
    return out;
}

std::vector<std::size_t> weighted_batch_sampler(const SampleWeights& weights,
                                                std::size_t batch_size,
                                                std::uint64_t seed) {
    if (batch_size < 1)
        throw std::invalid_argument("weighted_batch_sampler: batch_size >= 1");
    if (weights.weights.empty())
        throw std::invalid_argument("weighted_batch_sampler: empty weights");
    std::vector<double> cum(weights.weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.weights.size(); ++i) {
        acc += weights.weights[i];
        cum[i] = acc;
    }
    rng::Xoshiro256pp gen(seed);
    std::vector<std::size_t> out(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
        const double u = gen.uniform() * acc;
        const std::size_t j = static_cast<std::size_t>(
            std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
        out[i] = std::min(j, cum.size() - 1);
    }
    return out;
}

}  // namespace bubblecast::tails

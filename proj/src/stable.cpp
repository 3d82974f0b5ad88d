#include "bubblecast/stable.hpp"

#include <cmath>
#include <stdexcept>

#include "bubblecast/rng.hpp"

namespace bubblecast::stable {

namespace {

constexpr double PI = 3.141592653589793238462643383279502884;
constexpr double HALF_PI = 1.570796326794896619231321691639751442;

// Standard CMS draw for S(alpha, beta, 1, 0) in S1, from a uniform
// U ~ (-pi/2, pi/2) and an exponential W.
double cms_standard(double alpha, double beta, double u, double w) {
    if (alpha == 1.0) {
        const double bu = HALF_PI + beta * u;
        double x = (bu * std::tan(u) -
                    beta * std::log((HALF_PI * w * std::cos(u)) / bu));
        return x / HALF_PI;
    }
    const double ta = beta * std::tan(HALF_PI * alpha);
    const double b = std::atan(ta) / alpha;
    const double s = std::pow(1.0 + ta * ta, 0.5 / alpha);
    const double a_ub = alpha * (u + b);
    return s * std::sin(a_ub) / std::pow(std::cos(u), 1.0 / alpha) *
           std::pow(std::cos(u - a_ub) / w, (1.0 - alpha) / alpha);
}

double shift_and_scale(const StableParams& p, double x_std) {
    if (p.alpha == 1.0 && p.beta != 0.0) {
        // S1 location correction for the alpha = 1 skewed family
        return p.sigma * x_std + p.mu +
               (2.0 / PI) * p.beta * p.sigma * std::log(p.sigma);
    }
    return p.sigma * x_std + p.mu;
}

}  // namespace

void StableParams::validate() const {
    if (!(alpha > 0.0) || !(alpha <= 2.0))
        throw std::invalid_argument("StableParams: alpha must lie in (0, 2]");
    if (!(beta >= -1.0) || !(beta <= 1.0))
        throw std::invalid_argument("StableParams: beta must lie in [-1, 1]");
    if (!(sigma > 0.0))
        throw std::invalid_argument("StableParams: sigma must be positive");
    if (!std::isfinite(mu))
        throw std::invalid_argument("StableParams: mu must be finite");
}

double sample_stable_at(const StableParams& params, std::uint64_t seed,
                        std::uint64_t index) {
    // two splitmix64 words per draw: positions 2k and 2k+1
    const double u1 = rng::to_open_unit(rng::splitmix64_at(seed, 2 * index));
    const double u2 = rng::to_open_unit(rng::splitmix64_at(seed, 2 * index + 1));
    const double u = PI * (u1 - 0.5);
    const double w = -std::log(u2);
    return shift_and_scale(params, cms_standard(params.alpha, params.beta, u, w));
}

std::vector<double> sample_stable(const StableParams& params, std::size_t n,
                                  std::uint64_t seed) {
    params.validate();
    if (n < 1) throw std::invalid_argument("sample_stable: n must be >= 1");
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k)
        out[k] = sample_stable_at(params, seed, k);
    return out;
}

double cauchy_pdf(double x, double location, double scale) {
    if (!(scale > 0.0))
        throw std::invalid_argument("cauchy_pdf: scale must be positive");
    const double d = x - location;
    return scale / (PI * (scale * scale + d * d));
}

double cauchy_cdf(double x, double location, double scale) {
    if (!(scale > 0.0))
        throw std::invalid_argument("cauchy_cdf: scale must be positive");
    return 0.5 + std::atan((x - location) / scale) / PI;
}

double cauchy_quantile(double p, double location, double scale) {
    if (!(scale > 0.0))
        throw std::invalid_argument("cauchy_quantile: scale must be positive");
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("cauchy_quantile: p must lie in (0,1)");
    return location + scale * std::tan(PI * (p - 0.5));
}

}  // namespace bubblecast::stable

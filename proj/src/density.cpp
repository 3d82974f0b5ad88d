#include "bubblecast/density.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bubblecast/quadrature.hpp"
#include "bubblecast/rng.hpp"

namespace bubblecast {

double PredictiveDensity::log_pdf(double y) const {
    return std::log(std::max(pdf(y), 1e-300));
}

double invert_cdf(const PredictiveDensity& d, double p, double lo, double hi) {
    // widen the bracket if needed (heavy tails can escape analytic bounds)
    double flo = d.cdf(lo), fhi = d.cdf(hi);
    for (int i = 0; i < 200 && flo > p; ++i) {
        lo -= std::max(1.0, std::fabs(lo)) * 2.0;
        flo = d.cdf(lo);
    }
    for (int i = 0; i < 200 && fhi < p; ++i) {
        hi += std::max(1.0, std::fabs(hi)) * 2.0;
        fhi = d.cdf(hi);
    }
    double a = lo, b = hi;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        const double f = d.cdf(mid);
        if (std::fabs(f - p) < 1e-10 &&
            (b - a) < 1e-9 * std::max(1.0, std::fabs(mid)))
            return mid;
        if (f < p)
            a = mid;
        else
            b = mid;
        if ((b - a) < 1e-13 * std::max(1.0, std::fabs(mid))) break;
    }
    return 0.5 * (a + b);
}

double PredictiveDensity::quantile(double p) const {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("quantile: p must lie in (0,1)");
    return invert_cdf(*this, p, support_lo(), support_hi());
}

std::vector<double> PredictiveDensity::sample(std::size_t n,
                                              std::uint64_t seed) const {
    rng::Xoshiro256pp gen(seed);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = quantile(gen.uniform());
    return out;
}

std::vector<double> PredictiveDensity::quadrature_panels(double a,
                                                         double b) const {
    const double center = std::clamp(quantile(0.5), a, b);
    const double first = std::max((b - a) * 1e-4, 1e-12);
    return quad::graded_panels(a, b, center, first, 1.7);
}

double PredictiveDensity::moment(int k, double p_lo, double p_hi) const {
    if (k < 1 || k > 4)
        throw std::invalid_argument("moment: order must lie in {1,2,3,4}");
    if (!(p_lo > 0.0 && p_lo < p_hi && p_hi < 1.0))
        throw std::invalid_argument("moment: need 0 < p_lo < p_hi < 1");
    const double a = quantile(p_lo);
    const double b = quantile(p_hi);
    if (!(a < b)) return 0.0;
    return quad::over_panels(
        [&](double y) { return std::pow(y, k) * pdf(y); },
        quadrature_panels(a, b));
}

double PredictiveDensity::squared_density_mass(double a, double b) const {
    if (!(a < b)) return 0.0;
    return quad::over_panels(
        [&](double y) {
            const double f = pdf(y);
            return f * f;
        },
        quadrature_panels(a, b));
}

}  // namespace bubblecast

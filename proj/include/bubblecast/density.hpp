#pragma once

#include <cstdint>
#include <memory>
#include <vector>

namespace bubblecast {

/// An evaluable conditional law: the common currency between forecasters
/// and the evaluation harness. Implementations must keep cdf monotone
/// nondecreasing and clipped to [0,1], and quantile consistent with cdf.
class PredictiveDensity {
public:
    virtual ~PredictiveDensity() = default;

    virtual double pdf(double y) const = 0;
    virtual double log_pdf(double y) const;
    virtual double cdf(double y) const = 0;

    /// p in (0,1). Default: bisection on cdf over [support_lo, support_hi].
    virtual double quantile(double p) const;

    /// i.i.d. draws, deterministic given the seed. Default: inverse CDF.
    virtual std::vector<double> sample(std::size_t n, std::uint64_t seed) const;

    /// Truncated raw moment E[Y^k; Y in [Q(p_lo), Q(p_hi)]] by quadrature.
    /// Truncation is mandatory: raw moments may not exist for heavy tails.
    virtual double moment(int k, double p_lo, double p_hi) const;

    /// int_a^b pdf(y)^2 dy (the CDE-loss integral). Default: quadrature
    /// over quadrature_panels.
    virtual double squared_density_mass(double a, double b) const;

    /// Panel boundaries over [a, b] fine enough to resolve every feature of
    /// the density. The default grades panels away from the median, which
    /// is only safe for unimodal shapes; mixtures override with one graded
    /// set per component.
    virtual std::vector<double> quadrature_panels(double a, double b) const;

    /// Conservative bracket containing all quantiles in (0,1); used by the
    /// default bisection. Implementations with analytic structure override.
    virtual double support_lo() const = 0;
    virtual double support_hi() const = 0;
};

using DensityPtr = std::unique_ptr<PredictiveDensity>;

/// Bisection for F(y) = p on a monotone CDF. Shared by implementations.
double invert_cdf(const PredictiveDensity& d, double p, double lo, double hi);

}  // namespace bubblecast

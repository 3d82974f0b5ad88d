#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

#include "bubblecast/density.hpp"

namespace bubblecast::skewt {

/// One skewed-t component: location mu, scale sigma, shape xi (asymmetry),
/// degrees of freedom nu (tail thickness). The density is
///   f(y) = (2/sigma) t(z; nu) T(xi z sqrt((nu+1)/(nu+z^2)); nu+1),
///   z = (y - mu)/sigma,
/// with t / T the Student-t pdf / cdf. Numerical floors sigma >= 1e-4 and
/// nu >= 0.1 are applied at construction.
struct SkewedTParams {
    static constexpr double SIGMA_FLOOR = 1e-4;
    static constexpr double NU_FLOOR = 0.1;

    SkewedTParams(double mu_, double sigma_, double xi_, double nu_);

    double mu;
    double sigma;
    double xi;
    double nu;
};

/// K-component mixture: weights on the simplex plus one SkewedTParams each.
struct MixtureParams {
    std::vector<double> weights;
    std::vector<SkewedTParams> components;

    /// Throws std::invalid_argument unless K >= 1, weights nonnegative and
    /// summing to 1 within 1e-8.
    void validate() const;
};

double student_t_pdf(double z, double nu);
double student_t_log_pdf(double z, double nu);

/// Student-t CDF via the regularized incomplete beta function; absolute
/// error <= 1e-10.
double student_t_cdf(double z, double nu);
double log_student_t_cdf(double z, double nu);

double skewt_pdf(double y, const SkewedTParams& p);
double skewt_log_pdf(double y, const SkewedTParams& p);

/// Numerically integrated CDF (cached Gauss-Legendre panels in z-space with
/// analytic Student-t power-law tail completion), monotone, in [0,1].
double skewt_cdf(double y, const SkewedTParams& p);
double skewt_quantile(double prob, const SkewedTParams& p);

/// Gradient of log f(y; mu, sigma, xi, nu) with respect to the four
/// parameters. The derivative through the T(.; nu+1) argument is analytic
/// (the t pdf); the direct dependence of T on its dof is a central finite
/// difference with step 1e-4.
struct SkewtLogPdfGrad {
    double log_pdf;
    double d_mu;
    double d_sigma;
    double d_xi;
    double d_nu;
};
SkewtLogPdfGrad skewt_log_pdf_grad(double y, const SkewedTParams& p);

double mixture_pdf(const MixtureParams& m, double y);
double mixture_logpdf(const MixtureParams& m, double y);

/// Standardized-z CDF table for one (xi, nu) pair: graded panel boundaries,
/// cumulative masses, tail constants. Shared by all components with the
/// same shape, immutable after construction.
class ComponentCdf {
public:
    ComponentCdf(double xi, double nu);
    double cdf_z(double z) const;
    double quantile_z(double p) const;

private:
    double interior_cdf(double z) const;
    double xi_, nu_;
    double z_max_;
    std::vector<double> bounds_;  // ascending z panel boundaries
    std::vector<double> cum_;     // CDF at each boundary
};

/// Full PredictiveDensity interface over a skewed-t mixture. pdf/log-pdf
/// are direct; cdf/quantile use lazily built per-component caches; sampling
/// draws a component categorically then inverts that component's CDF.
class MixtureDensity : public PredictiveDensity {
public:
    explicit MixtureDensity(MixtureParams params);

    double pdf(double y) const override;
    double log_pdf(double y) const override;
    double cdf(double y) const override;
    double quantile(double p) const override;
    std::vector<double> sample(std::size_t n, std::uint64_t seed) const override;
    std::vector<double> quadrature_panels(double a, double b) const override;
    double support_lo() const override;
    double support_hi() const override;

    const MixtureParams& params() const { return params_; }
    double component_quantile(std::size_t j, double p) const;

private:
    void ensure_caches() const;
    MixtureParams params_;
    mutable std::vector<std::unique_ptr<ComponentCdf>> caches_;
    mutable std::once_flag cache_once_;
};

/// Truncated moment of the mixture over [Q(p_lo), Q(p_hi)] by composite
/// quadrature; convenience wrapper over MixtureDensity::moment.
double mixture_moment(const MixtureParams& m, int k, double p_lo, double p_hi);

}  // namespace bubblecast::skewt

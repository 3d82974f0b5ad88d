#pragma once

#include <cstddef>
#include <vector>

#include "bubblecast/density.hpp"

namespace bubblecast::baselines {

/// Nadaraya-Watson conditional density estimator with Gaussian product
/// kernels:
///   p(y|x) = sum_i K_h1(x - X_i) K_h2(y - Y_i) / sum_i K_h1(x - X_i).
/// Bandwidths default to Silverman's rule on the robust scale,
/// h = 1.06 * (IQR/1.349) * n^(-1/5), per axis. When the conditioning
/// denominator underflows, the estimator falls back to the 50 nearest
/// conditioning points with uniform weights (flagged on the density).
class NwEstimator {
public:
    /// pairs (X_t, X_{t+h}); bandwidths <= 0 select Silverman defaults.
    NwEstimator(std::vector<double> x, std::vector<double> y,
                double bandwidth_x = 0.0, double bandwidth_y = 0.0);

    DensityPtr density(double x) const;

    double bandwidth_x() const { return hx_; }
    double bandwidth_y() const { return hy_; }
    std::size_t size() const { return x_.size(); }

private:
    std::vector<double> x_, y_;
    double hx_, hy_;
};

/// Exact conditional predictive density of a Cauchy MAR(0,1) process
/// (1 - psi F) X_t = eps_t with eps ~ Cauchy(0, sigma):
///   p(y | x_t) = C(x_t; psi^h y, s_h) C(y; 0, s_inf) / C(x_t; 0, s_inf),
///   s_h = sigma * sum_{j<h} |psi|^j,  s_inf = sigma / (1 - |psi|),
/// from X_t = psi^h X_{t+h} + sum_{j<h} psi^j eps_{t+j}, the independence
/// of X_{t+h} from those innovations, and Cauchy scale additivity. The
/// acceptance suite validates this closed form against binned simulation
/// before it is used as ground truth.
class CauchyMar1Oracle {
public:
    CauchyMar1Oracle(double psi, double sigma, std::size_t horizon);

    DensityPtr predictive(double x_t) const;
    double pdf(double y, double x_t) const;

    /// Truncated conditional moment, k in {1, 2}; truncation mandatory
    /// (Cauchy moments do not exist untruncated).
    double moment(double x_t, int k, double p_lo, double p_hi) const;

    double marginal_scale() const { return s_inf_; }
    double horizon_scale() const { return s_h_; }
    double psi() const { return psi_; }
    std::size_t horizon() const { return h_; }

private:
    double psi_, sigma_, s_h_, s_inf_, psi_h_;
    std::size_t h_;
};

}  // namespace bubblecast::baselines

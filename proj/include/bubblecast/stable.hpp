#pragma once

#include <cstdint>
#include <vector>

namespace bubblecast::stable {

/// Parameters of a univariate alpha-stable law S(alpha, beta, sigma, mu) in
/// the classical S1 parameterization. Note the well-known S0/S1 pitfall: in
/// S1 the location of the alpha = 1, beta != 0 family is not
/// scale-equivariant (a (2/pi) beta sigma log sigma term appears). All
/// simulations in this project use beta = 0, where S0 and S1 coincide.
struct StableParams {
    double alpha;  // tail index in (0, 2]
    double beta;   // skewness in [-1, 1]
    double sigma;  // scale > 0
    double mu;     // location

    /// Throws std::invalid_argument when outside the parameter domain.
    void validate() const;
};

/// i.i.d. draws via the Chambers-Mallows-Stuck construction. The k-th draw
/// is a deterministic function of (params, seed, k): innovations are
/// addressed by index on a splitmix64 counter stream, so identical
/// (params, n, seed) give bitwise-identical series.
std::vector<double> sample_stable(const StableParams& params, std::size_t n,
                                  std::uint64_t seed);

/// Single draw addressed by stream index; used by the MARMA simulator to
/// pin one innovation to each absolute time index.
double sample_stable_at(const StableParams& params, std::uint64_t seed,
                        std::uint64_t index);

/// Cauchy density sigma / (pi (sigma^2 + (x - mu)^2)). scale > 0 required.
double cauchy_pdf(double x, double location, double scale);

/// Cauchy CDF 1/2 + atan((x - mu)/sigma)/pi.
double cauchy_cdf(double x, double location, double scale);

/// Cauchy quantile.
double cauchy_quantile(double p, double location, double scale);

}  // namespace bubblecast::stable

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace bubblecast::quad {

/// 16-point Gauss-Legendre rule on [a, b].
double gl16(const std::function<double(double)>& f, double a, double b);

/// Composite Gauss-Legendre over [a, b] with n_panels equal panels.
double composite(const std::function<double(double)>& f, double a, double b,
                 std::size_t n_panels);

/// Panel boundaries graded geometrically away from a center point, suited
/// to integrands with power-law decay. Covers [lo, hi]; `first_width`
/// controls resolution near the center, `ratio` the geometric growth.
std::vector<double> graded_panels(double lo, double hi, double center,
                                  double first_width, double ratio = 1.8);

/// Composite Gauss-Legendre over the panels given by `boundaries`
/// (ascending, at least two entries).
double over_panels(const std::function<double(double)>& f,
                   const std::vector<double>& boundaries);

}  // namespace bubblecast::quad

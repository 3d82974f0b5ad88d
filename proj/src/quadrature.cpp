#include "bubblecast/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bubblecast::quad {

namespace {

// Abscissae / weights for the 16-point Gauss-Legendre rule on [-1, 1],
// positive half; the rule is symmetric.
constexpr double GL16_X[8] = {
    0.0950125098376374401853, 0.2816035507792589132304,
    0.4580167776572273863424, 0.6178762444026437484467,
    0.7554044083550030338951, 0.8656312023878317438805,
    0.9445750230732325760780, 0.9894009349916499325962};
constexpr double GL16_W[8] = {
    0.1894506104550684962854, 0.1826034150449235888667,
    0.1691565193950025381893, 0.1495959888165767320815,
    0.1246289712555338720525, 0.0951585116824927848099,
    0.0622535239386478928628, 0.0271524594117540948518};

}  // namespace

double gl16(const std::function<double(double)>& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double dx = half * GL16_X[i];
        acc += GL16_W[i] * (f(mid - dx) + f(mid + dx));
    }
    return acc * half;
}

double composite(const std::function<double(double)>& f, double a, double b,
                 std::size_t n_panels) {
    if (n_panels == 0) throw std::invalid_argument("composite: n_panels == 0");
    double acc = 0.0;
    const double w = (b - a) / static_cast<double>(n_panels);
    for (std::size_t k = 0; k < n_panels; ++k) {
        const double lo = a + w * static_cast<double>(k);
        const double hi = (k + 1 == n_panels) ? b : lo + w;
        acc += gl16(f, lo, hi);
    }
    return acc;
}

std::vector<double> graded_panels(double lo, double hi, double center,
                                  double first_width, double ratio) {
    if (!(lo < hi)) throw std::invalid_argument("graded_panels: lo >= hi");
    if (!(first_width > 0.0) || !(ratio > 1.0))
        throw std::invalid_argument("graded_panels: bad grading parameters");
    const double c = std::clamp(center, lo, hi);
    std::vector<double> right;
    double x = c, w = first_width;
    while (x < hi) {
        x = std::min(hi, x + w);
        right.push_back(x);
        w *= ratio;
    }
    std::vector<double> left;
    x = c;
    w = first_width;
    while (x > lo) {
        x = std::max(lo, x - w);
        left.push_back(x);
        w *= ratio;
    }
    std::vector<double> out(left.rbegin(), left.rend());
    out.push_back(c);
    out.insert(out.end(), right.begin(), right.end());
    // degenerate ends (center on a boundary) leave duplicates; drop them
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double over_panels(const std::function<double(double)>& f,
                   const std::vector<double>& boundaries) {
    if (boundaries.size() < 2)
        throw std::invalid_argument("over_panels: need at least two boundaries");
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < boundaries.size(); ++k)
        acc += gl16(f, boundaries[k], boundaries[k + 1]);
    return acc;
}

}  // namespace bubblecast::quad

#include "bubblecast/marma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bubblecast/errors.hpp"

namespace bubblecast::marma {

namespace {

// Roots of 1 - c_1 z - ... - c_k z^k by Durand-Kerner iteration.
// Degrees here are tiny (<= 4 in the presets), so a fixed iteration budget
// with a convergence check is plenty.
std::vector<std::complex<double>> poly_roots(const std::vector<double>& c) {
    const std::size_t k = c.size();
    if (k == 0) return {};
    // monic form: z^k + a_{k-1} z^{k-1} + ... + a_0, from
    // -c_k z^k - ... - c_1 z + 1 = 0
    const double lead = -c[k - 1];
    if (lead == 0.0)
        return poly_roots(std::vector<double>(c.begin(), c.end() - 1));
    std::vector<std::complex<double>> a(k);  // a[i] coeff of z^i
    a[0] = std::complex<double>(1.0 / lead, 0.0);
    for (std::size_t i = 1; i < k; ++i) a[i] = -c[i - 1] / lead;

    auto eval = [&](std::complex<double> z) {
        std::complex<double> acc(1.0, 0.0);
        for (std::size_t i = k; i-- > 0;) acc = acc * z + a[i];
        return acc;
    };

    std::vector<std::complex<double>> r(k);
    for (std::size_t i = 0; i < k; ++i)
        r[i] = std::polar(1.4, 0.9 + 2.0 * 3.141592653589793 * i / k);
    for (int it = 0; it < 300; ++it) {
        double max_step = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            std::complex<double> denom(1.0, 0.0);
            for (std::size_t j = 0; j < k; ++j)
                if (j != i) denom *= (r[i] - r[j]);
            const std::complex<double> step = eval(r[i]) / denom;
            r[i] -= step;
            max_step = std::max(max_step, std::abs(step));
        }
        if (max_step < 1e-14) break;
    }
    return r;
}

PolynomialReport report_poly(const std::string& name,
                             const std::vector<double>& c) {
    PolynomialReport rep;
    rep.name = name;
    rep.coefficients = c;
    rep.roots = poly_roots(c);
    for (const auto& z : rep.roots) {
        rep.moduli.push_back(std::abs(z));
        if (!(std::abs(z) > 1.0 + 1e-8)) rep.roots_outside_unit_circle = false;
    }
    return rep;
}

bool shares_root(const PolynomialReport& a, const PolynomialReport& b) {
    for (const auto& za : a.roots)
        for (const auto& zb : b.roots)
            if (std::abs(za - zb) <= 1e-6) return true;
    return false;
}

}  // namespace

ValidityReport check_spec(const MarmaSpec& spec) {
    ValidityReport rep;
    rep.polynomials.push_back(report_poly("psi", spec.psi));
    rep.polynomials.push_back(report_poly("phi", spec.phi));
    rep.polynomials.push_back(report_poly("theta", spec.theta));
    rep.polynomials.push_back(report_poly("eta", spec.eta));
    for (const auto& p : rep.polynomials) {
        if (!p.roots_outside_unit_circle) {
            rep.stationary_ok = false;
            rep.messages.push_back(p.name +
                                   ": root with modulus <= 1 + 1e-8, no "
                                   "stationary solution");
        }
    }
    if (shares_root(rep.polynomials[0], rep.polynomials[2])) {
        rep.identification_ok = false;
        rep.messages.push_back("psi and theta share a root (common factor)");
    }
    if (shares_root(rep.polynomials[1], rep.polynomials[3])) {
        rep.identification_ok = false;
        rep.messages.push_back("phi and eta share a root (common factor)");
    }
    try {
        spec.noise.validate();
    } catch (const std::invalid_argument& e) {
        rep.stationary_ok = false;
        rep.messages.push_back(std::string("noise: ") + e.what());
    }
    return rep;
}

SimulatedPath simulate_marma(const MarmaSpec& spec, std::size_t n,
                             std::size_t burn_in, std::uint64_t seed) {
    const ValidityReport rep = check_spec(spec);
    if (!rep.valid()) {
        std::string msg = "simulate_marma: invalid specification";
        for (const auto& m : rep.messages) msg += "; " + m;
        throw std::invalid_argument(msg);
    }
    if (n < 1) throw std::invalid_argument("simulate_marma: n must be >= 1");
    if (burn_in < 500)
        throw std::invalid_argument("simulate_marma: burn_in must be >= 500");
    if (n > (std::numeric_limits<std::size_t>::max() - 2 * burn_in) / 2)
        throw std::invalid_argument("simulate_marma: n + 2*burn_in overflows");

    const std::size_t total = n + 2 * burn_in;
    const std::size_t p = spec.psi.size();
    const std::size_t q = spec.phi.size();
    const std::size_t r = spec.theta.size();
    const std::size_t s = spec.eta.size();

    // Innovations are pinned to absolute time indices t in
    // [-burn_in, n + burn_in); counter index = t + 2^32 (always positive)
    // keeps the mapping independent of burn_in so that doubling it re-uses
    // the same draws on the retained window.
    constexpr std::uint64_t TIME_OFFSET = 1ull << 32;
    std::vector<double> eps(total);
    for (std::size_t i = 0; i < total; ++i) {
        const std::uint64_t abs_index =
            TIME_OFFSET + i - burn_in;  // wraps consistently for i < burn_in
        eps[i] = stable::sample_stable_at(spec.noise, seed, abs_index);
    }

    // stage (i): eta_t = eta(B) eps_t, zero pre-sample history
    std::vector<double> bma(total);
    for (std::size_t t = 0; t < total; ++t) {
        double v = eps[t];
        for (std::size_t j = 0; j < s; ++j)
            if (t > j) v -= spec.eta[j] * eps[t - j - 1];
        bma[t] = v;
    }

    // stage (ii): psi(F) Z_t = theta(F) bma_t, run causally on the
    // time-reversed series then flipped back
    std::vector<double> z(total);
    for (std::size_t u = 0; u < total; ++u) {
        const std::size_t t = total - 1 - u;  // reversed index into bma
        double v = bma[t];
        for (std::size_t j = 0; j < r; ++j)
            if (u > j) v -= spec.theta[j] * bma[total - 1 - (u - j - 1)];
        for (std::size_t j = 0; j < p; ++j)
            if (u > j) v += spec.psi[j] * z[total - 1 - (u - j - 1)];
        z[total - 1 - u] = v;
    }

    // stage (iii): phi(B) X_t = Z_t
    std::vector<double> x(total);
    for (std::size_t t = 0; t < total; ++t) {
        double v = z[t];
        for (std::size_t j = 0; j < q; ++j)
            if (t > j) v += spec.phi[j] * x[t - j - 1];
        x[t] = v;
    }

    SimulatedPath path;
    path.values.assign(x.begin() + static_cast<std::ptrdiff_t>(burn_in),
                       x.begin() + static_cast<std::ptrdiff_t>(burn_in + n));
    path.spec = spec;
    path.seed = seed;
    path.burn_in = burn_in;
    return path;
}

std::vector<double> empirical_quantiles(const std::vector<double>& series,
                                        const std::vector<double>& probs) {
    if (series.empty())
        throw std::invalid_argument("empirical_quantiles: empty series");
    std::vector<double> sorted(series);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out;
    out.reserve(probs.size());
    const std::size_t n = sorted.size();
    for (double prob : probs) {
        if (!(prob > 0.0 && prob < 1.0))
            throw std::invalid_argument(
                "empirical_quantiles: probs must lie in (0,1)");
        const double h = (static_cast<double>(n) - 1.0) * prob;
        const std::size_t lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, n - 1);
        out.push_back(sorted[lo] + (h - std::floor(h)) * (sorted[hi] - sorted[lo]));
    }
    return out;
}

double empirical_quantile(const std::vector<double>& series, double prob) {
    return empirical_quantiles(series, {prob})[0];
}

std::vector<double> build_conditioning_grid(const std::vector<double>& series,
                                            std::size_t n_grid) {
    if (n_grid < 2)
        throw std::invalid_argument("build_conditioning_grid: n_grid must be >= 2");
    const auto q = empirical_quantiles(series, {0.01, 0.99});
    if (!(q[0] < q[1]))
        throw std::invalid_argument(
            "build_conditioning_grid: degenerate series (q01 == q99)");
    std::vector<double> grid(n_grid);
    const double step = (q[1] - q[0]) / static_cast<double>(n_grid - 1);
    for (std::size_t i = 0; i < n_grid; ++i)
        grid[i] = q[0] + step * static_cast<double>(i);
    grid.back() = q[1];
    return grid;
}

MarmaSpec preset(const std::string& name, double alpha) {
    MarmaSpec spec;
    spec.noise = stable::StableParams{alpha, 0.0, 0.5, 0.0};
    if (name == "MAR01") {
        spec.psi = {0.9};
    } else if (name == "MAR02") {
        spec.psi = {0.9, 0.7};
    } else if (name == "MAR11") {
        spec.psi = {0.9};
        spec.phi = {0.1};
    } else if (name == "MARMA1111") {
        // (1 + 0.3B) enters as -0.3 in the 1 - c z convention
        spec.psi = {0.9};
        spec.phi = {-0.3};
        spec.theta = {0.4};
        spec.eta = {-0.3};
    } else {
        throw config_error("unknown DGP preset: " + name);
    }
    return spec;
}

std::vector<std::string> preset_names() {
    return {"MAR01", "MAR02", "MAR11", "MARMA1111"};
}

}  // namespace bubblecast::marma

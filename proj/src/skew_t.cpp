#include "bubblecast/skew_t.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bubblecast/quadrature.hpp"
#include "bubblecast/rng.hpp"
#include "bubblecast/special_functions.hpp"

namespace bubblecast::skewt {

namespace {

constexpr double PI = 3.141592653589793238462643383279502884;
constexpr double LOG2 = 0.6931471805599453094172321214581765681;

// log(1 + z^2/nu) without overflowing z^2
double log1p_z2_over_nu(double z, double nu) {
    const double z2 = z * z;
    if (std::isinf(z2)) return 2.0 * std::log(std::fabs(z)) - std::log(nu);
    return std::log1p(z2 / nu);
}

}  // namespace

SkewedTParams::SkewedTParams(double mu_, double sigma_, double xi_, double nu_)
    : mu(mu_), sigma(sigma_), xi(xi_), nu(nu_) {
    if (!std::isfinite(mu) || !std::isfinite(xi))
        throw std::invalid_argument("SkewedTParams: mu, xi must be finite");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("SkewedTParams: sigma must be positive");
    if (!(nu > 0.0) || !std::isfinite(nu))
        throw std::invalid_argument("SkewedTParams: nu must be positive");
    sigma = std::max(sigma, SIGMA_FLOOR);
    nu = std::max(nu, NU_FLOOR);
}

void MixtureParams::validate() const {
    if (components.empty() || weights.size() != components.size())
        throw std::invalid_argument("MixtureParams: need K >= 1 aligned weights");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw std::invalid_argument("MixtureParams: weights must be >= 0");
        total += w;
    }
    if (std::fabs(total - 1.0) > 1e-8)
        throw std::invalid_argument("MixtureParams: weights must sum to 1");
}

double student_t_log_pdf(double z, double nu) {
    if (!(nu > 0.0))
        throw std::invalid_argument("student_t_pdf: nu must be positive");
    return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
           0.5 * std::log(nu * PI) - 0.5 * (nu + 1.0) * log1p_z2_over_nu(z, nu);
}

double student_t_pdf(double z, double nu) {
    return std::exp(student_t_log_pdf(z, nu));
}

double student_t_cdf(double z, double nu) {
    if (!(nu > 0.0))
        throw std::invalid_argument("student_t_cdf: nu must be positive");
    const double z2 = z * z;
    double x, xc;  // x = nu/(nu+z^2) with exact complement
    if (std::isinf(z2)) {
        x = 0.0;
        xc = 1.0;
    } else {
        x = nu / (nu + z2);
        xc = z2 / (nu + z2);
    }
    const double half_tail = 0.5 * sf::incbeta_reg2(0.5 * nu, 0.5, x, xc);
    return z <= 0.0 ? half_tail : 1.0 - half_tail;
}

double log_student_t_cdf(double z, double nu) {
    if (z >= 0.0) return std::log(student_t_cdf(z, nu));
    const double z2 = z * z;
    const double x = std::isinf(z2) ? 0.0 : nu / (nu + z2);
    const double a = 0.5 * nu;
    if (x > 0.0 && x < (a + 1.0) / (a + 2.5)) {
        // lower continued-fraction regime of I_x(a, 1/2): stay in log space
        return std::log(0.5) + sf::log_incbeta_lower(a, 0.5, x);
    }
    return std::log(student_t_cdf(z, nu));
}

double skewt_log_pdf(double y, const SkewedTParams& p) {
    const double z = (y - p.mu) / p.sigma;
    if (std::isinf(z)) return -std::numeric_limits<double>::infinity();
    if (std::isnan(z)) throw std::invalid_argument("skewt_log_pdf: NaN input");
    const double z2 = z * z;
    const double g =
        std::isinf(z2) ? std::sqrt(p.nu + 1.0) / std::fabs(z)
                       : std::sqrt((p.nu + 1.0) / (p.nu + z2));
    const double w = p.xi * z * g;
    return LOG2 - std::log(p.sigma) + student_t_log_pdf(z, p.nu) +
           log_student_t_cdf(w, p.nu + 1.0);
}

double skewt_pdf(double y, const SkewedTParams& p) {
    return std::exp(skewt_log_pdf(y, p));
}

SkewtLogPdfGrad skewt_log_pdf_grad(double y, const SkewedTParams& p) {
    const double nu = p.nu;
    const double z = (y - p.mu) / p.sigma;
    if (!std::isfinite(z)) {
        SkewtLogPdfGrad out{};
        out.log_pdf = -std::numeric_limits<double>::infinity();
        return out;
    }
    const double z2 = z * z;
    const double nz2 = nu + z2;
    const double g = std::sqrt((nu + 1.0) / nz2);
    const double w = p.xi * z * g;
    const double m = nu + 1.0;

    const double lt = student_t_log_pdf(z, nu);
    const double lT = log_student_t_cdf(w, m);
    // t(w; m) / T(w; m), stable into the deep tail
    const double ratio = std::exp(student_t_log_pdf(w, m) - lT);

    const double dlt_dz = -(nu + 1.0) * z / nz2;
    const double dw_dz = p.xi * g * nu / nz2;
    const double dlogf_dz = dlt_dz + ratio * dw_dz;

    SkewtLogPdfGrad out;
    out.log_pdf = LOG2 - std::log(p.sigma) + lt + lT;
    out.d_mu = -dlogf_dz / p.sigma;
    out.d_sigma = (-1.0 - z * dlogf_dz) / p.sigma;
    out.d_xi = ratio * z * g;

    const double dlt_dnu = 0.5 * (sf::digamma(0.5 * (nu + 1.0)) -
                                  sf::digamma(0.5 * nu)) -
                           0.5 / nu - 0.5 * log1p_z2_over_nu(z, nu) +
                           0.5 * (nu + 1.0) * z2 / (nu * nz2);
    const double dw_dnu = p.xi * z * 0.5 * g * (1.0 / (nu + 1.0) - 1.0 / nz2);
    // direct dof-dependence of the T factor: central difference, step 1e-4
    const double h = 1e-4;
    const double dlogT_dm =
        (std::exp(log_student_t_cdf(w, m + h) - lT) -
         std::exp(log_student_t_cdf(w, m - h) - lT)) /
        (2.0 * h);
    out.d_nu = dlt_dnu + ratio * dw_dnu + dlogT_dm;
    return out;
}

double mixture_pdf(const MixtureParams& m, double y) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m.components.size(); ++j)
        acc += m.weights[j] * skewt_pdf(y, m.components[j]);
    return acc;
}

double mixture_logpdf(const MixtureParams& m, double y) {
    // log-sum-exp over log(pi_j) + log f_j
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(m.components.size());
    for (std::size_t j = 0; j < m.components.size(); ++j) {
        const double lw = m.weights[j] > 0.0 ? std::log(m.weights[j]) : -1e308;
        terms[j] = lw + skewt_log_pdf(y, m.components[j]);
        best = std::max(best, terms[j]);
    }
    if (!std::isfinite(best)) return -std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - best);
    return best + std::log(acc);
}

// ---------------------------------------------------------------------------
// ComponentCdf: standardized-z CDF table for a (xi, nu) pair.

namespace {

double std_pdf(double z, double xi, double nu) {
    const double z2 = z * z;
    const double g = std::isinf(z2)
                         ? std::sqrt(nu + 1.0) / std::fabs(z)
                         : std::sqrt((nu + 1.0) / (nu + z2));
    return std::exp(student_t_log_pdf(z, nu) +
                    log_student_t_cdf(xi * z * g, nu + 1.0) + LOG2);
}

// Mass of the standardized skew-t beyond z_abs > 0 on the side where the
// effective shape is xi_eff. Two-term expansion: the modulation factor
// T(w(s); nu+1) tends to T(xi_eff sqrt(nu+1); nu+1) like 1/s^2, and the
// Student-t survival is exact, so the error is O(z^-4) relative.
double tail_mass(double z_abs, double xi_eff, double nu) {
    const double w_inf = xi_eff * std::sqrt(nu + 1.0);
    const double c = student_t_cdf(w_inf, nu + 1.0);
    const double survival = student_t_cdf(-z_abs, nu);
    const double log_cnu = std::lgamma(0.5 * (nu + 1.0)) -
                           std::lgamma(0.5 * nu) - 0.5 * std::log(nu * PI);
    const double correction =
        nu * w_inf * student_t_pdf(w_inf, nu + 1.0) *
        std::exp(log_cnu + 0.5 * (nu + 1.0) * std::log(nu) -
                 (nu + 2.0) * std::log(z_abs)) /
        (nu + 2.0);
    return std::max(0.0, 2.0 * c * survival - correction);
}

}  // namespace

ComponentCdf::ComponentCdf(double xi, double nu) : xi_(xi), nu_(nu) {
    double z_max = 50.0;
    if (nu > 2.0) z_max = 50.0 * std::max(1.0, std::sqrt(nu / (nu - 2.0)));
    z_max_ = std::min(z_max, 5000.0);

    std::vector<double> pos = {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0,
                               2.5,  3.0,  4.0, 5.0,  6.0, 8.0,  10.0, 13.0,
                               16.0, 20.0, 26.0, 32.0};
    // resolve the T-factor transition near z = 0 for strong skews
    if (std::fabs(xi_) > 3.0) {
        const double d = 3.0 * std::sqrt(nu_ / (nu_ + 1.0)) / std::fabs(xi_);
        for (double k : {0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0})
            pos.push_back(k * d);
    }
    double w = 32.0;
    while (w < z_max_) {
        w *= 1.6;
        pos.push_back(std::min(w, z_max_));
    }
    if (pos.back() < z_max_) pos.push_back(z_max_);
    std::sort(pos.begin(), pos.end());
    pos.erase(std::unique(pos.begin(), pos.end()), pos.end());

    bounds_.reserve(2 * pos.size() - 1);
    for (auto it = pos.rbegin(); it != pos.rend(); ++it)
        if (*it > 0.0) bounds_.push_back(-*it);
    bounds_.insert(bounds_.end(), pos.begin(), pos.end());

    cum_.resize(bounds_.size());
    cum_[0] = tail_mass(-bounds_[0], -xi_, nu_);
    auto f = [this](double z) { return std_pdf(z, xi_, nu_); };
    for (std::size_t i = 1; i < bounds_.size(); ++i)
        cum_[i] = cum_[i - 1] + quad::gl16(f, bounds_[i - 1], bounds_[i]);
}

double ComponentCdf::interior_cdf(double z) const {
    const auto it = std::upper_bound(bounds_.begin(), bounds_.end(), z);
    const std::size_t k = static_cast<std::size_t>(it - bounds_.begin()) - 1;
    auto f = [this](double s) { return std_pdf(s, xi_, nu_); };
    return cum_[k] + (z > bounds_[k] ? quad::gl16(f, bounds_[k], z) : 0.0);
}

double ComponentCdf::cdf_z(double z) const {
    if (std::isnan(z)) throw std::invalid_argument("ComponentCdf: NaN input");
    if (z <= bounds_.front()) return std::min(tail_mass(-z, -xi_, nu_), 1.0);
    if (z >= bounds_.back()) return 1.0 - std::min(tail_mass(z, xi_, nu_), 1.0);
    return std::clamp(interior_cdf(z), 0.0, 1.0);
}

double ComponentCdf::quantile_z(double p) const {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("quantile_z: p must lie in (0,1)");
    const double f_lo = cum_.front();
    const double f_hi = cum_.back();
    if (p < f_lo) {
        // invert the lower tail expansion by bisection in log|z|
        double la = std::log(-bounds_.front()), lb = std::log(1e300);
        for (int it = 0; it < 200; ++it) {
            const double lm = 0.5 * (la + lb);
            if (tail_mass(std::exp(lm), -xi_, nu_) > p)
                la = lm;
            else
                lb = lm;
        }
        return -std::exp(0.5 * (la + lb));
    }
    if (p > f_hi) {
        double la = std::log(bounds_.back()), lb = std::log(1e300);
        for (int it = 0; it < 200; ++it) {
            const double lm = 0.5 * (la + lb);
            if (tail_mass(std::exp(lm), xi_, nu_) > 1.0 - p)
                la = lm;
            else
                lb = lm;
        }
        return std::exp(0.5 * (la + lb));
    }
    // bracket from the boundary table, then bisect
    auto it = std::lower_bound(cum_.begin(), cum_.end(), p);
    std::size_t k = static_cast<std::size_t>(it - cum_.begin());
    k = std::min(std::max<std::size_t>(k, 1), cum_.size() - 1);
    double a = bounds_[k - 1], b = bounds_[k];
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (a + b);
        if (interior_cdf(mid) < p)
            a = mid;
        else
            b = mid;
        if (b - a < 1e-13 * std::max(1.0, std::fabs(a) + std::fabs(b))) break;
    }
    return 0.5 * (a + b);
}

double skewt_cdf(double y, const SkewedTParams& p) {
    const ComponentCdf cache(p.xi, p.nu);
    return cache.cdf_z((y - p.mu) / p.sigma);
}

double skewt_quantile(double prob, const SkewedTParams& p) {
    const ComponentCdf cache(p.xi, p.nu);
    return p.mu + p.sigma * cache.quantile_z(prob);
}

// ---------------------------------------------------------------------------
// MixtureDensity

MixtureDensity::MixtureDensity(MixtureParams params)
    : params_(std::move(params)) {
    params_.validate();
}

void MixtureDensity::ensure_caches() const {
    std::call_once(cache_once_, [this] {
        caches_.reserve(params_.components.size());
        for (const auto& c : params_.components)
            caches_.push_back(std::make_unique<ComponentCdf>(c.xi, c.nu));
    });
}

double MixtureDensity::pdf(double y) const { return mixture_pdf(params_, y); }

double MixtureDensity::log_pdf(double y) const {
    return mixture_logpdf(params_, y);
}

double MixtureDensity::cdf(double y) const {
    ensure_caches();
    double acc = 0.0;
    for (std::size_t j = 0; j < params_.components.size(); ++j) {
        const auto& c = params_.components[j];
        acc += params_.weights[j] * caches_[j]->cdf_z((y - c.mu) / c.sigma);
    }
    return std::clamp(acc, 0.0, 1.0);
}

double MixtureDensity::component_quantile(std::size_t j, double p) const {
    ensure_caches();
    const auto& c = params_.components[j];
    return c.mu + c.sigma * caches_[j]->quantile_z(p);
}

double MixtureDensity::quantile(double p) const {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("mixture quantile: p must lie in (0,1)");
    ensure_caches();
    // bracket guaranteed by component quantiles
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t j = 0; j < params_.components.size(); ++j) {
        if (params_.weights[j] <= 0.0) continue;
        const double q = component_quantile(j, p);
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    if (lo == hi) return lo;
    return invert_cdf(*this, p, lo, hi);
}

std::vector<double> MixtureDensity::sample(std::size_t n,
                                           std::uint64_t seed) const {
    ensure_caches();
    rng::Xoshiro256pp gen(seed);
    const std::size_t k = params_.weights.size();
    std::vector<double> cumw(k);
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        acc += params_.weights[j];
        cumw[j] = acc;
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = gen.uniform() * acc;
        const std::size_t j = static_cast<std::size_t>(
            std::lower_bound(cumw.begin(), cumw.end(), u) - cumw.begin());
        out[i] = component_quantile(std::min(j, k - 1), gen.uniform());
    }
    return out;
}

std::vector<double> MixtureDensity::quadrature_panels(double a,
                                                      double b) const {
    // one graded set per component so narrow separated modes are resolved
    std::vector<double> bounds;
    for (const auto& c : params_.components) {
        const auto part = quad::graded_panels(
            a, b, std::clamp(c.mu, a, b),
            std::max(0.25 * c.sigma, (b - a) * 1e-9), 1.7);
        bounds.insert(bounds.end(), part.begin(), part.end());
    }
    std::sort(bounds.begin(), bounds.end());
    bounds.erase(std::unique(bounds.begin(), bounds.end(),
                             [&](double u, double v) {
                                 return v - u < (b - a) * 1e-12;
                             }),
                 bounds.end());
    if (bounds.size() < 2) return {a, b};
    bounds.front() = a;
    bounds.back() = b;
    return bounds;
}

double MixtureDensity::support_lo() const {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& c : params_.components)
        lo = std::min(lo, c.mu - 20.0 * c.sigma);
    return lo;
}

double MixtureDensity::support_hi() const {
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& c : params_.components)
        hi = std::max(hi, c.mu + 20.0 * c.sigma);
    return hi;
}

double mixture_moment(const MixtureParams& m, int k, double p_lo, double p_hi) {
    MixtureDensity d(m);
    return d.moment(k, p_lo, p_hi);
}

}  // namespace bubblecast::skewt

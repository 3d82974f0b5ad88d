#include "bubblecast/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bubblecast/quadrature.hpp"
#include "bubblecast/rng.hpp"
#include "bubblecast/special_functions.hpp"
#include "bubblecast/stable.hpp"

namespace bubblecast::baselines {

namespace {

double robust_sigma(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto q = [&](double p) {
        const double h = (static_cast<double>(v.size()) - 1.0) * p;
        const std::size_t lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (h - std::floor(h)) * (v[hi] - v[lo]);
    };
    const double iqr = q(0.75) - q(0.25);
    return iqr > 0.0 ? iqr / 1.349 : 1.0;
}

/// Gaussian mixture over the training targets with per-point conditioning
/// weights; what nw_density returns.
class NwDensity : public PredictiveDensity {
public:
    NwDensity(std::vector<double> ys, std::vector<double> ws, double hy,
              bool fallback)
        : ys_(std::move(ys)), ws_(std::move(ws)), hy_(hy), fallback_(fallback) {
        // keep the kernels sorted by center for the pairwise window scans
        std::vector<std::size_t> order(ys_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return ys_[a] < ys_[b];
        });
        std::vector<double> ys2(ys_.size()), ws2(ws_.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            ys2[i] = ys_[order[i]];
            ws2[i] = ws_[order[i]];
        }
        ys_ = std::move(ys2);
        ws_ = std::move(ws2);
        y_lo_ = ys_.front();
        y_hi_ = ys_.back();
    }

    double pdf(double y) const override {
        double acc = 0.0;
        for (std::size_t i = 0; i < ys_.size(); ++i)
            acc += ws_[i] * sf::norm_pdf((y - ys_[i]) / hy_);
        return acc / hy_;
    }

    double cdf(double y) const override {
        double acc = 0.0;
        for (std::size_t i = 0; i < ys_.size(); ++i)
            acc += ws_[i] * sf::norm_cdf((y - ys_[i]) / hy_);
        return std::clamp(acc, 0.0, 1.0);
    }

    std::vector<double> sample(std::size_t n, std::uint64_t seed) const override {
        rng::Xoshiro256pp gen(seed);
        std::vector<double> cum(ws_.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < ws_.size(); ++i) {
            acc += ws_[i];
            cum[i] = acc;
        }
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = gen.uniform() * acc;
            std::size_t j = static_cast<std::size_t>(
                std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
            j = std::min(j, ws_.size() - 1);
            out[i] = ys_[j] + hy_ * gen.normal();
        }
        return out;
    }

    // truncated moments of the Gaussian mixture in closed form
    double moment(int k, double p_lo, double p_hi) const override {
        if (k < 1 || k > 4)
            throw std::invalid_argument("moment: order must lie in {1,2,3,4}");
        if (!(p_lo > 0.0 && p_lo < p_hi && p_hi < 1.0))
            throw std::invalid_argument("moment: need 0 < p_lo < p_hi < 1");
        const double a = quantile(p_lo);
        const double b = quantile(p_hi);
        double acc = 0.0;
        for (std::size_t i = 0; i < ys_.size(); ++i) {
            const double al = (a - ys_[i]) / hy_;
            const double be = (b - ys_[i]) / hy_;
            // J_m = int_al^be z^m phi(z) dz by the standard recursion
            double J[5];
            const double pa = sf::norm_pdf(al), pb = sf::norm_pdf(be);
            J[0] = sf::norm_cdf(be) - sf::norm_cdf(al);
            J[1] = pa - pb;
            J[2] = J[0] + al * pa - be * pb;
            J[3] = 2.0 * J[1] + al * al * pa - be * be * pb;
            J[4] = 3.0 * J[2] + al * al * al * pa - be * be * be * pb;
            static const double BINOM[5][5] = {{1, 0, 0, 0, 0},
                                               {1, 1, 0, 0, 0},
                                               {1, 2, 1, 0, 0},
                                               {1, 3, 3, 1, 0},
                                               {1, 4, 6, 4, 1}};
            double term = 0.0;
            for (int m = 0; m <= k; ++m)
                term += BINOM[k][m] * std::pow(ys_[i], k - m) *
                        std::pow(hy_, m) * J[m];
            acc += ws_[i] * term;
        }
        return acc;
    }

    // int p^2 over [a,b]: products of Gaussian kernels collapse to
    // phi_{sqrt(2) h}(Y_i - Y_j) times a truncated-normal mass
    double squared_density_mass(double a, double b) const override {
        if (!(a < b)) return 0.0;
        const double window = 14.0 * hy_;
        const double hprod = hy_ / 1.4142135623730951;
        double acc = 0.0;
        for (std::size_t i = 0; i < ys_.size(); ++i) {
            for (std::size_t j = i; j < ys_.size() && ys_[j] - ys_[i] <= window;
                 ++j) {
                const double m = 0.5 * (ys_[i] + ys_[j]);
                const double cross =
                    sf::norm_pdf((ys_[i] - ys_[j]) / (1.4142135623730951 * hy_)) /
                    (1.4142135623730951 * hy_);
                const double mass = sf::norm_cdf((b - m) / hprod) -
                                    sf::norm_cdf((a - m) / hprod);
                const double term = ws_[i] * ws_[j] * cross * mass;
                acc += (i == j) ? term : 2.0 * term;
            }
        }
        return acc;
    }

    double support_lo() const override { return y_lo_ - 12.0 * hy_; }
    double support_hi() const override { return y_hi_ + 12.0 * hy_; }
    bool used_fallback() const { return fallback_; }

private:
    std::vector<double> ys_, ws_;
    double hy_, y_lo_, y_hi_;
    bool fallback_;
};

}  // namespace

NwEstimator::NwEstimator(std::vector<double> x, std::vector<double> y,
                         double bandwidth_x, double bandwidth_y)
    : x_(std::move(x)), y_(std::move(y)) {
    if (x_.empty() || x_.size() != y_.size())
        throw std::invalid_argument("NwEstimator: empty or misaligned pairs");
    const double n_pow = std::pow(static_cast<double>(x_.size()), -0.2);
    hx_ = bandwidth_x > 0.0 ? bandwidth_x : 1.06 * robust_sigma(x_) * n_pow;
    hy_ = bandwidth_y > 0.0 ? bandwidth_y : 1.06 * robust_sigma(y_) * n_pow;
}

DensityPtr NwEstimator::density(double x) const {
    if (!std::isfinite(x))
        throw std::invalid_argument("nw_density: non-finite conditioning value");
    std::vector<double> a(x_.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
        const double u = (x - x_[i]) / hx_;
        a[i] = std::exp(-0.5 * u * u);
        denom += a[i];
    }
    std::vector<double> ys, ws;
    bool fallback = false;
    if (denom < 1e-300) {
        // conditioning point far outside the data: nearest-neighbour fallback
        fallback = true;
        const std::size_t k = std::min<std::size_t>(50, x_.size());
        std::vector<std::size_t> order(x_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::partial_sort(order.begin(), order.begin() + k, order.end(),
                          [&](std::size_t i, std::size_t j) {
                              return std::fabs(x - x_[i]) < std::fabs(x - x_[j]);
                          });
        for (std::size_t r = 0; r < k; ++r) {
            ys.push_back(y_[order[r]]);
            ws.push_back(1.0 / static_cast<double>(k));
        }
    } else {
        const double cutoff = denom * 1e-16;
        for (std::size_t i = 0; i < x_.size(); ++i) {
            if (a[i] > cutoff) {
                ys.push_back(y_[i]);
                ws.push_back(a[i] / denom);
            }
        }
    }
    return std::make_unique<NwDensity>(std::move(ys), std::move(ws), hy_,
                                       fallback);
}

// ---------------------------------------------------------------------------
// Cauchy MAR(0,1) oracle

namespace {

/// Closed-form conditional law with a cached panel CDF. The pdf decays like
/// y^-4, so the tail beyond the panel range uses the analytic A/(3y^3) mass.
class CauchyPredictive : public PredictiveDensity {
public:
    CauchyPredictive(double x_t, double psi_h, double s_h, double s_inf)
        : x_(x_t), psi_h_(psi_h), s_h_(s_h), s_inf_(s_inf) {
        denom_ = stable::cauchy_pdf(x_, 0.0, s_inf_);
        // far-tail coefficient of p(y) ~ A / y^4
        tail_a_ = s_h_ * s_inf_ /
                  (9.869604401089358 * psi_h_ * psi_h_ * denom_);

        const double mode2 = x_ / psi_h_;          // continuation center
        const double w2 = s_h_ / std::fabs(psi_h_);  // continuation width
        const double limit = std::fabs(mode2) + 100.0 * (w2 + s_inf_);
        auto around0 = quad::graded_panels(-limit, limit, 0.0,
                                           0.05 * s_inf_, 1.7);
        auto around2 = quad::graded_panels(-limit, limit, mode2, 0.05 * w2, 1.7);
        bounds_ = around0;
        bounds_.insert(bounds_.end(), around2.begin(), around2.end());
        std::sort(bounds_.begin(), bounds_.end());
        bounds_.erase(std::unique(bounds_.begin(), bounds_.end()),
                      bounds_.end());
        cum_.resize(bounds_.size());
        cum_[0] = tail_a_ / (3.0 * std::pow(limit, 3));
        for (std::size_t i = 1; i < bounds_.size(); ++i)
            cum_[i] = cum_[i - 1] +
                      quad::gl16([this](double y) { return pdf(y); },
                                 bounds_[i - 1], bounds_[i]);
    }

    double pdf(double y) const override {
        return stable::cauchy_pdf(x_, psi_h_ * y, s_h_) *
               stable::cauchy_pdf(y, 0.0, s_inf_) / denom_;
    }

    double cdf(double y) const override {
        if (y <= bounds_.front())
            return std::min(tail_a_ / (3.0 * std::pow(-y, 3)), 1.0);
        if (y >= bounds_.back())
            return 1.0 - std::min(tail_a_ / (3.0 * std::pow(y, 3)), 1.0);
        const auto it = std::upper_bound(bounds_.begin(), bounds_.end(), y);
        const std::size_t k = static_cast<std::size_t>(it - bounds_.begin()) - 1;
        double v = cum_[k];
        if (y > bounds_[k])
            v += quad::gl16([this](double s) { return pdf(s); }, bounds_[k], y);
        return std::clamp(v, 0.0, 1.0);
    }

    double quantile(double p) const override {
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("quantile: p must lie in (0,1)");
        if (p < cum_.front()) return -std::cbrt(tail_a_ / (3.0 * p));
        if (p > cum_.back()) return std::cbrt(tail_a_ / (3.0 * (1.0 - p)));
        return invert_cdf(*this, p, bounds_.front(), bounds_.back());
    }

    std::vector<double> quadrature_panels(double a, double b) const override {
        std::vector<double> out{a};
        for (double t : bounds_)
            if (t > a && t < b) out.push_back(t);
        out.push_back(b);
        return out;
    }

    double support_lo() const override { return bounds_.front(); }
    double support_hi() const override { return bounds_.back(); }

private:
    double x_, psi_h_, s_h_, s_inf_, denom_, tail_a_;
    std::vector<double> bounds_;
    std::vector<double> cum_;
};

}  // namespace

CauchyMar1Oracle::CauchyMar1Oracle(double psi, double sigma, std::size_t horizon)
    : psi_(psi), sigma_(sigma), h_(horizon) {
    if (!(std::fabs(psi) > 0.0 && std::fabs(psi) < 1.0))
        throw std::invalid_argument("CauchyMar1Oracle: need 0 < |psi| < 1");
    if (!(sigma > 0.0))
        throw std::invalid_argument("CauchyMar1Oracle: sigma must be positive");
    if (horizon < 1)
        throw std::invalid_argument("CauchyMar1Oracle: horizon must be >= 1");
    s_h_ = 0.0;
    double p = 1.0;
    for (std::size_t j = 0; j < h_; ++j) {
        s_h_ += sigma_ * p;
        p *= std::fabs(psi_);
    }
    s_inf_ = sigma_ / (1.0 - std::fabs(psi_));
    psi_h_ = std::pow(psi_, static_cast<double>(h_));
}

DensityPtr CauchyMar1Oracle::predictive(double x_t) const {
    if (!std::isfinite(x_t))
        throw std::invalid_argument("cauchy_predictive: non-finite x_t");
    return std::make_unique<CauchyPredictive>(x_t, psi_h_, s_h_, s_inf_);
}

double CauchyMar1Oracle::pdf(double y, double x_t) const {
    return stable::cauchy_pdf(x_t, psi_h_ * y, s_h_) *
           stable::cauchy_pdf(y, 0.0, s_inf_) /
           stable::cauchy_pdf(x_t, 0.0, s_inf_);
}

double CauchyMar1Oracle::moment(double x_t, int k, double p_lo,
                                double p_hi) const {
    if (k < 1 || k > 2)
        throw std::invalid_argument("oracle_moment: order must lie in {1,2}");
    return predictive(x_t)->moment(k, p_lo, p_hi);
}

}  // namespace bubblecast::baselines

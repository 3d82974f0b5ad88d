#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "bubblecast/special_functions.hpp"

namespace test_helpers {

/// One-sample Kolmogorov-Smirnov statistic against a CDF.
template <typename Cdf>
double ks_statistic(std::vector<double> sample, Cdf cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        const double fa = static_cast<double>(i) / static_cast<double>(a.size());
        const double fb = static_cast<double>(j) / static_cast<double>(b.size());
        d = std::max(d, std::fabs(fa - fb));
    }
    return d;
}

/// Chi-square upper tail probability with k degrees of freedom.
inline double chi2_sf(double x, double k) {
    return 1.0 - bubblecast::sf::gamma_p(0.5 * k, 0.5 * x);
}

/// Goodness-of-fit p-value of observed counts against expected counts.
inline double chi2_pvalue(const std::vector<double>& observed,
                          const std::vector<double>& expected) {
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double d = observed[i] - expected[i];
        stat += d * d / expected[i];
    }
    return chi2_sf(stat, static_cast<double>(observed.size() - 1));
}

inline double mean_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

inline double variance_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return acc / static_cast<double>(v.size() - 1);
}

inline double lag1_autocorrelation(const std::vector<double>& v) {
    const double m = mean_of(v);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        den += (v[i] - m) * (v[i] - m);
        if (i + 1 < v.size()) num += (v[i] - m) * (v[i + 1] - m);
    }
    return num / den;
}

/// One-sided paired z-test p-value for H1: mean(a - b) < 0.
inline double paired_z_pvalue_less(const std::vector<double>& a,
                                   const std::vector<double>& b) {
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    const double m = mean_of(d);
    const double se = std::sqrt(variance_of(d) / static_cast<double>(d.size()));
    return bubblecast::sf::norm_cdf(m / se);
}

}  // namespace test_helpers

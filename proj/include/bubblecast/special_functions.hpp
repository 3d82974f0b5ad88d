#pragma once

namespace bubblecast::sf {

/// Regularized incomplete beta function I_x(a, b), a,b > 0, x in [0,1].
/// Continued-fraction (modified Lentz) evaluation, absolute error near
/// machine precision for moderate a, b.
double incbeta_reg(double a, double b, double x);

/// Variant with an exactly computed complement xc = 1 - x; avoids the
/// cancellation in 1 - x when x is within a few ulps of 1 (e.g. the
/// Student-t CDF near zero, where x = nu/(nu + z^2)).
double incbeta_reg2(double a, double b, double x, double xc);

/// log I_x(a, b) for the lower-tail regime x < (a+1)/(a+b+2); stays finite
/// where I_x itself underflows.
double log_incbeta_lower(double a, double b, double x);

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double gamma_p(double a, double x);

/// Digamma function psi(x) for x > 0.
double digamma(double x);

/// Standard normal pdf / cdf / quantile. norm_ppf is accurate to full
/// double precision (rational approximation plus one Halley refinement).
double norm_pdf(double x);
double norm_cdf(double x);
double norm_ppf(double p);

}  // namespace bubblecast::sf

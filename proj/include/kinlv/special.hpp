#pragma once

namespace kinlv {

// Log of the Gamma function, Lanczos approximation (g = 7, 9 terms).
// Relative error below 1e-13 on the positive real axis.
double log_gamma(double x);

// Gamma function; overflows to +inf past x ~ 171.6.
double gamma_fn(double x);

// Regularized lower incomplete gamma P(a, x) and upper Q(a, x) = 1 - P(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Solves P(a, x) = p for x; p in (0, 1).
double inv_gamma_p(double a, double p);

// Standard normal CDF and its inverse (Acklam rational fit + one Halley step).
double normal_cdf(double z);
double inv_normal_cdf(double p);

}  // namespace kinlv

#pragma once

#include "kinlv/grid.hpp"
#include "kinlv/params.hpp"

namespace kinlv {

enum class DistFamily { Gamma, InverseGamma, LogNormal, Uniform, Gaussian };

// Closed-form distribution on the half-line (Gaussian kept for reference
// comparisons). Parameter meaning by family:
//   Gamma        a = shape, b = rate
//   InverseGamma a = shape, b = rate (density ~ x^{-(a+1)} e^{-b/x})
//   LogNormal    a = mu_log, b = sigma_log
//   Uniform      a = lower, b = upper
//   Gaussian     a = mean, b = standard deviation
struct AnalyticDist {
  DistFamily family;
  double a;
  double b;

  double mean() const;
  double variance() const;
  double cv() const;
  double pdf(double x) const;
  double cdf(double x) const;
  double quantile(double p) const;
  // Average density over [x0, x1] (exact, via CDF differences).
  double cell_average(double x0, double x1) const;
};

// Realizes a (mean, cv) pair in the requested shape family. cv = 0 is not
// representable here; callers special-case the degenerate point mass.
AnalyticDist shape_from_moments(DensityShape shape, double mean, double cv);

AnalyticDist make_gamma(double shape, double rate);
AnalyticDist make_inverse_gamma(double shape, double rate);

// Fills a mesh with exact cell averages of the distribution; mass beyond
// x_max is reported through *truncated_mass when non-null.
GridDensity discretize(const AnalyticDist& d, const Mesh1D& mesh,
                       double* truncated_mass = nullptr);

}  // namespace kinlv

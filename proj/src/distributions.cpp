#include "kinlv/distributions.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "kinlv/errors.hpp"
#include "kinlv/special.hpp"

namespace kinlv {

double GridDensity::mass() const {
  double acc = 0.0, comp = 0.0;
  for (double v : f) {
    const double y = v - comp;
    const double t = acc + y;
    comp = (t - acc) - y;
    acc = t;
  }
  return acc * mesh.dx();
}

double GridDensity::mean() const {
  // Exact first moment of the piecewise-constant density.
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += f[i] * mesh.center(i);
  return acc * mesh.dx() / mass();
}

double GridDensity::second_moment() const {
  // Exact second moment of the piecewise-constant density.
  double acc = 0.0;
  const double dx = mesh.dx();
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double c = mesh.center(i);
    acc += f[i] * (c * c + dx * dx / 12.0);
  }
  return acc * dx / mass();
}

double GridDensity::variance() const {
  const double m = mean();
  return second_moment() - m * m;
}

double AnalyticDist::mean() const {
  switch (family) {
    case DistFamily::Gamma: return a / b;
    case DistFamily::InverseGamma:
      return a > 1.0 ? b / (a - 1.0)
                     : std::numeric_limits<double>::infinity();
    case DistFamily::LogNormal: return std::exp(a + 0.5 * b * b);
    case DistFamily::Uniform: return 0.5 * (a + b);
    case DistFamily::Gaussian: return a;
  }
  return 0.0;
}

double AnalyticDist::variance() const {
  switch (family) {
    case DistFamily::Gamma: return a / (b * b);
    case DistFamily::InverseGamma:
      return a > 2.0 ? b * b / ((a - 1.0) * (a - 1.0) * (a - 2.0))
                     : std::numeric_limits<double>::infinity();
    case DistFamily::LogNormal: {
      const double m = mean();
      return (std::exp(b * b) - 1.0) * m * m;
    }
    case DistFamily::Uniform: return (b - a) * (b - a) / 12.0;
    case DistFamily::Gaussian: return b * b;
  }
  return 0.0;
}

double AnalyticDist::cv() const { return std::sqrt(variance()) / std::fabs(mean()); }

double AnalyticDist::pdf(double x) const {
  switch (family) {
    case DistFamily::Gamma:
      if (x <= 0.0) return 0.0;
      return std::exp(a * std::log(b) + (a - 1.0) * std::log(x) - b * x -
                      log_gamma(a));
    case DistFamily::InverseGamma:
      if (x <= 0.0) return 0.0;
      return std::exp(a * std::log(b) - (a + 1.0) * std::log(x) - b / x -
                      log_gamma(a));
    case DistFamily::LogNormal: {
      if (x <= 0.0) return 0.0;
      const double z = (std::log(x) - a) / b;
      return std::exp(-0.5 * z * z) /
             (x * b * std::sqrt(2.0 * std::numbers::pi));
    }
    case DistFamily::Uniform:
      return (x >= a && x <= b) ? 1.0 / (b - a) : 0.0;
    case DistFamily::Gaussian: {
      const double z = (x - a) / b;
      return std::exp(-0.5 * z * z) / (b * std::sqrt(2.0 * std::numbers::pi));
    }
  }
  return 0.0;
}

double AnalyticDist::cdf(double x) const {
  switch (family) {
    case DistFamily::Gamma:
      if (x <= 0.0) return 0.0;
      return gamma_p(a, b * x);
    case DistFamily::InverseGamma:
      if (x <= 0.0) return 0.0;
      return gamma_q(a, b / x);
    case DistFamily::LogNormal:
      if (x <= 0.0) return 0.0;
      return normal_cdf((std::log(x) - a) / b);
    case DistFamily::Uniform:
      if (x <= a) return 0.0;
      if (x >= b) return 1.0;
      return (x - a) / (b - a);
    case DistFamily::Gaussian:
      return normal_cdf((x - a) / b);
  }
  return 0.0;
}

double AnalyticDist::quantile(double p) const {
  switch (family) {
    case DistFamily::Gamma:
      return inv_gamma_p(a, p) / b;
    case DistFamily::InverseGamma: {
      // cdf = Q(a, b/x) = p  <=>  P(a, b/x) = 1 - p.
      const double y = inv_gamma_p(a, 1.0 - p);
      return y > 0.0 ? b / y : std::numeric_limits<double>::infinity();
    }
    case DistFamily::LogNormal:
      return std::exp(a + b * inv_normal_cdf(p));
    case DistFamily::Uniform:
      return a + p * (b - a);
    case DistFamily::Gaussian:
      return a + b * inv_normal_cdf(p);
  }
  return 0.0;
}

double AnalyticDist::cell_average(double x0, double x1) const {
  return (cdf(x1) - cdf(x0)) / (x1 - x0);
}

AnalyticDist shape_from_moments(DensityShape shape, double mean, double cv) {
  if (!(mean > 0.0) || !(cv > 0.0)) {
    throw KinlvError(ErrorCode::Validation,
                     "shape matching needs mean > 0 and cv > 0");
  }
  switch (shape) {
    case DensityShape::Gamma: {
      const double k = 1.0 / (cv * cv);
      return {DistFamily::Gamma, k, k / mean};
    }
    case DensityShape::LogNormal: {
      const double s2 = std::log1p(cv * cv);
      return {DistFamily::LogNormal, std::log(mean) - 0.5 * s2,
              std::sqrt(s2)};
    }
    case DensityShape::Uniform: {
      const double half = std::sqrt(3.0) * cv * mean;
      if (half > mean) {
        throw KinlvError(ErrorCode::Validation,
                         "uniform shape needs cv <= 1/sqrt(3)");
      }
      return {DistFamily::Uniform, mean - half, mean + half};
    }
  }
  throw KinlvError(ErrorCode::Validation, "unknown density shape");
}

AnalyticDist make_gamma(double shape, double rate) {
  return {DistFamily::Gamma, shape, rate};
}

AnalyticDist make_inverse_gamma(double shape, double rate) {
  return {DistFamily::InverseGamma, shape, rate};
}

GridDensity discretize(const AnalyticDist& d, const Mesh1D& mesh,
                       double* truncated_mass) {
  GridDensity out;
  out.mesh = mesh;
  out.f.resize(mesh.n_cells);
  double prev = d.cdf(0.0);
  for (std::size_t i = 0; i < mesh.n_cells; ++i) {
    const double next = d.cdf(mesh.right(i));
    out.f[i] = (next - prev) / mesh.dx();
    prev = next;
  }
  if (truncated_mass != nullptr) *truncated_mass = 1.0 - prev;
  return out;
}

}  // namespace kinlv

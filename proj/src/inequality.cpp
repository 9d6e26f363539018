#include "kinlv/inequality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "kinlv/errors.hpp"
#include "kinlv/rng.hpp"
#include "kinlv/special.hpp"

namespace kinlv {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;

struct SampleMoments {
  double mean;
  double var;  // 1/n normalization
};

SampleMoments sample_moments_of(std::span<const double> s) {
  if (s.empty()) throw KinlvError(ErrorCode::Validation, "empty sample");
  double mean = 0.0;
  for (double x : s) mean += x;
  mean /= static_cast<double>(s.size());
  double acc = 0.0;
  for (double x : s) {
    const double d = x - mean;
    acc += d * d;
  }
  return {mean, acc / static_cast<double>(s.size())};
}

// Gini of a sorted sample with nonnegative weights:
//   sum_i w_i x_i (2 C_i - w_i - W) / (W^2 mean),  C_i cumulative weight.
// Unit weights reduce to sum_{i<j} |x_i - x_j| / (n^2 mean).
double gini_sorted_weighted(const std::vector<double>& x,
                            const std::vector<double>& w) {
  const std::size_t n = x.size();
  double wsum = 0.0, mean_num = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    wsum += w[i];
    mean_num += w[i] * x[i];
  }
  if (wsum <= 0.0)
    throw KinlvError(ErrorCode::Validation, "gini: zero total weight");
  const double mean = mean_num / wsum;
  if (mean == 0.0)
    throw KinlvError(ErrorCode::Validation, "gini: zero mean");
  double cum = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cum += w[i];
    acc += w[i] * x[i] * (2.0 * cum - w[i] - wsum);
  }
  return acc / (wsum * wsum * std::fabs(mean));
}

}  // namespace

double cv_of(std::span<const double> sample) {
  const auto [mean, var] = sample_moments_of(sample);
  if (mean == 0.0)
    throw KinlvError(ErrorCode::Validation, "cv: zero mean");
  return std::sqrt(var) / std::fabs(mean);
}

double cv_of(const GridDensity& g) {
  const double m = g.mean();
  if (m == 0.0) throw KinlvError(ErrorCode::Validation, "cv: zero mean");
  return std::sqrt(std::max(0.0, g.variance())) / std::fabs(m);
}

double cv_of(const AnalyticDist& d) { return d.cv(); }

double gini_of(std::span<const double> sample) {
  std::vector<double> x(sample.begin(), sample.end());
  if (x.empty()) throw KinlvError(ErrorCode::Validation, "empty sample");
  std::sort(x.begin(), x.end());
  std::vector<double> w(x.size(), 1.0);
  return gini_sorted_weighted(x, w);
}

double gini_of(const GridDensity& g) {
  const auto& mesh = g.mesh;
  const double dx = mesh.dx();
  const double mass = g.mass();
  if (mass <= 0.0)
    throw KinlvError(ErrorCode::Validation, "gini: nonpositive mass");
  const double mean = g.mean();
  if (mean <= 0.0)
    throw KinlvError(ErrorCode::Validation, "gini: nonpositive mean");
  // 1 - (1/mean) int_0^xmax (1 - F)^2 dx with F piecewise linear; each cell
  // contributes (dx/3)(u_l^2 + u_l u_r + u_r^2) with u = 1 - F.
  double F = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < mesh.n_cells; ++i) {
    const double ul = 1.0 - F;
    F += g.f[i] * dx / mass;
    const double ur = 1.0 - F;
    acc += (dx / 3.0) * (ul * ul + ul * ur + ur * ur);
  }
  return 1.0 - acc / mean;
}

double gini_of(const AnalyticDist& d) {
  switch (d.family) {
    case DistFamily::Gamma:
      // shape k: Gamma(k + 1/2) / (sqrt(pi) Gamma(k + 1))
      return std::exp(log_gamma(d.a + 0.5) - log_gamma(d.a + 1.0)) / kSqrtPi;
    case DistFamily::InverseGamma:
      if (d.a <= 0.5)
        throw KinlvError(ErrorCode::Validation,
                         "gini: inverse-gamma shape must exceed 1/2");
      return std::exp(log_gamma(d.a - 0.5) - log_gamma(d.a)) / kSqrtPi;
    case DistFamily::LogNormal:
      return std::erf(d.b / 2.0);
    case DistFamily::Uniform:
      return (d.b - d.a) / (3.0 * (d.a + d.b));
    case DistFamily::Gaussian:
      // E|X-Y| = 2 sigma / sqrt(pi), so G = cv / sqrt(pi).
      return d.cv() / kSqrtPi;
  }
  throw KinlvError(ErrorCode::Validation, "gini: unknown family");
}

double gini_double_sum(const GridDensity& g) {
  const auto& mesh = g.mesh;
  const double dx = mesh.dx();
  const double mass = g.mass();
  const double mean = g.mean();
  if (mass <= 0.0 || mean <= 0.0)
    throw KinlvError(ErrorCode::Validation, "gini: nonpositive mass or mean");
  const std::size_t n = mesh.n_cells;
  std::vector<double> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = g.f[i] * dx / mass;
  // E|X - Y| with X, Y independent, each uniform within its cell:
  // cross cells |c_i - c_j| exactly; same cell dx/3.
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += m[i] * m[i] * (dx / 3.0);
    for (std::size_t j = i + 1; j < n; ++j) {
      acc += 2.0 * m[i] * m[j] * std::fabs(mesh.center(i) - mesh.center(j));
    }
  }
  return acc / (2.0 * mean);
}

double gini2_of(std::span<const double> sample) {
  if (sample.empty()) throw KinlvError(ErrorCode::Validation, "empty sample");
  // Independent route: sqrt( sum_{i,j} (x_i - x_j)^2 / (2 n^2) ) / mean via
  // raw moments in one pass.
  double s1 = 0.0, s2 = 0.0;
  for (double x : sample) {
    s1 += x;
    s2 += x * x;
  }
  const double n = static_cast<double>(sample.size());
  const double mean = s1 / n;
  if (mean == 0.0)
    throw KinlvError(ErrorCode::Validation, "gini2: zero mean");
  const double msq = std::max(0.0, s2 / n - mean * mean);
  return std::sqrt(msq) / std::fabs(mean);
}

double gini2_of(const GridDensity& g) {
  const auto& mesh = g.mesh;
  const double dx = mesh.dx();
  const double mass = g.mass();
  const double mean = g.mean();
  if (mass <= 0.0 || mean == 0.0)
    throw KinlvError(ErrorCode::Validation, "gini2: nonpositive mass or mean");
  const std::size_t n = mesh.n_cells;
  std::vector<double> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = g.f[i] * dx / mass;
  // E (X - Y)^2 = (c_i - c_j)^2 + dx^2/6 for every cell pair (the within-cell
  // uniform variances add), including i == j.
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = mesh.center(i) - mesh.center(j);
      acc += m[i] * m[j] * (d * d + dx * dx / 6.0);
    }
  }
  return std::sqrt(std::max(0.0, acc / 2.0)) / std::fabs(mean);
}

double gini2_of(const AnalyticDist& d) { return d.cv(); }

Bounds gautschi_bounds(double a, double cv) {
  if (a <= 2.0)
    throw KinlvError(ErrorCode::Validation,
                     "gautschi bounds need shape > 2");
  const double lo = cv * std::sqrt((a - 2.0) / a) / kSqrtPi;
  const double hi = cv * std::sqrt((a - 1.0) / a) / kSqrtPi;
  return {lo, hi};
}

double gini_bootstrap_se(std::span<const double> sample, int resamples,
                         std::uint64_t seed) {
  const std::size_t n = sample.size();
  if (n < 2 || resamples < 2)
    throw KinlvError(ErrorCode::Validation,
                     "bootstrap needs n >= 2 and resamples >= 2");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  Rng rng(seed);
  std::vector<double> w(n);
  std::vector<double> est(static_cast<std::size_t>(resamples));
  for (int b = 0; b < resamples; ++b) {
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) w[rng.uniform_index(n)] += 1.0;
    est[static_cast<std::size_t>(b)] = gini_sorted_weighted(x, w);
  }
  double mean = 0.0;
  for (double e : est) mean += e;
  mean /= static_cast<double>(resamples);
  double acc = 0.0;
  for (double e : est) {
    const double d = e - mean;
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(resamples - 1));
}

AnalyticDist quasi_eq_deposits(const ModelParams& p, double m_f, double m_g) {
  if (p.sigma_f <= 0.0 || m_f <= 0.0 || m_g <= 0.0)
    throw KinlvError(ErrorCode::Validation,
                     "quasi-equilibrium needs positive noise and means");
  const double shape = 2.0 * p.alpha * (p.chi + 1.0) * m_f / (p.sigma_f * m_g);
  const double rate =
      2.0 * (p.beta * m_g + p.alpha * p.chi) / (p.sigma_f * m_g);
  return make_gamma(shape, rate);
}

AnalyticDist quasi_eq_loans_half(const ModelParams& p, double m_f,
                                 double m_g) {
  if (p.sigma_g <= 0.0 || m_f <= 0.0 || m_g <= 0.0)
    throw KinlvError(ErrorCode::Validation,
                     "quasi-equilibrium needs positive noise and means");
  const double drift = p.gamma * (p.mu - m_f) + p.nu * p.theta;
  if (drift <= 0.0)
    throw KinlvError(ErrorCode::Validation,
                     "quasi-equilibrium loan drift must be positive");
  const double shape = 2.0 * p.nu * (p.theta + 1.0) * m_g / (p.sigma_g * m_f);
  const double rate = 2.0 * drift / (p.sigma_g * m_f);
  return make_gamma(shape, rate);
}

double pareto_index(const ModelParams& p, double m_f) {
  if (p.sigma_g <= 0.0 || m_f <= 0.0)
    throw KinlvError(ErrorCode::Validation,
                     "pareto index needs positive noise and mean");
  const double s = p.sigma_g * m_f;
  return (2.0 * p.gamma * (p.mu - 1.0) + 2.0 * p.theta * p.nu + s) / s + 1.0;
}

AnalyticDist quasi_eq_loans_one(const ModelParams& p, double m_f, double m_g) {
  if (m_g <= 0.0)
    throw KinlvError(ErrorCode::Validation,
                     "quasi-equilibrium needs positive means");
  const double idx = pareto_index(p, m_f);
  const double rate = 2.0 * p.nu * (p.theta + 1.0) * m_g / (p.sigma_g * m_f);
  return make_inverse_gamma(idx, rate);
}

double quasi_eq_cv_deposits(const ModelParams& p, double m_f, double m_g) {
  return std::sqrt(p.sigma_f * m_g / (2.0 * p.alpha * (p.chi + 1.0) * m_f));
}

double quasi_eq_cv_loans_half(const ModelParams& p, double m_f, double m_g) {
  return std::sqrt(p.sigma_g * m_f / (2.0 * p.nu * (p.theta + 1.0) * m_g));
}

double quasi_eq_cv_loans_one(const ModelParams& p, double m_f) {
  const double a = pareto_index(p, m_f);
  if (a <= 2.0) return std::numeric_limits<double>::infinity();
  return 1.0 / std::sqrt(a - 2.0);
}

SecondMomentCheck second_moment_condition(const ModelParams& p,
                                          double sup_m_f) {
  const double rhs = 2.0 * p.gamma * (p.mu - 1.0) + p.theta * p.nu;
  const double margin = rhs - p.sigma_g * sup_m_f;
  return {margin > 0.0, margin};
}

}  // namespace kinlv

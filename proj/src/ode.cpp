#include "kinlv/ode.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "kinlv/errors.hpp"

namespace kinlv {

// --- Dense solution ----------------------------------------------------------

void OdeSolution::push(double t, const double* y, const double* dy) {
  t_.push_back(t);
  y_.insert(y_.end(), y, y + dim_);
  dy_.insert(dy_.end(), dy, dy + dim_);
}

void OdeSolution::eval(double t, double* out) const {
  const std::size_t n = t_.size();
  if (t <= t_.front()) {
    std::copy(y_.begin(), y_.begin() + dim_, out);
    return;
  }
  if (t >= t_.back()) {
    std::copy(y_.end() - dim_, y_.end(), out);
    return;
  }
  const auto it = std::upper_bound(t_.begin(), t_.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - t_.begin());
  const std::size_t lo = hi - 1;
  const double h = t_[hi] - t_[lo];
  const double s = (t - t_[lo]) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double h10 = s3 - 2.0 * s2 + s;
  const double h01 = -2.0 * s3 + 3.0 * s2;
  const double h11 = s3 - s2;
  const double* y0 = &y_[lo * dim_];
  const double* y1 = &y_[hi * dim_];
  const double* d0 = &dy_[lo * dim_];
  const double* d1 = &dy_[hi * dim_];
  for (int k = 0; k < dim_; ++k) {
    out[k] = h00 * y0[k] + h * h10 * d0[k] + h01 * y1[k] + h * h11 * d1[k];
  }
  (void)n;
}

double OdeSolution::eval_component(double t, int k) const {
  // Same interpolant as eval(), single component.
  if (t <= t_.front()) return y_[k];
  if (t >= t_.back()) return y_[(t_.size() - 1) * dim_ + k];
  const auto it = std::upper_bound(t_.begin(), t_.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - t_.begin());
  const std::size_t lo = hi - 1;
  const double h = t_[hi] - t_[lo];
  const double s = (t - t_[lo]) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double y0 = y_[lo * dim_ + k];
  const double y1 = y_[hi * dim_ + k];
  const double d0 = dy_[lo * dim_ + k];
  const double d1 = dy_[hi * dim_ + k];
  return (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + h * (s3 - 2.0 * s2 + s) * d0 +
         (-2.0 * s3 + 3.0 * s2) * y1 + h * (s3 - s2) * d1;
}

// --- Integrator --------------------------------------------------------------

namespace {

bool signs_ok(const std::vector<double>& y,
              const std::vector<StateSign>& signs) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i])) return false;
    switch (signs[i]) {
      case StateSign::Positive:
        if (y[i] <= 0.0) return false;
        break;
      case StateSign::NonNegative:
        if (y[i] < 0.0) return false;
        break;
      case StateSign::Free:
        break;
    }
  }
  return true;
}

OdeSolution integrate_rk4(const OdeRhs& f, const std::vector<double>& y0,
                          double t0, double t1, const OdeConfig& cfg,
                          const std::vector<StateSign>& signs) {
  const int dim = static_cast<int>(y0.size());
  OdeSolution sol(dim);
  const double span = t1 - t0;
  const std::size_t n = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(span / cfg.dt)));
  const double h = span / static_cast<double>(n);
  std::vector<double> y = y0, k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim),
                      ynew(dim);
  f(t0, y.data(), k1.data());
  sol.push(t0, y.data(), k1.data());
  double t = t0;
  for (std::size_t i = 0; i < n; ++i) {
    f(t, y.data(), k1.data());
    for (int j = 0; j < dim; ++j) tmp[j] = y[j] + 0.5 * h * k1[j];
    f(t + 0.5 * h, tmp.data(), k2.data());
    for (int j = 0; j < dim; ++j) tmp[j] = y[j] + 0.5 * h * k2[j];
    f(t + 0.5 * h, tmp.data(), k3.data());
    for (int j = 0; j < dim; ++j) tmp[j] = y[j] + h * k3[j];
    f(t + h, tmp.data(), k4.data());
    for (int j = 0; j < dim; ++j) {
      ynew[j] = y[j] + (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
    if (!signs_ok(ynew, signs)) {
      throw KinlvError(ErrorCode::Numerical,
                       "fixed-step integration violated a sign constraint");
    }
    y = ynew;
    t = t0 + static_cast<double>(i + 1) * h;
    f(t, y.data(), k1.data());
    sol.push(t, y.data(), k1.data());
  }
  return sol;
}

// Dormand-Prince 5(4) tableau.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
constexpr double kB5[7] = {35.0 / 384,      0.0,  500.0 / 1113, 125.0 / 192,
                           -2187.0 / 6784, 11.0 / 84, 0.0};
constexpr double kB4[7] = {5179.0 / 57600,    0.0,        7571.0 / 16695,
                           393.0 / 640,       -92097.0 / 339200,
                           187.0 / 2100,      1.0 / 40};

OdeSolution integrate_rk45(const OdeRhs& f, const std::vector<double>& y0,
                           double t0, double t1, const OdeConfig& cfg,
                           const std::vector<StateSign>& signs) {
  const int dim = static_cast<int>(y0.size());
  OdeSolution sol(dim);
  std::vector<double> y = y0, ynew(dim), err(dim), tmp(dim);
  std::vector<std::vector<double>> k(7, std::vector<double>(dim));

  const double span = t1 - t0;
  const double h_floor = 1e-14 * span;
  double h = span / 1000.0;
  if (cfg.max_step > 0.0) h = std::min(h, cfg.max_step);

  f(t0, y.data(), k[0].data());
  sol.push(t0, y.data(), k[0].data());
  double t = t0;
  bool fsal_valid = true;

  while (t < t1) {
    if (h < h_floor) {
      throw KinlvError(ErrorCode::Numerical, "adaptive step underflow");
    }
    if (t + h > t1) h = t1 - t;
    if (!fsal_valid) f(t, y.data(), k[0].data());
    for (int s = 1; s < 7; ++s) {
      for (int j = 0; j < dim; ++j) {
        double acc = 0.0;
        for (int q = 0; q < s; ++q) acc += kA[s][q] * k[q][j];
        tmp[j] = y[j] + h * acc;
      }
      f(t + kC[s] * h, tmp.data(), k[s].data());
    }
    double err_norm = 0.0;
    for (int j = 0; j < dim; ++j) {
      double acc5 = 0.0, acc4 = 0.0;
      for (int s = 0; s < 7; ++s) {
        acc5 += kB5[s] * k[s][j];
        acc4 += kB4[s] * k[s][j];
      }
      ynew[j] = y[j] + h * acc5;
      err[j] = h * (acc5 - acc4);
      const double sc =
          cfg.atol + cfg.rtol * std::max(std::fabs(y[j]), std::fabs(ynew[j]));
      const double r = err[j] / sc;
      err_norm += r * r;
    }
    err_norm = std::sqrt(err_norm / dim);

    if (err_norm <= 1.0 && signs_ok(ynew, signs)) {
      t += h;
      y = ynew;
      k[0] = k[6];  // FSAL
      fsal_valid = true;
      sol.push(t, y.data(), k[0].data());
      double grow = 0.9 * std::pow(std::max(err_norm, 1e-12), -0.2);
      h *= std::clamp(grow, 0.2, 5.0);
      if (cfg.max_step > 0.0) h = std::min(h, cfg.max_step);
    } else if (err_norm > 1.0) {
      h *= std::clamp(0.9 * std::pow(err_norm, -0.2), 0.1, 0.9);
      fsal_valid = false;
    } else {
      // Error passed but a sign constraint failed: halve.
      h *= 0.5;
      fsal_valid = false;
    }
  }
  return sol;
}

}  // namespace

OdeSolution integrate(const OdeRhs& f, const std::vector<double>& y0,
                      double t0, double t1, const OdeConfig& cfg,
                      const std::vector<StateSign>& signs) {
  if (!(t1 > t0)) {
    throw KinlvError(ErrorCode::Validation, "t_end must exceed t_start");
  }
  if (cfg.method == OdeMethod::Rk4Fixed) {
    return integrate_rk4(f, y0, t0, t1, cfg, signs);
  }
  return integrate_rk45(f, y0, t0, t1, cfg, signs);
}

// --- Mean system -------------------------------------------------------------

std::array<double, 2> lv_rhs(const ModelParams& p, double m_f, double m_g) {
  return {p.alpha * m_f - p.beta * m_f * m_g,
          -(p.gamma * p.mu - p.nu) * m_g + p.gamma * m_f * m_g};
}

double lv_invariant(const ModelParams& p, double m_f, double m_g) {
  return p.gamma * m_f - p.delta() * std::log(m_f) + p.beta * m_g -
         p.alpha * std::log(m_g);
}

double MeanSeries::sup_m_f(int samples_per_unit) const {
  const double t0 = sol_.t_front();
  const double t1 = sol_.t_back();
  const std::size_t n = std::max<std::size_t>(
      2, static_cast<std::size_t>((t1 - t0) * samples_per_unit));
  double best = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = t0 + (t1 - t0) * static_cast<double>(i) / n;
    best = std::max(best, sol_.eval_component(t, 0));
  }
  return best;
}

MeanSeries integrate_means(const ModelParams& p, double m_f0, double m_g0,
                           double t_end, OdeConfig cfg) {
  if (cfg.method == OdeMethod::Rk45Adaptive && cfg.max_step == 0.0) {
    // Keeps the Hermite dense output accurate for downstream quadrature.
    cfg.max_step = 0.05;
  }
  auto rhs = [&p](double, const double* y, double* dy) {
    const auto d = lv_rhs(p, y[0], y[1]);
    dy[0] = d[0];
    dy[1] = d[1];
  };
  auto sol = integrate(rhs, {m_f0, m_g0}, 0.0, t_end, cfg,
                       {StateSign::Positive, StateSign::Positive});
  return MeanSeries(std::move(sol));
}

// --- Variance and CV right-hand sides ----------------------------------------

std::array<double, 2> variance_rhs_p12(const ModelParams& p, double m_f,
                                       double m_g, double v_f, double v_g) {
  const double dvf =
      -2.0 * (p.beta * m_g + p.alpha * p.chi) * v_f + p.sigma_f * m_f * m_g;
  const double dvg =
      -2.0 * (p.gamma * (p.mu - m_f) + p.nu * p.theta) * v_g +
      p.sigma_g * m_f * m_g;
  return {dvf, dvg};
}

std::array<double, 2> variance_rhs_mixed(const ModelParams& p, double m_f,
                                         double m_g, double v_f, double v_g,
                                         bool sigma_override) {
  const double dvf =
      -2.0 * (p.beta * m_g + p.alpha * p.chi) * v_f + p.sigma_f * m_f * m_g;
  const double sig = sigma_override ? p.sigma_g : p.sigma_f;
  const double dvg =
      -2.0 * (p.gamma * (p.mu - (1.0 - sig / (2.0 * p.gamma)) * m_f) +
              p.nu * p.theta) *
          v_g +
      p.sigma_g * m_f * m_g * m_g;
  return {dvf, dvg};
}

std::array<double, 2> cv_sq_rhs_p12(const ModelParams& p, double m_f,
                                    double m_g, double u_f, double u_g) {
  return {-2.0 * p.alpha * (p.chi + 1.0) * u_f + p.sigma_f * m_g / m_f,
          -2.0 * p.nu * (p.theta + 1.0) * u_g + p.sigma_g * m_f / m_g};
}

std::array<double, 2> cv_sq_rhs_mixed(const ModelParams& p, double m_f,
                                      double m_g, double u_f, double u_g) {
  return {-2.0 * p.alpha * (p.chi + 1.0) * u_f + p.sigma_f * m_g / m_f,
          -(2.0 * p.nu * (p.theta + 1.0) + p.sigma_g * m_f) * u_g +
              p.sigma_g * m_f};
}

std::array<double, 2> cv_rhs_p12(const ModelParams& p, double m_f, double m_g,
                                 double c_f, double c_g) {
  return {-p.alpha * (p.chi + 1.0) * c_f +
              0.5 * p.sigma_f * (m_g / m_f) / c_f,
          -p.nu * (p.theta + 1.0) * c_g + 0.5 * p.sigma_g * (m_f / m_g) / c_g};
}

std::array<double, 2> cv_rhs_mixed(const ModelParams& p, double m_f,
                                   double m_g, double c_f, double c_g) {
  return {-p.alpha * (p.chi + 1.0) * c_f +
              0.5 * p.sigma_f * (m_g / m_f) / c_f,
          -(p.nu * (p.theta + 1.0) + 0.5 * p.sigma_g * m_f) * c_g +
              0.5 * p.sigma_g * m_f / c_g};
}

// --- Coupled moment integrations ----------------------------------------------

namespace {

std::vector<MomentPoint> sample_moments(const OdeSolution& sol,
                                        const std::vector<double>& out_times,
                                        bool state_is_cv_sq) {
  std::vector<MomentPoint> out;
  out.reserve(out_times.size());
  double y[4];
  for (double t : out_times) {
    sol.eval(t, y);
    MomentPoint mp{};
    mp.t = t;
    mp.m_f = y[0];
    mp.m_g = y[1];
    if (state_is_cv_sq) {
      const double uf = std::max(y[2], 0.0);
      const double ug = std::max(y[3], 0.0);
      mp.c_f = std::sqrt(uf);
      mp.c_g = std::sqrt(ug);
      mp.v_f = uf * y[0] * y[0];
      mp.v_g = ug * y[1] * y[1];
    } else {
      const double vf = std::max(y[2], 0.0);
      const double vg = std::max(y[3], 0.0);
      mp.v_f = vf;
      mp.v_g = vg;
      mp.c_f = std::sqrt(vf) / y[0];
      mp.c_g = std::sqrt(vg) / y[1];
    }
    out.push_back(mp);
  }
  return out;
}

}  // namespace

std::vector<MomentPoint> integrate_means_variances(
    const ModelParams& p, const InitialConditions& ic, double t_end,
    const std::vector<double>& out_times, RiskRegime regime,
    bool sigma_override, OdeConfig cfg) {
  auto rhs = [&p, regime, sigma_override](double, const double* y,
                                          double* dy) {
    const auto dm = lv_rhs(p, y[0], y[1]);
    const auto dv = (regime == RiskRegime::HalfHalf)
                        ? variance_rhs_p12(p, y[0], y[1], y[2], y[3])
                        : variance_rhs_mixed(p, y[0], y[1], y[2], y[3],
                                             sigma_override);
    dy[0] = dm[0];
    dy[1] = dm[1];
    dy[2] = dv[0];
    dy[3] = dv[1];
  };
  const double v_f0 = ic.c_f0 * ic.c_f0 * ic.m_f0 * ic.m_f0;
  const double v_g0 = ic.c_g0 * ic.c_g0 * ic.m_g0 * ic.m_g0;
  auto sol = integrate(rhs, {ic.m_f0, ic.m_g0, v_f0, v_g0}, 0.0, t_end, cfg,
                       {StateSign::Positive, StateSign::Positive,
                        StateSign::NonNegative, StateSign::NonNegative});
  return sample_moments(sol, out_times, false);
}

std::vector<MomentPoint> integrate_means_cv(const ModelParams& p,
                                            const InitialConditions& ic,
                                            double t_end,
                                            const std::vector<double>& out_times,
                                            RiskRegime regime, OdeConfig cfg) {
  auto rhs = [&p, regime](double, const double* y, double* dy) {
    const auto dm = lv_rhs(p, y[0], y[1]);
    const auto du = (regime == RiskRegime::HalfHalf)
                        ? cv_sq_rhs_p12(p, y[0], y[1], y[2], y[3])
                        : cv_sq_rhs_mixed(p, y[0], y[1], y[2], y[3]);
    dy[0] = dm[0];
    dy[1] = dm[1];
    dy[2] = du[0];
    dy[3] = du[1];
  };
  const double u_f0 = ic.c_f0 * ic.c_f0;
  const double u_g0 = ic.c_g0 * ic.c_g0;
  auto sol = integrate(rhs, {ic.m_f0, ic.m_g0, u_f0, u_g0}, 0.0, t_end, cfg,
                       {StateSign::Positive, StateSign::Positive,
                        StateSign::NonNegative, StateSign::NonNegative});
  return sample_moments(sol, out_times, true);
}

// --- Closed-form CV ------------------------------------------------------------

namespace {

// int_0^t ratio(s) exp(-2 a (t - s)) ds by composite Simpson, refined until
// the relative change drops below 1e-9.
double damped_ratio_integral(const MeanSeries& means, bool g_over_f, double a,
                             double t) {
  if (t <= 0.0) return 0.0;
  auto g = [&](double s) {
    const double ratio =
        g_over_f ? means.ratio_g_over_f(s) : means.ratio_f_over_g(s);
    return ratio * std::exp(-2.0 * a * (t - s));
  };
  double prev = 0.0;
  for (std::size_t n = 64; n <= (1u << 22); n *= 2) {
    const double h = t / static_cast<double>(n);
    double acc = g(0.0) + g(t);
    double odd = 0.0, even = 0.0;
    for (std::size_t i = 1; i < n; i += 2) odd += g(h * static_cast<double>(i));
    for (std::size_t i = 2; i < n; i += 2) {
      even += g(h * static_cast<double>(i));
    }
    const double cur = (acc + 4.0 * odd + 2.0 * even) * h / 3.0;
    if (n > 64 && std::fabs(cur - prev) <= 1e-9 * std::fabs(cur) + 1e-300) {
      return cur;
    }
    prev = cur;
  }
  return prev;
}

}  // namespace

std::array<double, 2> cv_closed_form_p12(const ModelParams& p,
                                         const MeanSeries& means, double c_f0,
                                         double c_g0, double t) {
  const double a_f = p.alpha * (p.chi + 1.0);
  const double a_g = p.nu * (p.theta + 1.0);
  const double If = damped_ratio_integral(means, true, a_f, t);
  const double Ig = damped_ratio_integral(means, false, a_g, t);
  const double uf = c_f0 * c_f0 * std::exp(-2.0 * a_f * t) + p.sigma_f * If;
  const double ug = c_g0 * c_g0 * std::exp(-2.0 * a_g * t) + p.sigma_g * Ig;
  return {std::sqrt(std::max(uf, 0.0)), std::sqrt(std::max(ug, 0.0))};
}

// --- Long-time band --------------------------------------------------------------

CvBand cv_longtime_band(const ModelParams& p, const MeanSeries& means) {
  const double m_star = p.fixed_point_f();
  const double t0 = 0.0;
  const double t1 = means.t_end();

  // Upward crossings of m_f through the fixed-point level.
  std::vector<double> crossings;
  const double scan_dt = 1e-3;
  double prev_t = t0;
  double prev_v = means.m_f(prev_t) - m_star;
  for (double t = t0 + scan_dt; t <= t1; t += scan_dt) {
    const double v = means.m_f(t) - m_star;
    if (prev_v < 0.0 && v >= 0.0) {
      double lo = prev_t, hi = t;
      for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (means.m_f(mid) - m_star < 0.0) lo = mid; else hi = mid;
      }
      crossings.push_back(0.5 * (lo + hi));
    }
    prev_t = t;
    prev_v = v;
  }
  if (crossings.size() < 2) {
    throw KinlvError(ErrorCode::Numerical,
                     "mean series does not cover a full oscillation period");
  }
  const double ta = crossings[0];
  const double tb = crossings[1];

  CvBand band{};
  band.period = tb - ta;
  band.ratio_gf_min = band.ratio_fg_min = 1e300;
  band.ratio_gf_max = band.ratio_fg_max = -1e300;
  const int n = 20000;
  for (int i = 0; i <= n; ++i) {
    const double t = ta + (tb - ta) * static_cast<double>(i) / n;
    const double rgf = means.ratio_g_over_f(t);
    const double rfg = means.ratio_f_over_g(t);
    band.ratio_gf_min = std::min(band.ratio_gf_min, rgf);
    band.ratio_gf_max = std::max(band.ratio_gf_max, rgf);
    band.ratio_fg_min = std::min(band.ratio_fg_min, rfg);
    band.ratio_fg_max = std::max(band.ratio_fg_max, rfg);
  }
  const double a_f = p.alpha * (p.chi + 1.0);
  const double a_g = p.nu * (p.theta + 1.0);
  band.f_lo = std::sqrt(p.sigma_f * band.ratio_gf_min / (2.0 * a_f));
  band.f_hi = std::sqrt(p.sigma_f * band.ratio_gf_max / (2.0 * a_f));
  band.g_lo = std::sqrt(p.sigma_g * band.ratio_fg_min / (2.0 * a_g));
  band.g_hi = std::sqrt(p.sigma_g * band.ratio_fg_max / (2.0 * a_g));
  return band;
}

// --- Wealth example ----------------------------------------------------------------

double wealth_mean(double m, double m_h0, double t) {
  return m + (m_h0 - m) * std::exp(-t);
}

double wealth_cv_sq_rhs(double sigma, double m, double m_h, double u) {
  const double pump = 2.0 * m / m_h;
  return -(pump - sigma) * u + pump;
}

double wealth_cv_explicit(double sigma, double c_h0, double t) {
  const double limit = 2.0 / (2.0 - sigma);
  const double u =
      limit + (c_h0 * c_h0 - limit) * std::exp(-(2.0 - sigma) * t);
  return std::sqrt(std::max(u, 0.0));
}

double wealth_cv_limit(double sigma) { return std::sqrt(2.0 / (2.0 - sigma)); }

std::vector<std::array<double, 2>> integrate_wealth_cv(
    double sigma, double m, double m_h0, double c_h0,
    const std::vector<double>& out_times, OdeConfig cfg) {
  if (!(sigma < 2.0)) {
    throw KinlvError(ErrorCode::Validation,
                     "wealth noise sigma must stay below 2");
  }
  auto rhs = [sigma, m, m_h0](double t, const double* y, double* dy) {
    dy[0] = wealth_cv_sq_rhs(sigma, m, wealth_mean(m, m_h0, t), y[0]);
  };
  double t_end = 0.0;
  for (double t : out_times) t_end = std::max(t_end, t);
  if (t_end <= 0.0) t_end = 1.0;
  auto sol = integrate(rhs, {c_h0 * c_h0}, 0.0, t_end, cfg,
                       {StateSign::NonNegative});
  std::vector<std::array<double, 2>> out;
  out.reserve(out_times.size());
  for (double t : out_times) {
    double u;
    sol.eval(t, &u);
    out.push_back({t, std::sqrt(std::max(u, 0.0))});
  }
  return out;
}

}  // namespace kinlv

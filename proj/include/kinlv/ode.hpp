#pragma once

#include <array>
#include <functional>
#include <vector>

#include "kinlv/params.hpp"

namespace kinlv {

enum class OdeMethod { Rk4Fixed, Rk45Adaptive };

// Positivity class enforced per state component on accepted steps.
enum class StateSign { Positive, NonNegative, Free };

struct OdeConfig {
  OdeMethod method = OdeMethod::Rk45Adaptive;
  double rtol = 1e-9;
  double atol = 1e-11;
  double dt = 1e-3;        // fixed-step size (Rk4Fixed)
  double max_step = 0.0;   // 0 -> unlimited (Rk45Adaptive)
};

using OdeRhs =
    std::function<void(double t, const double* y, double* dy)>;

// Accepted-step trajectory with cubic Hermite dense evaluation.
class OdeSolution {
 public:
  OdeSolution(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return t_.size(); }
  double t_front() const { return t_.front(); }
  double t_back() const { return t_.back(); }
  double t_at(std::size_t i) const { return t_[i]; }
  const double* y_at(std::size_t i) const { return &y_[i * dim_]; }

  void push(double t, const double* y, const double* dy);
  void eval(double t, double* out) const;
  double eval_component(double t, int k) const;

 private:
  int dim_;
  std::vector<double> t_;
  std::vector<double> y_;
  std::vector<double> dy_;
};

// Integrates y' = f(t, y); throws KinlvError(Numerical) on step underflow
// (adaptive) or unrecoverable sign violations.
OdeSolution integrate(const OdeRhs& f, const std::vector<double>& y0,
                      double t0, double t1, const OdeConfig& cfg,
                      const std::vector<StateSign>& signs);

// --- Mean (predator-prey) system -------------------------------------------

// d m_f/dt =  alpha m_f - beta m_f m_g
// d m_g/dt = -(gamma mu - nu) m_g + gamma m_f m_g
std::array<double, 2> lv_rhs(const ModelParams& p, double m_f, double m_g);

// First integral H = gamma m_f - delta ln m_f + beta m_g - alpha ln m_g,
// constant along mean orbits and minimal at the fixed point.
double lv_invariant(const ModelParams& p, double m_f, double m_g);

class MeanSeries {
 public:
  MeanSeries(OdeSolution sol) : sol_(std::move(sol)) {}

  double t_end() const { return sol_.t_back(); }
  double m_f(double t) const { return sol_.eval_component(t, 0); }
  double m_g(double t) const { return sol_.eval_component(t, 1); }
  double ratio_g_over_f(double t) const { return m_g(t) / m_f(t); }
  double ratio_f_over_g(double t) const { return m_f(t) / m_g(t); }
  double sup_m_f(int samples_per_unit = 2000) const;
  const OdeSolution& solution() const { return sol_; }

 private:
  OdeSolution sol_;
};

MeanSeries integrate_means(const ModelParams& p, double m_f0, double m_g0,
                           double t_end, OdeConfig cfg = {});

// --- Variance systems -------------------------------------------------------

// Both species at p = 1/2:
//   v_f' = -2 (beta m_g + alpha chi) v_f + sigma_f m_f m_g
//   v_g' = -2 (gamma (mu - m_f) + nu theta) v_g + sigma_g m_f m_g
std::array<double, 2> variance_rhs_p12(const ModelParams& p, double m_f,
                                       double m_g, double v_f, double v_g);

// Mixed regime (risk_g = One). The v_g damping carries sigma_f as printed
// in the source system; set sigma_override to substitute sigma_g there.
std::array<double, 2> variance_rhs_mixed(const ModelParams& p, double m_f,
                                         double m_g, double v_f, double v_g,
                                         bool sigma_override = false);

// --- Squared coefficient-of-variation systems -------------------------------

// u = c^2 forms (integrated in place of the singular 1/c forms):
//   u_f' = -2 alpha (chi + 1) u_f + sigma_f m_g / m_f
//   u_g' = -2 nu (theta + 1) u_g + sigma_g m_f / m_g          (p = 1/2)
//   u_g' = -(2 nu (theta + 1) + sigma_g m_f) u_g + sigma_g m_f (p = 1)
std::array<double, 2> cv_sq_rhs_p12(const ModelParams& p, double m_f,
                                    double m_g, double u_f, double u_g);
std::array<double, 2> cv_sq_rhs_mixed(const ModelParams& p, double m_f,
                                      double m_g, double u_f, double u_g);

// Pointwise non-squared right-hand sides (singular as c -> 0).
std::array<double, 2> cv_rhs_p12(const ModelParams& p, double m_f, double m_g,
                                 double c_f, double c_g);
std::array<double, 2> cv_rhs_mixed(const ModelParams& p, double m_f,
                                   double m_g, double c_f, double c_g);

enum class RiskRegime { HalfHalf, HalfOne };

struct MomentPoint {
  double t, m_f, m_g, v_f, v_g, c_f, c_g;
};

// Means + variances, CVs derived pointwise.
std::vector<MomentPoint> integrate_means_variances(
    const ModelParams& p, const InitialConditions& ic, double t_end,
    const std::vector<double>& out_times, RiskRegime regime,
    bool sigma_override = false, OdeConfig cfg = {});

// Means + squared CVs, variances derived pointwise.
std::vector<MomentPoint> integrate_means_cv(
    const ModelParams& p, const InitialConditions& ic, double t_end,
    const std::vector<double>& out_times, RiskRegime regime,
    OdeConfig cfg = {});

// --- Closed-form CV (p = 1/2) ----------------------------------------------

// c_f(t)^2 = c_f(0)^2 e^{-2 a_f t} + sigma_f I_f(t),
//   I_f(t) = int_0^t (m_g/m_f)(s) e^{-2 a_f (t - s)} ds,  a_f = alpha (chi+1)
// and symmetrically for c_g with the inverse mean ratio and a_g = nu(theta+1).
// Quadrature is adaptive Simpson refined to relative 1e-9.
std::array<double, 2> cv_closed_form_p12(const ModelParams& p,
                                         const MeanSeries& means, double c_f0,
                                         double c_g0, double t);

// --- Long-time oscillation band (p = 1/2) -----------------------------------

struct CvBand {
  double f_lo, f_hi;       // band for c_f
  double g_lo, g_hi;       // band for c_g
  double period;           // detected mean-orbit period
  double ratio_gf_min, ratio_gf_max;
  double ratio_fg_min, ratio_fg_max;
};

// Needs the series to cover at least one full orbit period (detected via
// upward crossings of m_f through its fixed-point value); throws otherwise.
CvBand cv_longtime_band(const ModelParams& p, const MeanSeries& means);

// --- Scalar wealth-exchange example ------------------------------------------

// m_h(t) = m + (m_h(0) - m) e^{-t}
double wealth_mean(double m, double m_h0, double t);

// u = c_h^2:  u' = -(2 m / m_h(t) - sigma) u + 2 m / m_h(t)
double wealth_cv_sq_rhs(double sigma, double m, double m_h, double u);

// Explicit solution for m_h(0) = m:
//   c_h^2(t) = L + (c_h(0)^2 - L) e^{-(2 - sigma) t},  L = 2 / (2 - sigma)
double wealth_cv_explicit(double sigma, double c_h0, double t);
double wealth_cv_limit(double sigma);

// Integrates the wealth CV equation along the relaxing mean; returns c_h(t).
std::vector<std::array<double, 2>> integrate_wealth_cv(
    double sigma, double m, double m_h0, double c_h0,
    const std::vector<double>& out_times, OdeConfig cfg = {});

}  // namespace kinlv

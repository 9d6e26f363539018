#pragma once

#include <cstdint>
#include <span>

#include "kinlv/distributions.hpp"
#include "kinlv/grid.hpp"
#include "kinlv/params.hpp"

namespace kinlv {

// Coefficient of variation sqrt(var)/|mean|. Sample inputs use the
// empirical (1/n) variance so that the L2-Gini identity below is exact.
double cv_of(std::span<const double> sample);
double cv_of(const GridDensity& g);
double cv_of(const AnalyticDist& d);

// Gini index. Samples: sum_{i<j} |x_i - x_j| / (n^2 mean) via sorting.
// Grids: Lorenz/CDF identity 1 - (1/mean) int (1 - F)^2 dx, exact for the
// piecewise-constant representation. Analytic: closed forms per family.
double gini_of(std::span<const double> sample);
double gini_of(const GridDensity& g);
double gini_of(const AnalyticDist& d);

// O(n_cells^2) double-sum evaluation; slow oracle for gini_of(grid).
double gini_double_sum(const GridDensity& g);

// Squared-deviation (L2) Gini; coincides with the CV identically.
double gini2_of(std::span<const double> sample);
double gini2_of(const GridDensity& g);
double gini2_of(const AnalyticDist& d);

struct Bounds {
  double lo, hi;
};

// Gini bracket for a fat-tailed profile of shape a expressed via its CV:
//   cv sqrt((a-2)/a) / sqrt(pi)  <  G  <  cv sqrt((a-1)/a) / sqrt(pi)
Bounds gautschi_bounds(double a, double cv);

// Bootstrap standard error of the sample Gini (multinomial resampling of
// the sorted sample; deterministic for a fixed seed).
double gini_bootstrap_se(std::span<const double> sample, int resamples,
                         std::uint64_t seed);

// --- Quasi-stationary profiles at frozen means --------------------------------

// Deposits, p = 1/2: Gamma with
//   shape = 2 alpha (chi+1) m_f / (sigma_f m_g)
//   rate  = 2 (beta m_g + alpha chi) / (sigma_f m_g)
AnalyticDist quasi_eq_deposits(const ModelParams& p, double m_f, double m_g);

// Loans, p = 1/2: Gamma with
//   shape = 2 nu (theta+1) m_g / (sigma_g m_f)
//   rate  = 2 (gamma (mu - m_f) + nu theta) / (sigma_g m_f)
AnalyticDist quasi_eq_loans_half(const ModelParams& p, double m_f, double m_g);

// Loans, p = 1: inverse-Gamma with tail exponent pareto_index(p, m_f) and
// rate 2 nu (theta+1) m_g / (sigma_g m_f).
AnalyticDist quasi_eq_loans_one(const ModelParams& p, double m_f, double m_g);

// p(t) = (2 gamma (mu-1) + 2 theta nu + sigma_g m_f) / (sigma_g m_f) + 1
double pareto_index(const ModelParams& p, double m_f);

// Quasi-stationary CV levels.
double quasi_eq_cv_deposits(const ModelParams& p, double m_f, double m_g);
double quasi_eq_cv_loans_half(const ModelParams& p, double m_f, double m_g);
double quasi_eq_cv_loans_one(const ModelParams& p, double m_f);

struct SecondMomentCheck {
  bool holds;
  double margin;  // 2 gamma (mu-1) + theta nu - sigma_g sup m_f
};

// Bounded-second-moment condition for the fat-tail loan regime.
SecondMomentCheck second_moment_condition(const ModelParams& p,
                                          double sup_m_f);

}  // namespace kinlv

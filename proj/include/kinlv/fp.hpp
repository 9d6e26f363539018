#pragma once

#include <vector>

#include "kinlv/distributions.hpp"
#include "kinlv/grid.hpp"
#include "kinlv/ode.hpp"
#include "kinlv/params.hpp"

namespace kinlv {

enum class Species { Deposits, Loans };

// Coefficient models for the drift-diffusion equations, written in flux form
//   df/dt = d/dx [ Dtil(x) f' + (B(x) + Dtil'(x)) f ].
enum class FpModel { DepositsHalf, LoansHalf, LoansOne, Wealth };

struct FpCoefficients {
  double diffusion;    // Dtil(x)
  double drift;        // B(x)
  double drift_total;  // B(x) + Dtil'(x), the flux-form drift
};

// Deposits: Dtil = (sigma_f m_g / 2) x,
//           B    = (beta m_g + alpha chi) x - alpha (chi+1) m_f.
// Loans:    Dtil = (sigma_g m_f / 2) y,
//           B    = (gamma (mu - m_f) + nu theta) y - nu (theta+1) m_g.
FpCoefficients fp_coefficients_p12(const ModelParams& p, double x, double m_f,
                                   double m_g, Species species);

// Loans with full risk: Dtil = (sigma_g m_f / 2) y^2, same drift as above.
FpCoefficients fp_coefficients_p1_loans(const ModelParams& p, double y,
                                        double m_f, double m_g);

// Wealth benchmark: Dtil = (sigma/2) x^2, B = x - m.
FpCoefficients fp_coefficients_wealth(double sigma, double m, double x);

FpModel loans_model(RiskRegime regime);

// Diffusion and flux-form drift evaluated at the n_cells-1 interior edges.
struct EdgeCoeffs {
  std::vector<double> diffusion;
  std::vector<double> drift_total;
};

EdgeCoeffs edge_coefficients(const Mesh1D& mesh, FpModel model,
                             const ModelParams& p, double m_f, double m_g);
EdgeCoeffs edge_coefficients_wealth(const Mesh1D& mesh, double sigma,
                                    double m);

double max_drift_speed(const EdgeCoeffs& ec);

// One semi-implicit Chang-Cooper step with no-flux boundaries. The implicit
// matrix has unit column sums, so mass is conserved to round-off; its
// M-matrix structure keeps every cell nonnegative. Returns false and leaves
// the density untouched if a negative cell appears (caller halves dt).
// Throws on relative mass drift beyond 1e-12; the drift actually observed is
// written to *rel_drift when non-null.
bool cc_step(GridDensity& g, const EdgeCoeffs& ec, double dt,
             double* rel_drift = nullptr);

// Exact fixed point of cc_step for frozen coefficients: the profile with
// f_{j+1}/f_j = exp(-w_j) at every interior edge, built in log space and
// normalized to unit mass.
GridDensity discrete_equilibrium(const Mesh1D& mesh, const EdgeCoeffs& ec);

// Total flux magnitude sum_e |F_e| on a density; vanishes to round-off on
// discrete_equilibrium.
double total_flux(const GridDensity& g, const EdgeCoeffs& ec);

// Variance of the smooth density underlying the cell averages (center-sum
// second moment with Sheppard's correction -dx^2/12).
double smooth_variance_of(const GridDensity& g);

struct FpSystem {
  ModelParams params;
  RiskRegime regime = RiskRegime::HalfHalf;
  GridDensity f;  // deposits
  GridDensity g;  // loans
  double t = 0.0;
  bool self_consistent = true;  // recompute means from densities each step
  double frozen_m_f = 0.0;
  double frozen_m_g = 0.0;
  long long steps_taken = 0;
  long long steps_rejected = 0;
  double max_mass_drift = 0.0;
};

// Advance both species by one step of at most dt (halved on positivity
// rejection). Mean coupling is explicit: coefficients use the means at the
// start of the step. Returns the dt actually taken.
double step_fp(FpSystem& sys, double dt);

struct FpRunConfig {
  int n_cells = 1024;
  double x_max_f = 0.0;  // 0 = automatic (3x the orbit's largest mean,
  double x_max_g = 0.0;  //     6x for the power-tailed loan regime)
  double t_end = 20.0;
  std::vector<double> out_times;  // defaults to 201 uniform samples
  double cfl = 0.5;               // <= 0 disables the advective dt cap
  double dt_max = 0.01;
  RiskRegime regime = RiskRegime::HalfHalf;
  bool self_consistent = true;
  double frozen_m_f = 0.0;
  double frozen_m_g = 0.0;
  bool keep_snapshots = true;
};

struct FpMomentRow {
  double t, m_f, m_g, v_f, v_g, c_f, c_g;
  double mass_f, mass_g;  // discrete total mass (conservation monitor)
  double tail_f, tail_g;  // mass with center beyond 0.9 x_max
};

struct FpSnapshot {
  double t;
  GridDensity f, g;
  double tail_f, tail_g;
};

struct FpResult {
  Mesh1D mesh_f, mesh_g;
  std::vector<FpMomentRow> moments;
  std::vector<FpSnapshot> snapshots;
  long long steps = 0;
  double max_mass_drift = 0.0;
  double init_truncated_f = 0.0;  // analytic initial mass beyond x_max
  double init_truncated_g = 0.0;
};

FpResult run_fp(const ModelParams& p, const InitialConditions& ic,
                const FpRunConfig& cfg);

struct WealthFpResult {
  GridDensity density;
  long long steps = 0;
  double max_mass_drift = 0.0;
};

WealthFpResult run_fp_wealth(double sigma, double m, const GridDensity& init,
                             double t_end, double cfl = 0.5,
                             double dt_max = 0.01);

}  // namespace kinlv

#pragma once

#include <cstdint>
#include <vector>

#include "kinlv/params.hpp"
#include "kinlv/rng.hpp"

namespace kinlv {

// --- Microscopic interaction rules, unit scale -------------------------------

// Holling type-II responses: phi(y) = beta y/(1+y), psi(x) = gamma (x-mu)/(1+x).
double holling_phi(const ModelParams& p, double y);
double holling_psi(const ModelParams& p, double x);

struct PairOutcome {
  double x, y;
  bool skipped_x = false;  // noise resampling exhausted; state kept
  bool skipped_y = false;
  int resamples = 0;
};

// One binary exchange:
//   x' = x - eps phi(y) x + x^{p_f} 1(x >= (1-p_f) s0) eta_f,
//   y' = y + eps psi(x) y + y^{p_g} 1(y >= (1-p_g) s0) eta_g,
// with <eta_f^2> = eps sigma_f y/(1+y), <eta_g^2> = eps sigma_g x/(1+x).
// Both members update from the pre-interaction pair. Draws producing a
// negative state are resampled up to 100 times, then the noise is skipped.
PairOutcome interact_pair(const ModelParams& p, double x, double y, double eps,
                          Rng& rng);

// Resource injection: deposits x + eps alpha (z - chi x), loans
// y + eps nu (z - theta y). Positive inputs stay positive because
// eps alpha chi < 1 and eps nu theta < 1 for validated parameters.
double redistribute(const ModelParams& p, double value, double z, double eps,
                    bool deposits);

// --- Population simulation ----------------------------------------------------

// Exchange response used by the population kernel.
//   Linear:  the small-exchange limit (drift beta x y, gamma (x-mu) y); mean
//            transport is exact, so runs track the moment ODEs to sampling
//            accuracy at any eps.
//   Holling: saturated responses evaluated on the eps-scaled exchange,
//            beta (eps y)/(1 + eps y) per event; recovers the unit-scale
//            rules at eps = 1 and introduces an O(eps) model distance that
//            vanishes in the quasi-invariant limit.
enum class ResponseForm { Linear, Holling };

// Law of the redistribution resource z.
//   MeanField:  z = (1+chi) m_f (resp. (1+theta) m_g); redistribution is a
//               pure drift, matching the macroscopic operator exactly.
//   Population: z = (1+chi) X with X a uniformly drawn agent; same drift
//               plus an O(eps) sampling variance, applied as centered kicks.
enum class ResourceSampling { MeanField, Population };

enum class InitSampling { Random, Stratified };

struct McConfig {
  std::size_t n_agents = 100000;
  double epsilon = 0.01;
  double t_end = 20.0;
  std::vector<double> out_times;  // empty: 201 uniform samples
  std::uint64_t seed = 0x02c6b9ae5b4e21c5ULL;
  ResponseForm response = ResponseForm::Linear;
  ResourceSampling resource = ResourceSampling::MeanField;
  InitSampling init = InitSampling::Random;
  bool with_gini = true;
  std::vector<double> histogram_times;
};

struct McMomentRow {
  double t;
  double m_f, m_g;
  double v_f, v_g;  // population (1/n) variances
  double c_f, c_g;
  double gini_f = 0.0, gini_g = 0.0;
  double se_m_f, se_m_g;  // asymptotic standard errors of the estimates
  double se_v_f, se_v_g;
  long long skipped = 0;  // cumulative skipped noise events
};

struct McHistogram {
  double t;
  double x_max;  // shared bin range [0, x_max], 200 equal bins
  std::vector<double> density_f, density_g;
};

struct McResult {
  std::vector<McMomentRow> rows;
  std::vector<McHistogram> histograms;
  std::vector<double> final_xs, final_ys;  // populations at t_end
  long long skipped_events = 0;
  long long noise_events = 0;
};

// Event-driven population run. Each round of length eps applies the exact
// affine flow of the mean-field deterministic dynamics (Strang-split around
// the stochastic phase) and one expected noise event per agent; empirical
// moments are emitted on the configured grid (times snapped to the round
// grid). Deterministic for a fixed config. Aborts when more than 1% of
// noise events exhaust resampling.
McResult run_mc(const ModelParams& p, const InitialConditions& ic,
                const McConfig& cfg);

// --- Sampling envelope ----------------------------------------------------------

struct MomentEnvelope {
  double t;
  double se_m_f, se_m_g;
  double se_v_f, se_v_g;
};

// Standard errors of the empirical moments of a run_mc population measured
// against the moment ODEs. The kernel feeds the empirical means back into
// every agent's drift, so moment fluctuations are transported by the moment
// system's Jacobian and accumulate along the orbit's neutral direction; the
// per-row errors in McMomentRow describe within-population scatter only and
// undershoot the orbit-level deviation at later times. Integrates the
// covariance transport d C/dt = A C + C A^T + Q/n with kick rates in the
// small-exchange limit (third/fourth moments closed on the gamma family,
// noise gate ignored), donor-variance terms when the resource is
// population-sampled, and initial scatter matching the sampled shape (zero
// for stratified initialization). Requires risk_f = Half; risk_g selects
// the matching variance system. Rows follow cfg.out_times (empty: 201
// uniform samples), clamped to [0, t_end].
std::vector<MomentEnvelope> sampling_envelope(const ModelParams& p,
                                              const InitialConditions& ic,
                                              const McConfig& cfg);

}  // namespace kinlv

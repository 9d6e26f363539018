#pragma once

#include <string>
#include <vector>

namespace kinlv {

// Risk exponent of the multiplicative noise amplitude: Half -> p = 1/2,
// One -> p = 1 (fat-tailed regime).
enum class Risk { Half, One };

// Shape family used to realize an initial (mean, cv) pair as a density or
// as an agent sample.
enum class DensityShape { Gamma, LogNormal, Uniform };

// Model coefficients for the coupled deposit-loan dynamics.
//   alpha   deposit growth rate fed by redistribution
//   beta    deposit loss rate per unit loan exposure
//   gamma   loan growth rate per unit deposit
//   mu      loan capacity scale (>= 1)
//   nu      loan contraction rate
//   chi     deposit redistribution strength (alpha * chi < 1)
//   theta   loan redistribution strength (nu * theta < 1)
//   sigma_f, sigma_g   noise intensities (>= 0)
//   s0      minimum-wealth threshold gating the noise term (>= 0)
struct ModelParams {
  double alpha = 1.0;
  double beta = 0.5;
  double gamma = 0.15;
  double mu = 10.0;
  double nu = 1.0;
  double chi = 0.8;
  double theta = 0.4;
  double sigma_f = 1e-3;
  double sigma_g = 1e-3;
  Risk risk_f = Risk::Half;
  Risk risk_g = Risk::Half;
  double s0 = 0.0;

  // delta = gamma * mu - nu; must be positive for a meaningful cycle.
  double delta() const { return gamma * mu - nu; }

  // Mean-field fixed point (m_f*, m_g*) = (delta / gamma, alpha / beta).
  double fixed_point_f() const { return delta() / gamma; }
  double fixed_point_g() const { return alpha / beta; }
};

struct InitialConditions {
  double m_f0 = 4.0;
  double m_g0 = 3.0;
  double c_f0 = 2.0;
  double c_g0 = 1.0;
  DensityShape shape = DensityShape::Gamma;
};

enum class IssueKind {
  NonPositiveDelta,
  RedistributionTooStrong,
  NonFinite,
  OutOfDomain,
  LargeGammaMu,
  RateOutsideUnitInterval,
};

struct ValidationIssue {
  IssueKind kind;
  std::string field;
  std::string message;
};

struct ValidationResult {
  std::vector<ValidationIssue> errors;
  std::vector<ValidationIssue> warnings;
  bool ok() const { return errors.empty(); }
};

// Checks every hard constraint (each violation is reported, none short-
// circuits) and records soft-constraint warnings.
ValidationResult validate(const ModelParams& p);
ValidationResult validate_initial(const InitialConditions& ic);

const char* to_string(IssueKind kind);
std::string describe(const ValidationResult& r);

}  // namespace kinlv

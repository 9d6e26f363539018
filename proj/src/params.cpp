#include "kinlv/params.hpp"

#include <cmath>
#include <sstream>

namespace kinlv {

namespace {

bool finite(double v) { return std::isfinite(v); }

void require_finite(ValidationResult& r, const char* name, double v) {
  if (!finite(v)) {
    r.errors.push_back({IssueKind::NonFinite, name, "value is not finite"});
  }
}

void require_domain(ValidationResult& r, const char* name, bool cond,
                    const char* what) {
  if (!cond) {
    r.errors.push_back({IssueKind::OutOfDomain, name, what});
  }
}

}  // namespace

ValidationResult validate(const ModelParams& p) {
  ValidationResult r;
  require_finite(r, "alpha", p.alpha);
  require_finite(r, "beta", p.beta);
  require_finite(r, "gamma", p.gamma);
  require_finite(r, "mu", p.mu);
  require_finite(r, "nu", p.nu);
  require_finite(r, "chi", p.chi);
  require_finite(r, "theta", p.theta);
  require_finite(r, "sigma_f", p.sigma_f);
  require_finite(r, "sigma_g", p.sigma_g);
  require_finite(r, "s0", p.s0);
  if (!r.errors.empty()) return r;

  require_domain(r, "alpha", p.alpha > 0.0, "must be positive");
  require_domain(r, "beta", p.beta > 0.0, "must be positive");
  require_domain(r, "gamma", p.gamma > 0.0, "must be positive");
  require_domain(r, "mu", p.mu >= 1.0, "must be at least 1");
  require_domain(r, "nu", p.nu > 0.0, "must be positive");
  require_domain(r, "chi", p.chi > -1.0, "must exceed -1");
  require_domain(r, "theta", p.theta > -1.0, "must exceed -1");
  require_domain(r, "sigma_f", p.sigma_f >= 0.0, "must be nonnegative");
  require_domain(r, "sigma_g", p.sigma_g >= 0.0, "must be nonnegative");
  require_domain(r, "s0", p.s0 >= 0.0, "must be nonnegative");

  if (p.gamma * p.mu - p.nu <= 0.0) {
    r.errors.push_back({IssueKind::NonPositiveDelta, "gamma,mu,nu",
                        "gamma*mu - nu must be positive"});
  }
  if (p.alpha * p.chi >= 1.0) {
    r.errors.push_back({IssueKind::RedistributionTooStrong, "alpha,chi",
                        "alpha*chi must be below 1"});
  }
  if (p.nu * p.theta >= 1.0) {
    r.errors.push_back({IssueKind::RedistributionTooStrong, "nu,theta",
                        "nu*theta must be below 1"});
  }

  if (p.gamma * p.mu >= 1.0) {
    r.warnings.push_back({IssueKind::LargeGammaMu, "gamma,mu",
                          "gamma*mu >= 1: outside the small-capacity regime"});
  }
  if (p.beta <= 0.0 || p.beta >= 1.0) {
    r.warnings.push_back({IssueKind::RateOutsideUnitInterval, "beta",
                          "outside (0, 1)"});
  }
  if (p.gamma <= 0.0 || p.gamma >= 1.0) {
    r.warnings.push_back({IssueKind::RateOutsideUnitInterval, "gamma",
                          "outside (0, 1)"});
  }
  return r;
}

ValidationResult validate_initial(const InitialConditions& ic) {
  ValidationResult r;
  require_finite(r, "m_f0", ic.m_f0);
  require_finite(r, "m_g0", ic.m_g0);
  require_finite(r, "c_f0", ic.c_f0);
  require_finite(r, "c_g0", ic.c_g0);
  if (!r.errors.empty()) return r;

  require_domain(r, "m_f0", ic.m_f0 > 0.0, "must be positive");
  require_domain(r, "m_g0", ic.m_g0 > 0.0, "must be positive");
  require_domain(r, "c_f0", ic.c_f0 >= 0.0, "must be nonnegative");
  require_domain(r, "c_g0", ic.c_g0 >= 0.0, "must be nonnegative");
  if (ic.shape == DensityShape::Uniform) {
    const double limit = 1.0 / std::sqrt(3.0);
    require_domain(r, "c_f0", ic.c_f0 <= limit,
                   "uniform shape needs cv <= 1/sqrt(3)");
    require_domain(r, "c_g0", ic.c_g0 <= limit,
                   "uniform shape needs cv <= 1/sqrt(3)");
  }
  return r;
}

const char* to_string(IssueKind kind) {
  switch (kind) {
    case IssueKind::NonPositiveDelta: return "NonPositiveDelta";
    case IssueKind::RedistributionTooStrong: return "RedistributionTooStrong";
    case IssueKind::NonFinite: return "NonFinite";
    case IssueKind::OutOfDomain: return "OutOfDomain";
    case IssueKind::LargeGammaMu: return "LargeGammaMu";
    case IssueKind::RateOutsideUnitInterval: return "RateOutsideUnitInterval";
  }
  return "Unknown";
}

std::string describe(const ValidationResult& r) {
  std::ostringstream os;
  for (const auto& e : r.errors) {
    os << "error: " << to_string(e.kind) << " [" << e.field << "] "
       << e.message << "\n";
  }
  for (const auto& w : r.warnings) {
    os << "warning: " << to_string(w.kind) << " [" << w.field << "] "
       << w.message << "\n";
  }
  return os.str();
}

}  // namespace kinlv

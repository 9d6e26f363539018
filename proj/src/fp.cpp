#include "kinlv/fp.hpp"

#include <algorithm>
#include <cmath>

#include "kinlv/errors.hpp"

namespace kinlv {

namespace {

// w / (e^w - 1), stable over the full double range.
double g_minus(double w) {
  if (std::fabs(w) < 1e-4) return 1.0 - 0.5 * w + w * w / 12.0;
  if (w > 500.0) return 0.0;
  if (w < -500.0) return -w;
  return w / std::expm1(w);
}

// Exponentially fitted edge weights: F_e = a f_left + b f_right with a <= 0,
// b >= 0 and b = -a e^w, so the discrete equilibrium obeys
// f_right / f_left = e^{-w}.
void edge_ab(double diffusion, double drift_total, double dx, double* a,
             double* b) {
  if (diffusion > 0.0) {
    const double w = drift_total * dx / diffusion;
    const double gm = g_minus(w);
    *a = -(diffusion / dx) * gm;
    *b = (diffusion / dx) * (w + gm);
  } else {
    // pure advection: donor cell by the sign of the flux-form drift
    *a = std::min(drift_total, 0.0);
    *b = std::max(drift_total, 0.0);
  }
}

double kahan_sum(const std::vector<double>& v) {
  double s = 0.0, c = 0.0;
  for (double x : v) {
    const double y = x - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

void thomas_solve(std::vector<double>& sub, std::vector<double>& diag,
                  std::vector<double>& super, std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double m = sub[i] / diag[i - 1];
    diag[i] -= m * super[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    rhs[i] = (rhs[i] - super[i] * rhs[i + 1]) / diag[i];
  }
}

}  // namespace

FpCoefficients fp_coefficients_p12(const ModelParams& p, double x, double m_f,
                                   double m_g, Species species) {
  if (species == Species::Deposits) {
    const double c = 0.5 * p.sigma_f * m_g;
    const double drift =
        (p.beta * m_g + p.alpha * p.chi) * x - p.alpha * (p.chi + 1.0) * m_f;
    return {c * x, drift, drift + c};
  }
  const double c = 0.5 * p.sigma_g * m_f;
  const double drift = (p.gamma * (p.mu - m_f) + p.nu * p.theta) * x -
                       p.nu * (p.theta + 1.0) * m_g;
  return {c * x, drift, drift + c};
}

FpCoefficients fp_coefficients_p1_loans(const ModelParams& p, double y,
                                        double m_f, double m_g) {
  const double c = 0.5 * p.sigma_g * m_f;
  const double drift = (p.gamma * (p.mu - m_f) + p.nu * p.theta) * y -
                       p.nu * (p.theta + 1.0) * m_g;
  return {c * y * y, drift, drift + 2.0 * c * y};
}

FpCoefficients fp_coefficients_wealth(double sigma, double m, double x) {
  const double drift = x - m;
  return {0.5 * sigma * x * x, drift, drift + sigma * x};
}

FpModel loans_model(RiskRegime regime) {
  return regime == RiskRegime::HalfOne ? FpModel::LoansOne
                                       : FpModel::LoansHalf;
}

EdgeCoeffs edge_coefficients(const Mesh1D& mesh, FpModel model,
                             const ModelParams& p, double m_f, double m_g) {
  if (mesh.n_cells < 2)
    throw KinlvError(ErrorCode::Validation, "mesh needs at least 2 cells");
  const std::size_t ne = mesh.n_cells - 1;
  EdgeCoeffs ec;
  ec.diffusion.resize(ne);
  ec.drift_total.resize(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    const double x = mesh.right(e);
    FpCoefficients c{};
    switch (model) {
      case FpModel::DepositsHalf:
        c = fp_coefficients_p12(p, x, m_f, m_g, Species::Deposits);
        break;
      case FpModel::LoansHalf:
        c = fp_coefficients_p12(p, x, m_f, m_g, Species::Loans);
        break;
      case FpModel::LoansOne:
        c = fp_coefficients_p1_loans(p, x, m_f, m_g);
        break;
      case FpModel::Wealth:
        throw KinlvError(ErrorCode::Validation,
                         "wealth coefficients need edge_coefficients_wealth");
    }
    ec.diffusion[e] = c.diffusion;
    ec.drift_total[e] = c.drift_total;
  }
  return ec;
}

EdgeCoeffs edge_coefficients_wealth(const Mesh1D& mesh, double sigma,
                                    double m) {
  if (mesh.n_cells < 2)
    throw KinlvError(ErrorCode::Validation, "mesh needs at least 2 cells");
  const std::size_t ne = mesh.n_cells - 1;
  EdgeCoeffs ec;
  ec.diffusion.resize(ne);
  ec.drift_total.resize(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    const FpCoefficients c = fp_coefficients_wealth(sigma, m, mesh.right(e));
    ec.diffusion[e] = c.diffusion;
    ec.drift_total[e] = c.drift_total;
  }
  return ec;
}

double max_drift_speed(const EdgeCoeffs& ec) {
  double s = 0.0;
  for (double b : ec.drift_total) s = std::max(s, std::fabs(b));
  return s;
}

bool cc_step(GridDensity& g, const EdgeCoeffs& ec, double dt,
             double* rel_drift) {
  const Mesh1D& mesh = g.mesh;
  const std::size_t n = mesh.n_cells;
  const double dx = mesh.dx();
  if (ec.diffusion.size() != n - 1)
    throw KinlvError(ErrorCode::Validation,
                     "edge coefficients do not match the mesh");
  // Implicit matrix M = I - dt A with unit column sums; A has the no-flux
  // boundary rows built in (edge fluxes only at interior edges).
  std::vector<double> sub(n, 0.0), diag(n, 1.0), super(n, 0.0);
  const double r = dt / dx;
  for (std::size_t e = 0; e + 1 < n; ++e) {
    double a, b;
    edge_ab(ec.diffusion[e], ec.drift_total[e], dx, &a, &b);
    diag[e] -= r * a;
    super[e] -= r * b;
    sub[e + 1] += r * a;
    diag[e + 1] += r * b;
  }
  const double mass0 = kahan_sum(g.f) * dx;
  std::vector<double> sol = g.f;
  thomas_solve(sub, diag, super, sol);
  for (double v : sol) {
    if (!(v >= 0.0)) return false;  // also rejects NaN
  }
  const double mass1 = kahan_sum(sol) * dx;
  const double drift =
      std::fabs(mass1 - mass0) / std::max(mass0, 1e-300);
  if (rel_drift != nullptr) *rel_drift = drift;
  if (!(drift <= 1e-12))
    throw KinlvError(ErrorCode::Numerical,
                     "fp step: mass drift beyond 1e-12");
  g.f.swap(sol);
  return true;
}

GridDensity discrete_equilibrium(const Mesh1D& mesh, const EdgeCoeffs& ec) {
  const std::size_t n = mesh.n_cells;
  std::vector<double> lnf(n, 0.0);
  const double dx = mesh.dx();
  for (std::size_t e = 0; e + 1 < n; ++e) {
    if (!(ec.diffusion[e] > 0.0))
      throw KinlvError(ErrorCode::Validation,
                       "discrete equilibrium needs positive diffusion");
    lnf[e + 1] = lnf[e] - ec.drift_total[e] * dx / ec.diffusion[e];
  }
  const double mx = *std::max_element(lnf.begin(), lnf.end());
  GridDensity g{mesh, std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) g.f[i] = std::exp(lnf[i] - mx);
  const double mass = kahan_sum(g.f) * dx;
  for (double& v : g.f) v /= mass;
  return g;
}

double total_flux(const GridDensity& g, const EdgeCoeffs& ec) {
  const double dx = g.mesh.dx();
  double acc = 0.0;
  for (std::size_t e = 0; e + 1 < g.mesh.n_cells; ++e) {
    double a, b;
    edge_ab(ec.diffusion[e], ec.drift_total[e], dx, &a, &b);
    acc += std::fabs(a * g.f[e] + b * g.f[e + 1]);
  }
  return acc;
}

double smooth_variance_of(const GridDensity& g) {
  const double dx = g.mesh.dx();
  const double mass = g.mass();
  if (mass <= 0.0)
    throw KinlvError(ErrorCode::Validation, "variance: nonpositive mass");
  const double m = g.mean();
  double acc = 0.0;
  for (std::size_t i = 0; i < g.mesh.n_cells; ++i) {
    const double d = g.mesh.center(i) - m;
    acc += g.f[i] * d * d;
  }
  // Sheppard's correction for the binning of a smooth density
  return std::max(0.0, acc * dx / mass - dx * dx / 12.0);
}

double step_fp(FpSystem& sys, double dt) {
  if (!(dt > 0.0))
    throw KinlvError(ErrorCode::Validation, "fp step: dt must be positive");
  double m_f, m_g;
  if (sys.self_consistent) {
    m_f = sys.f.mean();
    m_g = sys.g.mean();
  } else {
    m_f = sys.frozen_m_f;
    m_g = sys.frozen_m_g;
  }
  if (!(m_f > 0.0) || !(m_g > 0.0))
    throw KinlvError(ErrorCode::Numerical, "fp step: nonpositive mean");
  const EdgeCoeffs ecf = edge_coefficients(sys.f.mesh, FpModel::DepositsHalf,
                                           sys.params, m_f, m_g);
  const EdgeCoeffs ecg = edge_coefficients(
      sys.g.mesh, loans_model(sys.regime), sys.params, m_f, m_g);
  for (int tries = 0; tries < 64; ++tries) {
    std::vector<double> f_save = sys.f.f;
    double drift_f = 0.0, drift_g = 0.0;
    if (cc_step(sys.f, ecf, dt, &drift_f)) {
      if (cc_step(sys.g, ecg, dt, &drift_g)) {
        sys.t += dt;
        ++sys.steps_taken;
        sys.max_mass_drift =
            std::max({sys.max_mass_drift, drift_f, drift_g});
        return dt;
      }
      sys.f.f = std::move(f_save);
    }
    ++sys.steps_rejected;
    dt *= 0.5;
  }
  throw KinlvError(ErrorCode::Numerical, "fp step: time step collapsed");
}

namespace {

GridDensity initial_density(DensityShape shape, double mean, double cv,
                            const Mesh1D& mesh, double* truncated) {
  *truncated = 0.0;
  GridDensity g{mesh, std::vector<double>(mesh.n_cells, 0.0)};
  if (cv < 1e-8) {
    // point mass in the cell containing the mean
    const auto j = static_cast<std::size_t>(std::min(
        std::max(mean / mesh.dx(), 0.0),
        static_cast<double>(mesh.n_cells - 1)));
    g.f[j] = 1.0 / mesh.dx();
    return g;
  }
  const AnalyticDist d = shape_from_moments(shape, mean, cv);
  g = discretize(d, mesh, truncated);
  const double mass = g.mass();
  if (!(mass > 0.0))
    throw KinlvError(ErrorCode::Validation,
                     "initial density has no mass on the grid");
  for (double& v : g.f) v /= mass;
  return g;
}

double tail_mass(const GridDensity& g) {
  const double cut = 0.9 * g.mesh.x_max;
  const double dx = g.mesh.dx();
  double acc = 0.0;
  for (std::size_t i = 0; i < g.mesh.n_cells; ++i) {
    if (g.mesh.center(i) > cut) acc += g.f[i] * dx;
  }
  return acc;
}

}  // namespace

FpResult run_fp(const ModelParams& p, const InitialConditions& ic,
                const FpRunConfig& cfg) {
  if (cfg.n_cells < 16)
    throw KinlvError(ErrorCode::Validation, "fp run: need n_cells >= 16");
  if (!(cfg.t_end > 0.0))
    throw KinlvError(ErrorCode::Validation, "fp run: t_end must be positive");

  std::vector<double> out = cfg.out_times;
  if (out.empty()) {
    out.resize(201);
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = cfg.t_end * static_cast<double>(i) /
               static_cast<double>(out.size() - 1);
  }

  double x_max_f = cfg.x_max_f, x_max_g = cfg.x_max_g;
  if (x_max_f <= 0.0 || x_max_g <= 0.0) {
    double sup_f, sup_g;
    if (cfg.self_consistent) {
      const MeanSeries ms = integrate_means(p, ic.m_f0, ic.m_g0, cfg.t_end);
      sup_f = ic.m_f0;
      sup_g = ic.m_g0;
      const int samples = 4000;
      for (int i = 0; i <= samples; ++i) {
        const double t =
            cfg.t_end * static_cast<double>(i) / static_cast<double>(samples);
        sup_f = std::max(sup_f, ms.m_f(t));
        sup_g = std::max(sup_g, ms.m_g(t));
      }
    } else {
      sup_f = cfg.frozen_m_f;
      sup_g = cfg.frozen_m_g;
    }
    // 3x the largest mean keeps the cells fine enough to resolve the
    // narrow quasi-equilibria at small sigma; the power-tailed loan
    // regime gets extra headroom. Tail columns monitor any clipping.
    if (x_max_f <= 0.0) x_max_f = 3.0 * sup_f;
    if (x_max_g <= 0.0)
      x_max_g = (cfg.regime == RiskRegime::HalfOne ? 6.0 : 3.0) * sup_g;
  }

  const Mesh1D mesh_f{x_max_f, static_cast<std::size_t>(cfg.n_cells)};
  const Mesh1D mesh_g{x_max_g, static_cast<std::size_t>(cfg.n_cells)};

  FpResult res;
  res.mesh_f = mesh_f;
  res.mesh_g = mesh_g;

  FpSystem sys;
  sys.params = p;
  sys.regime = cfg.regime;
  sys.f = initial_density(ic.shape, ic.m_f0, ic.c_f0, mesh_f,
                          &res.init_truncated_f);
  sys.g = initial_density(ic.shape, ic.m_g0, ic.c_g0, mesh_g,
                          &res.init_truncated_g);
  sys.self_consistent = cfg.self_consistent;
  sys.frozen_m_f = cfg.frozen_m_f;
  sys.frozen_m_g = cfg.frozen_m_g;

  const double mass0_f = sys.f.mass();
  const double mass0_g = sys.g.mass();

  for (double t_out : out) {
    while (sys.t < t_out - 1e-12) {
      double dt = cfg.dt_max;
      if (cfg.cfl > 0.0) {
        double m_f, m_g;
        if (sys.self_consistent) {
          m_f = sys.f.mean();
          m_g = sys.g.mean();
        } else {
          m_f = sys.frozen_m_f;
          m_g = sys.frozen_m_g;
        }
        const double sf = max_drift_speed(edge_coefficients(
            mesh_f, FpModel::DepositsHalf, p, m_f, m_g));
        const double sg = max_drift_speed(
            edge_coefficients(mesh_g, loans_model(cfg.regime), p, m_f, m_g));
        if (sf > 0.0) dt = std::min(dt, cfg.cfl * mesh_f.dx() / sf);
        if (sg > 0.0) dt = std::min(dt, cfg.cfl * mesh_g.dx() / sg);
      }
      dt = std::min(dt, t_out - sys.t);
      step_fp(sys, dt);
    }
    sys.t = t_out;

    FpMomentRow row;
    row.t = t_out;
    row.m_f = sys.f.mean();
    row.m_g = sys.g.mean();
    row.v_f = smooth_variance_of(sys.f);
    row.v_g = smooth_variance_of(sys.g);
    row.c_f = std::sqrt(row.v_f) / row.m_f;
    row.c_g = std::sqrt(row.v_g) / row.m_g;
    row.mass_f = sys.f.mass();
    row.mass_g = sys.g.mass();
    row.tail_f = tail_mass(sys.f);
    row.tail_g = tail_mass(sys.g);
    res.moments.push_back(row);
    if (cfg.keep_snapshots) {
      res.snapshots.push_back(
          {t_out, sys.f, sys.g, row.tail_f, row.tail_g});
    }
    res.max_mass_drift =
        std::max({res.max_mass_drift, std::fabs(sys.f.mass() / mass0_f - 1.0),
                  std::fabs(sys.g.mass() / mass0_g - 1.0)});
  }
  res.steps = sys.steps_taken;
  res.max_mass_drift = std::max(res.max_mass_drift, sys.max_mass_drift);
  return res;
}

WealthFpResult run_fp_wealth(double sigma, double m, const GridDensity& init,
                             double t_end, double cfl, double dt_max) {
  if (!(sigma > 0.0) || !(sigma < 2.0))
    throw KinlvError(ErrorCode::Validation,
                     "wealth model needs 0 < sigma < 2");
  if (!(m > 0.0))
    throw KinlvError(ErrorCode::Validation,
                     "wealth model needs a positive mean");
  const EdgeCoeffs ec = edge_coefficients_wealth(init.mesh, sigma, m);
  WealthFpResult res;
  res.density = init;
  const double mass0 = res.density.mass();
  const double dx = init.mesh.dx();
  double t = 0.0;
  double dt_cap = dt_max;
  if (cfl > 0.0) {
    const double s = max_drift_speed(ec);
    if (s > 0.0) dt_cap = std::min(dt_cap, cfl * dx / s);
  }
  while (t < t_end - 1e-12) {
    double dt = std::min(dt_cap, t_end - t);
    double drift = 0.0;
    while (!cc_step(res.density, ec, dt, &drift)) {
      dt *= 0.5;
      if (dt < 1e-16)
        throw KinlvError(ErrorCode::Numerical,
                         "fp wealth: time step collapsed");
    }
    t += dt;
    ++res.steps;
    res.max_mass_drift = std::max(
        {res.max_mass_drift, drift,
         std::fabs(res.density.mass() / mass0 - 1.0)});
  }
  return res;
}

}  // namespace kinlv

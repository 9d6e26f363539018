#include "kinlv/mc.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kinlv/distributions.hpp"
#include "kinlv/errors.hpp"
#include "kinlv/inequality.hpp"
#include "kinlv/ode.hpp"

namespace kinlv {

double holling_phi(const ModelParams& p, double y) {
  return p.beta * y / (1.0 + y);
}

double holling_psi(const ModelParams& p, double x) {
  return p.gamma * (x - p.mu) / (1.0 + x);
}

namespace {

constexpr int kMaxResamples = 100;

double risk_exponent(Risk r) { return r == Risk::Half ? 0.5 : 1.0; }

// x^p gated by the minimum-wealth indicator 1(x >= (1-p) s0).
double amplitude_base(double x, double pexp, double s0) {
  if (x < (1.0 - pexp) * s0) return 0.0;
  return pexp == 0.5 ? std::sqrt(x) : x;
}

// Candidate = det + amp * normal; redraws a negative candidate up to
// kMaxResamples times. Returns false when every draw stayed negative.
bool attempt_update(Rng& rng, double det, double amp, double* result,
                    int* resamples) {
  double candidate = det + (amp > 0.0 ? amp * rng.normal() : 0.0);
  if (amp > 0.0) {
    int tries = 0;
    while (candidate < 0.0 && tries < kMaxResamples) {
      candidate = det + amp * rng.normal();
      ++tries;
    }
    *resamples += tries;
  }
  if (candidate < 0.0) return false;
  *result = candidate;
  return true;
}

}  // namespace

PairOutcome interact_pair(const ModelParams& p, double x, double y, double eps,
                          Rng& rng) {
  if (!(eps > 0.0) || !(x >= 0.0) || !(y >= 0.0)) {
    throw KinlvError(ErrorCode::Validation,
                     "interact_pair: need eps > 0 and nonnegative states");
  }
  const double pf = risk_exponent(p.risk_f);
  const double pg = risk_exponent(p.risk_g);
  // Both updates read the pre-interaction pair.
  const double det_x = x - eps * holling_phi(p, y) * x;
  const double det_y = y + eps * holling_psi(p, x) * y;
  const double amp_x =
      amplitude_base(x, pf, p.s0) * std::sqrt(eps * p.sigma_f * y / (1.0 + y));
  const double amp_y =
      amplitude_base(y, pg, p.s0) * std::sqrt(eps * p.sigma_g * x / (1.0 + x));
  PairOutcome out;
  out.x = x;
  out.y = y;
  out.skipped_x = !attempt_update(rng, det_x, amp_x, &out.x, &out.resamples);
  out.skipped_y = !attempt_update(rng, det_y, amp_y, &out.y, &out.resamples);
  return out;
}

double redistribute(const ModelParams& p, double value, double z, double eps,
                    bool deposits) {
  if (!(eps > 0.0) || !(value >= 0.0) || !(z >= 0.0)) {
    throw KinlvError(ErrorCode::Validation,
                     "redistribute: need eps > 0 and nonnegative inputs");
  }
  return deposits ? value + eps * p.alpha * (z - p.chi * value)
                  : value + eps * p.nu * (z - p.theta * value);
}

// --- Population kernel ---------------------------------------------------------

namespace {

// Running compensated sum so per-event mean updates stay O(1); resynced
// from the raw population at every output time.
struct RunningSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double v) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  // Tracks the affine population update x -> a x + b applied to n agents.
  void affine(double a, double b, double n) {
    sum = a * sum + n * b;
    comp *= a;
  }
  void reset(const std::vector<double>& xs) {
    sum = 0.0;
    comp = 0.0;
    for (double v : xs) add(v);
  }
};

struct AffineMap {
  double scale = 1.0;
  double shift = 0.0;
};

void apply_affine(std::vector<double>& xs, RunningSum& sum,
                  const AffineMap& map) {
  for (double& x : xs) x = map.scale * x + map.shift;
  sum.affine(map.scale, map.shift, static_cast<double>(xs.size()));
}

// Exact affine flow x -> scale x + shift of dx/dt = -a x + b with constant
// coefficients over a step h.
AffineMap const_coefficient_flow(double a, double b, double h) {
  const double z = -a * h;
  const double phi1 = std::fabs(z) < 1e-12 ? 1.0 : std::expm1(z) / z;
  return {std::exp(z), b * h * phi1};
}

// Mean-field transport state: population means plus the affine transport
// coefficients (p, q) of each species, so that x(t) = p x(0) + q solves
// dx/dt = -a(m(t)) x + b(m(t)) along the mean trajectory.
struct FlowState {
  double mf, mg, pf, qf, pg, qg;
};

FlowState flow_rhs(const ModelParams& p, const FlowState& s) {
  const double af = p.beta * s.mg + p.alpha * p.chi;
  const double bf = p.alpha * (1.0 + p.chi) * s.mf;
  const double ag = p.gamma * (p.mu - s.mf) + p.nu * p.theta;
  const double bg = p.nu * (1.0 + p.theta) * s.mg;
  return {p.alpha * s.mf - p.beta * s.mf * s.mg,
          -(p.gamma * p.mu - p.nu) * s.mg + p.gamma * s.mf * s.mg,
          -af * s.pf,
          -af * s.qf + bf,
          -ag * s.pg,
          -ag * s.qg + bg};
}

FlowState axpy(const FlowState& s, double h, const FlowState& d) {
  return {s.mf + h * d.mf, s.mg + h * d.mg, s.pf + h * d.pf, s.qf + h * d.qf,
          s.pg + h * d.pg, s.qg + h * d.qg};
}

// Classical RK4 on the 6-state transport system.
void rk4_advance(const ModelParams& p, FlowState& s, double h, int substeps) {
  const double hs = h / substeps;
  for (int step = 0; step < substeps; ++step) {
    const FlowState k1 = flow_rhs(p, s);
    const FlowState k2 = flow_rhs(p, axpy(s, 0.5 * hs, k1));
    const FlowState k3 = flow_rhs(p, axpy(s, 0.5 * hs, k2));
    const FlowState k4 = flow_rhs(p, axpy(s, hs, k3));
    s = {s.mf + hs / 6.0 * (k1.mf + 2.0 * k2.mf + 2.0 * k3.mf + k4.mf),
         s.mg + hs / 6.0 * (k1.mg + 2.0 * k2.mg + 2.0 * k3.mg + k4.mg),
         s.pf + hs / 6.0 * (k1.pf + 2.0 * k2.pf + 2.0 * k3.pf + k4.pf),
         s.qf + hs / 6.0 * (k1.qf + 2.0 * k2.qf + 2.0 * k3.qf + k4.qf),
         s.pg + hs / 6.0 * (k1.pg + 2.0 * k2.pg + 2.0 * k3.pg + k4.pg),
         s.qg + hs / 6.0 * (k1.qg + 2.0 * k2.qg + 2.0 * k3.qg + k4.qg)};
  }
}

struct EventStats {
  long long events = 0;
  long long skipped = 0;
};

// One expected noise event per member of xs: random target, random partner,
// multiplicative-amplitude Gaussian kick of per-event variance
// eps * sigma * sat(partner) * base(x)^2. Saturated mode evaluates the
// partner on the eps-scaled exchange, partner/(1 + eps partner).
void noise_kicks(std::vector<double>& xs, const std::vector<double>& partners,
                 RunningSum& sum, std::size_t count, double eps, double sigma,
                 Risk risk, double s0, bool saturated, Rng& rng,
                 EventStats& st) {
  if (sigma <= 0.0 || count == 0) return;
  const std::size_t n = xs.size();
  const std::size_t np = partners.size();
  const double pre = std::sqrt(eps * sigma);
  const double pexp = risk_exponent(risk);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = rng.uniform_index(n);
    const std::size_t j = rng.uniform_index(np);
    const double partner = partners[j];
    const double sat = saturated ? partner / (1.0 + eps * partner) : partner;
    const double x = xs[i];
    const double amp = pre * std::sqrt(sat) * amplitude_base(x, pexp, s0);
    ++st.events;
    if (amp <= 0.0) continue;
    double xi = rng.normal();
    double nx = x + amp * xi;
    int tries = 0;
    while (nx < 0.0 && tries < kMaxResamples) {
      xi = rng.normal();
      nx = x + amp * xi;
      ++tries;
    }
    if (nx < 0.0) {
      ++st.skipped;
      continue;
    }
    xs[i] = nx;
    sum.add(amp * xi);
  }
}

// Population-sampled resource: the mean part of the redistribution drift is
// already in the flow, so each event applies only the centered fluctuation
// coef * (donor - mean). Donors are redrawn when a kick would go negative.
void resource_kicks(std::vector<double>& xs, RunningSum& sum,
                    std::size_t count, double coef, Rng& rng, EventStats& st) {
  const std::size_t n = xs.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = rng.uniform_index(n);
    const double mean = sum.sum * inv_n;
    ++st.events;
    double delta = coef * (xs[rng.uniform_index(n)] - mean);
    double nx = xs[i] + delta;
    int tries = 0;
    while (nx < 0.0 && tries < kMaxResamples) {
      delta = coef * (xs[rng.uniform_index(n)] - mean);
      nx = xs[i] + delta;
      ++tries;
    }
    if (nx < 0.0) {
      ++st.skipped;
      continue;
    }
    xs[i] = nx;
    sum.add(delta);
  }
}

std::vector<double> init_population(std::size_t n, double mean, double cvv,
                                    DensityShape shape, InitSampling mode,
                                    Rng& rng) {
  std::vector<double> xs(n, mean);
  if (cvv <= 0.0) return xs;
  const AnalyticDist d = shape_from_moments(shape, mean, cvv);
  if (mode == InitSampling::Stratified) {
    // Midpoint quantiles; index order carries no dynamical meaning, so no
    // shuffle is needed.
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = d.quantile((static_cast<double>(i) + 0.5) /
                         static_cast<double>(n));
    }
    return xs;
  }
  for (std::size_t i = 0; i < n; ++i) {
    switch (d.family) {
      case DistFamily::Gamma:
        xs[i] = rng.gamma(d.a) / d.b;
        break;
      case DistFamily::LogNormal:
        xs[i] = std::exp(d.a + d.b * rng.normal());
        break;
      case DistFamily::Uniform:
        xs[i] = d.a + (d.b - d.a) * rng.uniform();
        break;
      default:
        xs[i] = d.quantile(rng.uniform());
        break;
    }
  }
  return xs;
}

struct SampleStats {
  double mean = 0.0;
  double var = 0.0;  // population convention, 1/n
  double m4 = 0.0;   // fourth central moment
};

SampleStats stats_of(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  RunningSum s;
  s.reset(xs);
  SampleStats out;
  out.mean = s.sum / n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - out.mean;
    const double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  out.var = m2 / n;
  out.m4 = m4 / n;
  return out;
}

}  // namespace

McResult run_mc(const ModelParams& p, const InitialConditions& ic,
                const McConfig& cfg) {
  {
    const ValidationResult vr = validate(p);
    if (!vr.ok()) throw KinlvError(ErrorCode::Validation, describe(vr));
    const ValidationResult vi = validate_initial(ic);
    if (!vi.ok()) throw KinlvError(ErrorCode::Validation, describe(vi));
  }
  if (cfg.n_agents < 2) {
    throw KinlvError(ErrorCode::Validation, "run_mc: need at least 2 agents");
  }
  if (!(cfg.epsilon > 0.0) || cfg.epsilon > 1.0) {
    throw KinlvError(ErrorCode::Validation, "run_mc: epsilon must be in (0, 1]");
  }
  if (!(cfg.t_end > 0.0)) {
    throw KinlvError(ErrorCode::Validation, "run_mc: t_end must be positive");
  }

  const std::size_t n = cfg.n_agents;
  const double eps = cfg.epsilon;
  const bool saturated = cfg.response == ResponseForm::Holling;

  // Round grid: full rounds of length eps plus one remainder round.
  std::vector<double> grid{0.0};
  {
    const std::size_t full =
        static_cast<std::size_t>(std::floor(cfg.t_end / eps + 1e-9));
    for (std::size_t k = 1; k <= full; ++k) {
      grid.push_back(static_cast<double>(k) * eps);
    }
    if (cfg.t_end - grid.back() > 1e-9 * std::max(1.0, cfg.t_end)) {
      grid.push_back(cfg.t_end);
    }
  }
  const std::size_t n_rounds = grid.size() - 1;

  auto snap_rounds = [&grid](std::vector<double> times) {
    std::sort(times.begin(), times.end());
    std::vector<std::size_t> idx;
    for (double t : times) {
      const auto it = std::lower_bound(grid.begin(), grid.end(), t);
      std::size_t k = static_cast<std::size_t>(it - grid.begin());
      if (k >= grid.size()) {
        k = grid.size() - 1;
      } else if (k > 0 && t - grid[k - 1] < grid[k] - t) {
        k -= 1;
      }
      if (idx.empty() || idx.back() != k) idx.push_back(k);
    }
    return idx;
  };

  std::vector<double> out_times = cfg.out_times;
  if (out_times.empty()) {
    out_times.resize(201);
    for (int i = 0; i <= 200; ++i) out_times[i] = cfg.t_end * i / 200.0;
  }
  const std::vector<std::size_t> out_rounds = snap_rounds(out_times);
  const std::vector<std::size_t> hist_rounds = snap_rounds(cfg.histogram_times);

  Rng master(cfg.seed);
  Rng rng_init = master.stream(0x11);
  Rng rng_noise = master.stream(0x22);
  Rng rng_resource = master.stream(0x33);

  std::vector<double> xs =
      init_population(n, ic.m_f0, ic.c_f0, ic.shape, cfg.init, rng_init);
  std::vector<double> ys =
      init_population(n, ic.m_g0, ic.c_g0, ic.shape, cfg.init, rng_init);

  RunningSum sum_f, sum_g;
  sum_f.reset(xs);
  sum_g.reset(ys);

  EventStats stats;
  const double coef_zf = eps * p.alpha * (1.0 + p.chi);
  const double coef_zg = eps * p.nu * (1.0 + p.theta);
  const double inv_n = 1.0 / static_cast<double>(n);

  // Half-round deterministic transport (Strang split around the kicks).
  auto half_flow = [&](double h) {
    if (saturated) {
      // Saturated responses averaged over the current population.
      double s_phi = 0.0, s_psi = 0.0;
      for (double y : ys) s_phi += y / (1.0 + eps * y);
      for (double x : xs) s_psi += (x - p.mu) / (1.0 + eps * x);
      s_phi *= inv_n;
      s_psi *= inv_n;
      const double mf = sum_f.sum * inv_n;
      const double mg = sum_g.sum * inv_n;
      const AffineMap map_f = const_coefficient_flow(
          p.beta * s_phi + p.alpha * p.chi, p.alpha * (1.0 + p.chi) * mf, h);
      const AffineMap map_g = const_coefficient_flow(
          p.nu * p.theta - p.gamma * s_psi, p.nu * (1.0 + p.theta) * mg, h);
      apply_affine(xs, sum_f, map_f);
      apply_affine(ys, sum_g, map_g);
      return;
    }
    FlowState s{sum_f.sum * inv_n, sum_g.sum * inv_n, 1.0, 0.0, 1.0, 0.0};
    const int substeps = 1 + static_cast<int>(h / 0.02);
    rk4_advance(p, s, h, substeps);
    apply_affine(xs, sum_f, {s.pf, s.qf});
    apply_affine(ys, sum_g, {s.pg, s.qg});
  };

  McResult result;
  std::size_t out_pos = 0, hist_pos = 0;

  auto emit = [&](std::size_t round_idx) {
    while (out_pos < out_rounds.size() && out_rounds[out_pos] == round_idx) {
      sum_f.reset(xs);
      sum_g.reset(ys);
      const SampleStats sf = stats_of(xs);
      const SampleStats sg = stats_of(ys);
      McMomentRow row;
      row.t = grid[round_idx];
      row.m_f = sf.mean;
      row.m_g = sg.mean;
      row.v_f = sf.var;
      row.v_g = sg.var;
      row.c_f = sf.mean > 0.0 ? std::sqrt(sf.var) / sf.mean : 0.0;
      row.c_g = sg.mean > 0.0 ? std::sqrt(sg.var) / sg.mean : 0.0;
      if (cfg.with_gini) {
        row.gini_f = sf.mean > 0.0 ? gini_of(std::span<const double>(xs)) : 0.0;
        row.gini_g = sg.mean > 0.0 ? gini_of(std::span<const double>(ys)) : 0.0;
      }
      const double dn = static_cast<double>(n);
      row.se_m_f = std::sqrt(sf.var / dn);
      row.se_m_g = std::sqrt(sg.var / dn);
      row.se_v_f = std::sqrt(std::max(0.0, sf.m4 - sf.var * sf.var) / dn);
      row.se_v_g = std::sqrt(std::max(0.0, sg.m4 - sg.var * sg.var) / dn);
      row.skipped = stats.skipped;
      result.rows.push_back(row);
      ++out_pos;
    }
    while (hist_pos < hist_rounds.size() && hist_rounds[hist_pos] == round_idx) {
      double x_max = 0.0;
      for (double x : xs) x_max = std::max(x_max, x);
      for (double y : ys) x_max = std::max(x_max, y);
      x_max = std::max(x_max, 1e-12);
      constexpr int kBins = 200;
      McHistogram h;
      h.t = grid[round_idx];
      h.x_max = x_max;
      h.density_f.assign(kBins, 0.0);
      h.density_g.assign(kBins, 0.0);
      const double width = x_max / kBins;
      auto deposit = [&](std::vector<double>& dens, double v) {
        int b = static_cast<int>(v / width);
        if (b >= kBins) b = kBins - 1;
        if (b < 0) b = 0;
        dens[static_cast<std::size_t>(b)] += 1.0;
      };
      for (double x : xs) deposit(h.density_f, x);
      for (double y : ys) deposit(h.density_g, y);
      const double norm = 1.0 / (static_cast<double>(n) * width);
      for (double& d : h.density_f) d *= norm;
      for (double& d : h.density_g) d *= norm;
      result.histograms.push_back(std::move(h));
      ++hist_pos;
    }
  };

  emit(0);
  for (std::size_t r = 1; r <= n_rounds; ++r) {
    const double h = grid[r] - grid[r - 1];
    // Remainder rounds scale the event count, not the per-event exchange.
    const std::size_t count = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * h / eps));
    half_flow(0.5 * h);
    noise_kicks(xs, ys, sum_f, count, eps, p.sigma_f, p.risk_f, p.s0, saturated,
                rng_noise, stats);
    noise_kicks(ys, xs, sum_g, count, eps, p.sigma_g, p.risk_g, p.s0, saturated,
                rng_noise, stats);
    if (cfg.resource == ResourceSampling::Population) {
      resource_kicks(xs, sum_f, count, coef_zf, rng_resource, stats);
      resource_kicks(ys, sum_g, count, coef_zg, rng_resource, stats);
    }
    half_flow(0.5 * h);
    if (stats.events > 100 &&
        stats.skipped * 100 > stats.events) {
      throw KinlvError(
          ErrorCode::Numerical,
          "run_mc: resampling exhaustion above 1% of events at t = " +
              std::to_string(grid[r]) + " (" + std::to_string(stats.skipped) +
              " of " + std::to_string(stats.events) + ")");
    }
    emit(r);
  }

  result.final_xs = std::move(xs);
  result.final_ys = std::move(ys);
  result.skipped_events = stats.skipped;
  result.noise_events = stats.events;
  return result;
}

namespace {

// Central third and fourth moments of the initial sample, from the shape
// family at (mean, cv). Only the scatter of a random draw needs these; the
// transported closure below always uses the gamma forms.
void initial_central_moments(DensityShape shape, double mean, double cvv,
                             double* mu3, double* mu4) {
  const double v = cvv * cvv * mean * mean;
  switch (shape) {
    case DensityShape::Gamma:
      *mu3 = 2.0 * v * v / mean;
      *mu4 = 3.0 * v * v + 6.0 * v * v * v / (mean * mean);
      return;
    case DensityShape::LogNormal: {
      const double w = 1.0 + cvv * cvv;
      *mu3 = (cvv * cvv + 3.0) * cvv * v * std::sqrt(v);
      *mu4 = (((w + 2.0) * w + 3.0) * w * w - 3.0) * v * v;
      return;
    }
    case DensityShape::Uniform:
      *mu3 = 0.0;
      *mu4 = 1.8 * v * v;
      return;
  }
  *mu3 = 0.0;
  *mu4 = 3.0 * v * v;
}

}  // namespace

std::vector<MomentEnvelope> sampling_envelope(const ModelParams& p,
                                              const InitialConditions& ic,
                                              const McConfig& cfg) {
  {
    const ValidationResult vr = validate(p);
    if (!vr.ok()) throw KinlvError(ErrorCode::Validation, describe(vr));
    const ValidationResult vi = validate_initial(ic);
    if (!vi.ok()) throw KinlvError(ErrorCode::Validation, describe(vi));
  }
  if (cfg.n_agents < 2) {
    throw KinlvError(ErrorCode::Validation,
                     "sampling_envelope: need at least 2 agents");
  }
  if (!(cfg.t_end > 0.0)) {
    throw KinlvError(ErrorCode::Validation,
                     "sampling_envelope: t_end must be positive");
  }
  if (p.risk_f != Risk::Half) {
    throw KinlvError(ErrorCode::Validation,
                     "sampling_envelope: no variance system for risk_f = 1");
  }

  const bool mixed = p.risk_g == Risk::One;
  const double inv_n = 1.0 / static_cast<double>(cfg.n_agents);

  // State: (m_f, m_g, v_f, v_g) plus the packed upper triangle of their
  // sampling covariance C, row-major (C11 C12 C13 C14 C22 ... C44).
  constexpr int kDim = 14;
  constexpr int kOff[4] = {0, 4, 7, 9};
  auto cidx = [&](int i, int j) {
    if (i > j) std::swap(i, j);
    return 4 + kOff[i] + (j - i);
  };

  auto moment_field = [&](const double* u, double* du) {
    const auto dm = lv_rhs(p, u[0], u[1]);
    const auto dv = mixed
                        ? variance_rhs_mixed(p, u[0], u[1], u[2], u[3], true)
                        : variance_rhs_p12(p, u[0], u[1], u[2], u[3]);
    du[0] = dm[0];
    du[1] = dm[1];
    du[2] = dv[0];
    du[3] = dv[1];
  };

  const bool population = cfg.resource == ResourceSampling::Population;
  const double zf2 = p.alpha * p.alpha * (1.0 + p.chi) * (1.0 + p.chi);
  const double zg2 = p.nu * p.nu * (1.0 + p.theta) * (1.0 + p.theta);

  OdeRhs rhs = [&, zf2, zg2, population](double, const double* u, double* du) {
    moment_field(u, du);

    double jac[4][4];
    double up[4], um[4], fp[4], fm[4];
    for (int j = 0; j < 4; ++j) {
      const double h = 1e-6 * std::max(1.0, std::fabs(u[j]));
      for (int k = 0; k < 4; ++k) up[k] = um[k] = u[k];
      up[j] += h;
      um[j] -= h;
      moment_field(up, fp);
      moment_field(um, fm);
      for (int i = 0; i < 4; ++i) jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
    }

    const double m_f = u[0], m_g = u[1];
    const double v_f = std::max(0.0, u[2]), v_g = std::max(0.0, u[3]);
    // Gamma closure for the transported third/fourth central moments.
    const double mu3_f = 2.0 * v_f * v_f / m_f;
    const double mu3_g = 2.0 * v_g * v_g / m_g;

    double q[4][4] = {};
    q[0][0] = p.sigma_f * m_g * m_f;
    q[0][2] = 2.0 * p.sigma_f * m_g * v_f;
    q[2][2] = 4.0 * p.sigma_f * m_g * (mu3_f + m_f * v_f);
    if (mixed) {
      const double mu4_g =
          3.0 * v_g * v_g + 6.0 * v_g * v_g * v_g / (m_g * m_g);
      q[1][1] = p.sigma_g * m_f * (m_g * m_g + v_g);
      q[1][3] = 2.0 * p.sigma_g * m_f * (2.0 * m_g * v_g + mu3_g);
      q[3][3] = 4.0 * p.sigma_g * m_f *
                (m_g * m_g * v_g + 2.0 * m_g * mu3_g + mu4_g);
    } else {
      q[1][1] = p.sigma_g * m_f * m_g;
      q[1][3] = 2.0 * p.sigma_g * m_f * v_g;
      q[3][3] = 4.0 * p.sigma_g * m_f * (mu3_g + m_g * v_g);
    }
    if (population) {
      q[0][0] += cfg.epsilon * zf2 * v_f;
      q[2][2] += 4.0 * cfg.epsilon * zf2 * v_f * v_f;
      q[1][1] += cfg.epsilon * zg2 * v_g;
      q[3][3] += 4.0 * cfg.epsilon * zg2 * v_g * v_g;
    }

    double c[4][4];
    for (int i = 0; i < 4; ++i) {
      for (int j = i; j < 4; ++j) c[i][j] = c[j][i] = u[cidx(i, j)];
    }
    for (int i = 0; i < 4; ++i) {
      for (int j = i; j < 4; ++j) {
        double s = q[i][j] * inv_n;
        for (int k = 0; k < 4; ++k) {
          s += jac[i][k] * c[k][j] + c[i][k] * jac[j][k];
        }
        du[cidx(i, j)] = s;
      }
    }
  };

  std::vector<double> u0(kDim, 0.0);
  u0[0] = ic.m_f0;
  u0[1] = ic.m_g0;
  u0[2] = ic.c_f0 * ic.c_f0 * ic.m_f0 * ic.m_f0;
  u0[3] = ic.c_g0 * ic.c_g0 * ic.m_g0 * ic.m_g0;
  if (cfg.init == InitSampling::Random) {
    double mu3_f0, mu4_f0, mu3_g0, mu4_g0;
    initial_central_moments(ic.shape, ic.m_f0, ic.c_f0, &mu3_f0, &mu4_f0);
    initial_central_moments(ic.shape, ic.m_g0, ic.c_g0, &mu3_g0, &mu4_g0);
    u0[cidx(0, 0)] = u0[2] * inv_n;
    u0[cidx(0, 2)] = mu3_f0 * inv_n;
    u0[cidx(2, 2)] = std::max(0.0, mu4_f0 - u0[2] * u0[2]) * inv_n;
    u0[cidx(1, 1)] = u0[3] * inv_n;
    u0[cidx(1, 3)] = mu3_g0 * inv_n;
    u0[cidx(3, 3)] = std::max(0.0, mu4_g0 - u0[3] * u0[3]) * inv_n;
  }

  std::vector<StateSign> signs(kDim, StateSign::Free);
  signs[0] = signs[1] = StateSign::Positive;
  signs[2] = signs[3] = StateSign::NonNegative;
  const OdeSolution sol = integrate(rhs, u0, 0.0, cfg.t_end, OdeConfig{}, signs);

  std::vector<double> times = cfg.out_times;
  if (times.empty()) {
    times.resize(201);
    for (int i = 0; i <= 200; ++i) times[i] = cfg.t_end * i / 200.0;
  }
  std::sort(times.begin(), times.end());

  std::vector<MomentEnvelope> rows;
  rows.reserve(times.size());
  std::vector<double> u(kDim);
  for (double t : times) {
    const double tc = std::min(std::max(t, 0.0), cfg.t_end);
    sol.eval(tc, u.data());
    MomentEnvelope row;
    row.t = tc;
    row.se_m_f = std::sqrt(std::max(0.0, u[cidx(0, 0)]));
    row.se_m_g = std::sqrt(std::max(0.0, u[cidx(1, 1)]));
    row.se_v_f = std::sqrt(std::max(0.0, u[cidx(2, 2)]));
    row.se_v_g = std::sqrt(std::max(0.0, u[cidx(3, 3)]));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace kinlv

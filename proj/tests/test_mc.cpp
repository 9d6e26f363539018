#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "kinlv/errors.hpp"
#include "kinlv/mc.hpp"
#include "kinlv/ode.hpp"
#include "kinlv/rng.hpp"

using namespace kinlv;

namespace {

std::vector<double> uniform_times(double t0, double t1, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(t0 + (t1 - t0) * static_cast<double>(i) / (n - 1));
  }
  return out;
}

}  // namespace

TEST_CASE("saturated response values and limits") {
  ModelParams p;
  CHECK(holling_phi(p, 0.0) == 0.0);
  CHECK(holling_phi(p, 1.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(holling_phi(p, 1e12) == doctest::Approx(p.beta).epsilon(1e-9));
  CHECK(holling_psi(p, 1.0) == doctest::Approx(-0.675).epsilon(1e-15));
  CHECK(holling_psi(p, p.mu) == 0.0);
  CHECK(holling_psi(p, 1e12) == doctest::Approx(p.gamma).epsilon(1e-9));
}

TEST_CASE("noise-free exchange at unit scale matches the hand values") {
  ModelParams p;
  p.sigma_f = 0.0;
  p.sigma_g = 0.0;
  Rng rng(1);
  const auto out = interact_pair(p, 1.0, 1.0, 1.0, rng);
  // x' = 1 - phi(1)*1 = 0.75; y' = 1 + psi(1)*1 = 0.325, both from the
  // pre-interaction pair.
  CHECK(out.x == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(out.y == doctest::Approx(0.325).epsilon(1e-15));
  CHECK(!out.skipped_x);
  CHECK(!out.skipped_y);
}

TEST_CASE("zero state without noise is absorbing in the exchange") {
  ModelParams p;
  p.sigma_f = 0.0;
  p.sigma_g = 0.0;
  Rng rng(2);
  const auto out = interact_pair(p, 0.0, 1.0, 1.0, rng);
  CHECK(out.x == 0.0);
}

TEST_CASE("exchange noise has the contracted conditional mean and variance") {
  ModelParams p;  // sigma_f = sigma_g = 1e-3
  const double x = 2.0, y = 3.0, eps = 0.5;
  const double det_x = x - eps * holling_phi(p, y) * x;
  const double var_x = eps * p.sigma_f * y / (1.0 + y) * x;  // amplitude x^(1/2)
  Rng rng(20240602);
  const int n = 1000000;
  double acc = 0.0, acc2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto out = interact_pair(p, x, y, eps, rng);
    const double d = out.x - det_x;
    acc += d;
    acc2 += d * d;
  }
  const double mean_dev = acc / n;
  const double var_emp = acc2 / n;
  const double se_mean = std::sqrt(var_x / n);
  CHECK(std::fabs(mean_dev) <= 4.0 * se_mean);
  // Fourth moment of a Gaussian: var(d^2) = 2 var^2.
  const double se_var = std::sqrt(2.0 / n) * var_x;
  CHECK(std::fabs(var_emp - var_x) <= 4.0 * se_var);
}

TEST_CASE("exchange scales continuously to the identity as eps vanishes") {
  ModelParams p;
  p.sigma_f = 0.0;
  p.sigma_g = 0.0;
  Rng rng(3);
  const auto out = interact_pair(p, 2.0, 3.0, 1e-12, rng);
  CHECK(out.x == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(out.y == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("resource update hand values and fixed point") {
  ModelParams p;
  // x = 2, z = 3, alpha = 1, chi = 0.8, eps = 1 -> 2 + (3 - 1.6) = 3.4.
  CHECK(redistribute(p, 2.0, 3.0, 1.0, true) ==
        doctest::Approx(3.4).epsilon(1e-15));
  // z = chi x keeps the state unchanged.
  CHECK(redistribute(p, 2.5, 0.8 * 2.5, 1.0, true) ==
        doctest::Approx(2.5).epsilon(1e-15));
  // Loans use nu and theta.
  CHECK(redistribute(p, 2.0, 3.0, 0.5, false) ==
        doctest::Approx(2.0 + 0.5 * (3.0 - 0.8)).epsilon(1e-15));
  // Rates are validated, so a degenerate round length is rejected.
  CHECK_THROWS_AS(redistribute(p, 2.0, 9.0, 0.0, true), KinlvError);
}

TEST_CASE("population runs are deterministic and positive") {
  ModelParams p;
  InitialConditions ic;
  McConfig cfg;
  cfg.n_agents = 2000;
  cfg.t_end = 2.0;
  cfg.out_times = uniform_times(0.0, 2.0, 5);
  cfg.with_gini = true;
  const auto a = run_mc(p, ic, cfg);
  const auto b = run_mc(p, ic, cfg);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].m_f == b.rows[i].m_f);
    CHECK(a.rows[i].v_g == b.rows[i].v_g);
    CHECK(a.rows[i].gini_f == b.rows[i].gini_f);
  }
  for (double x : a.final_xs) CHECK(x >= 0.0);
  for (double y : a.final_ys) CHECK(y >= 0.0);
  CHECK(a.skipped_events == 0);

  McConfig other = cfg;
  other.seed ^= 0x1234;
  const auto c = run_mc(p, ic, other);
  CHECK(a.rows.back().m_f != c.rows.back().m_f);
}

TEST_CASE("noise-free stratified runs are seed independent") {
  ModelParams p;
  p.sigma_f = 0.0;
  p.sigma_g = 0.0;
  InitialConditions ic;
  McConfig cfg;
  cfg.n_agents = 1000;
  cfg.t_end = 1.0;
  cfg.out_times = {1.0};
  cfg.init = InitSampling::Stratified;
  const auto a = run_mc(p, ic, cfg);
  McConfig other = cfg;
  other.seed ^= 0xbeef;
  const auto b = run_mc(p, ic, other);
  CHECK(a.rows.back().m_f == b.rows.back().m_f);
  CHECK(a.rows.back().v_f == b.rows.back().v_f);
}

TEST_CASE("noise-free transport follows the mean system exactly") {
  ModelParams p;
  p.sigma_f = 0.0;
  p.sigma_g = 0.0;
  InitialConditions ic;
  ic.c_f0 = 0.0;  // point-mass start: every agent rides the mean orbit
  ic.c_g0 = 0.0;
  McConfig cfg;
  cfg.n_agents = 100;
  cfg.epsilon = 0.01;
  cfg.t_end = 5.0;
  cfg.out_times = uniform_times(0.0, 5.0, 11);
  cfg.with_gini = false;
  const auto res = run_mc(p, ic, cfg);
  const auto means = integrate_means(p, ic.m_f0, ic.m_g0, 5.0);
  for (const auto& row : res.rows) {
    CHECK(row.m_f == doctest::Approx(means.m_f(row.t)).epsilon(1e-7));
    CHECK(row.m_g == doctest::Approx(means.m_g(row.t)).epsilon(1e-7));
    CHECK(row.v_f <= 1e-18);
    CHECK(row.v_g <= 1e-18);
  }
}

TEST_CASE("moments track the coupled variance system within sampling error") {
  ModelParams p;
  InitialConditions ic;
  McConfig cfg;
  cfg.n_agents = 20000;
  cfg.epsilon = 0.01;
  cfg.t_end = 6.0;
  cfg.out_times = uniform_times(0.0, 6.0, 13);
  cfg.with_gini = false;
  const auto res = run_mc(p, ic, cfg);
  const auto ref = integrate_means_variances(p, ic, 6.0, cfg.out_times,
                                             RiskRegime::HalfHalf);
  // Deviations from the moment ODEs are measured against the propagated
  // envelope; the per-row errors ignore the mean-field feedback and collapse
  // with the population cv while the orbit-level wander does not.
  const auto env = sampling_envelope(p, ic, cfg);
  REQUIRE(res.rows.size() == ref.size());
  REQUIRE(env.size() == ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const auto& r = res.rows[i];
    CHECK(std::fabs(r.m_f - ref[i].m_f) <= 4.0 * env[i].se_m_f);
    CHECK(std::fabs(r.m_g - ref[i].m_g) <= 4.0 * env[i].se_m_g);
    CHECK(std::fabs(r.v_f - ref[i].v_f) <= 4.0 * env[i].se_v_f);
    CHECK(std::fabs(r.v_g - ref[i].v_g) <= 4.0 * env[i].se_v_g);
  }
}

TEST_CASE("full-risk loans track the mixed variance system") {
  ModelParams p;
  p.risk_g = Risk::One;
  InitialConditions ic;
  McConfig cfg;
  cfg.n_agents = 20000;
  cfg.epsilon = 0.01;
  cfg.t_end = 5.0;
  cfg.out_times = {1.0, 3.0, 5.0};
  cfg.with_gini = false;
  const auto res = run_mc(p, ic, cfg);
  const auto ref = integrate_means_variances(p, ic, 5.0, cfg.out_times,
                                             RiskRegime::HalfOne, true);
  const auto env = sampling_envelope(p, ic, cfg);
  REQUIRE(res.rows.size() == ref.size());
  REQUIRE(env.size() == ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const auto& r = res.rows[i];
    CHECK(std::fabs(r.m_g - ref[i].m_g) <= 4.0 * env[i].se_m_g);
    CHECK(std::fabs(r.v_g - ref[i].v_g) <= 4.0 * env[i].se_v_g);
  }
}

TEST_CASE("population resource sampling preserves the mean drift") {
  ModelParams p;
  InitialConditions ic;
  McConfig cfg;
  cfg.n_agents = 20000;
  cfg.epsilon = 0.01;
  cfg.t_end = 4.0;
  cfg.out_times = {2.0, 4.0};
  cfg.resource = ResourceSampling::Population;
  cfg.with_gini = false;
  const auto res = run_mc(p, ic, cfg);
  const auto means = integrate_means(p, ic.m_f0, ic.m_g0, 4.0);
  const auto env = sampling_envelope(p, ic, cfg);
  REQUIRE(res.rows.size() == env.size());
  for (std::size_t i = 0; i < env.size(); ++i) {
    const auto& row = res.rows[i];
    CHECK(std::fabs(row.m_f - means.m_f(row.t)) <= 4.0 * env[i].se_m_f);
    CHECK(std::fabs(row.m_g - means.m_g(row.t)) <= 4.0 * env[i].se_m_g);
  }
}

TEST_CASE("output times snap onto the event-round grid") {
  ModelParams p;
  InitialConditions ic;
  McConfig cfg;
  cfg.n_agents = 50;
  cfg.epsilon = 0.01;
  cfg.t_end = 0.1;
  cfg.out_times = {0.013, 0.052, 0.1};
  cfg.with_gini = false;
  const auto res = run_mc(p, ic, cfg);
  for (const auto& row : res.rows) {
    const double rounds = row.t / cfg.epsilon;
    CHECK(std::fabs(rounds - std::round(rounds)) < 1e-9);
  }
}

TEST_CASE("histograms span both species with unit discrete mass") {
  ModelParams p;
  InitialConditions ic;
  McConfig cfg;
  cfg.n_agents = 5000;
  cfg.t_end = 1.0;
  cfg.out_times = {1.0};
  cfg.histogram_times = {1.0};
  cfg.with_gini = false;
  const auto res = run_mc(p, ic, cfg);
  REQUIRE(res.histograms.size() == 1);
  const auto& h = res.histograms.front();
  REQUIRE(h.density_f.size() == 200);
  REQUIRE(h.density_g.size() == 200);
  const double dx = h.x_max / 200.0;
  double mass_f = 0.0, mass_g = 0.0;
  for (std::size_t i = 0; i < 200; ++i) {
    mass_f += h.density_f[i] * dx;
    mass_g += h.density_g[i] * dx;
  }
  CHECK(mass_f == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(mass_g == doctest::Approx(1.0).epsilon(1e-9));
  const double max_x = *std::max_element(res.final_xs.begin(),
                                         res.final_xs.end());
  const double max_y = *std::max_element(res.final_ys.begin(),
                                         res.final_ys.end());
  CHECK(h.x_max >= std::max(max_x, max_y) * (1.0 - 1e-12));
}

TEST_CASE("gini columns populate when requested") {
  ModelParams p;
  InitialConditions ic;
  McConfig cfg;
  cfg.n_agents = 2000;
  cfg.t_end = 0.5;
  cfg.out_times = {0.0, 0.5};
  cfg.with_gini = true;
  const auto res = run_mc(p, ic, cfg);
  for (const auto& row : res.rows) {
    CHECK(row.gini_f > 0.0);
    CHECK(row.gini_f < 1.0);
    CHECK(row.gini_g > 0.0);
    CHECK(row.gini_g < 1.0);
  }
}

TEST_CASE("saturated-response runs land near the mean system at small eps") {
  ModelParams p;
  p.sigma_f = 0.0;
  p.sigma_g = 0.0;
  InitialConditions ic;
  McConfig cfg;
  cfg.n_agents = 4000;
  cfg.epsilon = 0.01;
  cfg.t_end = 4.0;
  cfg.out_times = {4.0};
  cfg.response = ResponseForm::Holling;
  cfg.init = InitSampling::Stratified;
  cfg.with_gini = false;
  const auto res = run_mc(p, ic, cfg);
  const auto means = integrate_means(p, ic.m_f0, ic.m_g0, 4.0);
  // O(eps) model distance: close, but measurably apart from the exact flow.
  CHECK(std::fabs(res.rows.back().m_f - means.m_f(4.0)) < 0.2);
  CHECK(std::fabs(res.rows.back().m_f - means.m_f(4.0)) > 1e-6);
}

TEST_CASE("invalid run configurations are rejected up front") {
  ModelParams p;
  InitialConditions ic;
  McConfig cfg;
  cfg.n_agents = 1;
  CHECK_THROWS_AS(run_mc(p, ic, cfg), KinlvError);
  cfg.n_agents = 100;
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(run_mc(p, ic, cfg), KinlvError);
  cfg.epsilon = 1.5;
  CHECK_THROWS_AS(run_mc(p, ic, cfg), KinlvError);
  cfg.epsilon = 0.01;
  cfg.t_end = 0.0;
  CHECK_THROWS_AS(run_mc(p, ic, cfg), KinlvError);
}

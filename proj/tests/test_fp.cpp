#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "kinlv/distributions.hpp"
#include "kinlv/fp.hpp"
#include "kinlv/inequality.hpp"
#include "kinlv/params.hpp"

using namespace kinlv;

namespace {

// Relative L1 distance between two densities on one mesh, both mass
// normalized first so that shape is compared, not leaked tail mass.
double rel_l1(const GridDensity& a, const GridDensity& b) {
  const double ma = a.mass(), mb = b.mass();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.f.size(); ++i) {
    acc += std::fabs(a.f[i] / ma - b.f[i] / mb);
  }
  return acc * a.mesh.dx();
}

GridDensity normalized(GridDensity g) {
  const double m = g.mass();
  for (auto& v : g.f) v /= m;
  return g;
}

}  // namespace

TEST_CASE("deposit coefficients: degenerate diffusion and inward drift at zero") {
  ModelParams p;
  const auto c0 = fp_coefficients_p12(p, 0.0, 4.0, 3.0, Species::Deposits);
  CHECK(c0.diffusion == 0.0);
  CHECK(c0.drift == doctest::Approx(-1.8 * 4.0).epsilon(1e-14));
  CHECK(c0.drift < 0.0);
}

TEST_CASE("deposit drift vanishes at the mean when means are stationary") {
  ModelParams p;
  const double mf = p.fixed_point_f(), mg = p.fixed_point_g();
  const auto c = fp_coefficients_p12(p, mf, mf, mg, Species::Deposits);
  // (0.5*2 + 0.8) x - 1.8 * (10/3) = 0 at x = 10/3.
  CHECK(std::fabs(c.drift) < 1e-13);
}

TEST_CASE("deposit diffusion is linear in the loan mean") {
  ModelParams p;
  const auto c1 = fp_coefficients_p12(p, 2.5, 4.0, 3.0, Species::Deposits);
  const auto c2 = fp_coefficients_p12(p, 2.5, 4.0, 6.0, Species::Deposits);
  CHECK(c2.diffusion == doctest::Approx(2.0 * c1.diffusion).epsilon(1e-14));
}

TEST_CASE("loan coefficients in both risk regimes") {
  ModelParams p;
  const double mf = p.fixed_point_f(), mg = p.fixed_point_g();

  const auto half = fp_coefficients_p12(p, mg, mf, mg, Species::Loans);
  CHECK(std::fabs(half.drift) < 1e-13);  // stationary means, y = m_g

  const auto one = fp_coefficients_p1_loans(p, mg, mf, mg);
  CHECK(one.drift == doctest::Approx(half.drift).scale(1.0).epsilon(1e-13));

  // Doubly degenerate diffusion at the origin.
  const auto at0 = fp_coefficients_p1_loans(p, 0.0, mf, mg);
  CHECK(at0.diffusion == 0.0);
  const auto near0 = fp_coefficients_p1_loans(p, 1e-9, mf, mg);
  CHECK(near0.diffusion / 1e-9 < 1e-5);

  ModelParams q = p;
  q.sigma_g = 0.0;
  const auto transport = fp_coefficients_p1_loans(q, 1.7, mf, mg);
  CHECK(transport.diffusion == 0.0);
  CHECK(transport.drift ==
        doctest::Approx(fp_coefficients_p12(q, 1.7, mf, mg,
                                            Species::Loans).drift)
            .epsilon(1e-14));
}

TEST_CASE("edge coefficients sample the pointwise model at interior edges") {
  ModelParams p;
  Mesh1D mesh{8.0, 64};
  const auto ec = edge_coefficients(mesh, FpModel::DepositsHalf, p, 4.0, 3.0);
  REQUIRE(ec.diffusion.size() == mesh.n_cells - 1);
  for (std::size_t e = 0; e < ec.diffusion.size(); e += 13) {
    const double x = mesh.right(e);
    const auto c = fp_coefficients_p12(p, x, 4.0, 3.0, Species::Deposits);
    CHECK(ec.diffusion[e] == doctest::Approx(c.diffusion).epsilon(1e-14));
    CHECK(ec.drift_total[e] == doctest::Approx(c.drift_total).epsilon(1e-14));
  }
}

TEST_CASE("one step conserves mass and keeps cells nonnegative") {
  ModelParams p;
  Mesh1D mesh{10.0, 256};
  auto g = discretize(make_gamma(4.0, 1.2), mesh);
  const auto ec = edge_coefficients(mesh, FpModel::DepositsHalf, p, 4.0, 3.0);
  const double mass0 = g.mass();
  double drift = 0.0;
  for (int s = 0; s < 200; ++s) {
    REQUIRE(cc_step(g, ec, 1e-3, &drift));
    CHECK(drift <= 1e-12);
    for (double v : g.f) REQUIRE(v >= 0.0);
  }
  CHECK(std::fabs(g.mass() - mass0) <= 1e-10 * mass0);
}

TEST_CASE("the discrete equilibrium is flux free and step invariant") {
  ModelParams p;
  const double mf = p.fixed_point_f(), mg = p.fixed_point_g();
  Mesh1D mesh{6.0, 512};
  const auto ec = edge_coefficients(mesh, FpModel::DepositsHalf, p, mf, mg);
  const auto eq = discrete_equilibrium(mesh, ec);
  CHECK(eq.mass() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(total_flux(eq, ec) < 1e-10);

  GridDensity stepped = eq;
  for (int s = 0; s < 50; ++s) REQUIRE(cc_step(stepped, ec, 5e-3));
  CHECK(rel_l1(stepped, eq) < 1e-11);
}

TEST_CASE("frozen-mean runs settle onto the closed-form quasi-stationary state") {
  ModelParams p;
  const double mf = p.fixed_point_f(), mg = p.fixed_point_g();

  // The settled widths are ~1% of the means, so the domain is kept snug;
  // the automatic 3x sizing targets transients, not frozen profiles.
  FpRunConfig cfg;
  cfg.n_cells = 1024;
  cfg.x_max_f = 5.0;
  cfg.x_max_g = 5.0;
  cfg.t_end = 10.0;
  cfg.out_times = {10.0};
  cfg.self_consistent = false;
  cfg.frozen_m_f = mf;
  cfg.frozen_m_g = mg;
  cfg.keep_snapshots = true;

  InitialConditions ic;
  ic.m_f0 = mf;
  ic.m_g0 = mg;
  ic.c_f0 = 0.1;  // start well away from the quasi-stationary width
  ic.c_g0 = 0.1;
  const auto res = run_fp(p, ic, cfg);
  REQUIRE(!res.snapshots.empty());

  const auto ref_f = normalized(
      discretize(quasi_eq_deposits(p, mf, mg), res.mesh_f));
  const auto ref_g = normalized(
      discretize(quasi_eq_loans_half(p, mf, mg), res.mesh_g));
  CHECK(rel_l1(res.snapshots.back().f, ref_f) <= 1e-3);
  CHECK(rel_l1(res.snapshots.back().g, ref_g) <= 1e-3);
  CHECK(res.max_mass_drift <= 1e-10);
}

TEST_CASE("stationary-mean wealth run holds the fat-tail profile") {
  // sigma = 0.5 gives the shape-5, rate-4m profile around a unit mean.
  const double sigma = 0.5, m = 1.0;
  Mesh1D mesh{15.0, 1024};
  const auto ref = normalized(discretize(make_inverse_gamma(5.0, 4.0), mesh));
  const auto res = run_fp_wealth(sigma, m, ref, 5.0);
  CHECK(rel_l1(res.density, ref) <= 2e-4);
  CHECK(res.max_mass_drift <= 1e-10);
}

TEST_CASE("grid refinement converges at second order on the frozen state") {
  ModelParams p;
  p.sigma_f = 0.1;  // wide equilibrium, resolvable on coarse meshes
  const double mf = p.fixed_point_f(), mg = p.fixed_point_g();

  auto run_error = [&](int cells) {
    FpRunConfig cfg;
    cfg.n_cells = cells;
    cfg.x_max_f = 8.0;
    cfg.x_max_g = 8.0;
    cfg.t_end = 8.0;
    cfg.out_times = {8.0};
    cfg.self_consistent = false;
    cfg.frozen_m_f = mf;
    cfg.frozen_m_g = mg;
    InitialConditions ic;
    ic.m_f0 = mf;
    ic.m_g0 = mg;
    ic.c_f0 = 0.3;
    ic.c_g0 = 0.3;
    const auto res = run_fp(p, ic, cfg);
    const auto ref = normalized(
        discretize(quasi_eq_deposits(p, mf, mg), res.mesh_f));
    return rel_l1(res.snapshots.back().f, ref);
  };

  const double coarse = run_error(256);
  const double fine = run_error(512);
  REQUIRE(fine > 0.0);
  const double order = std::log2(coarse / fine);
  CHECK(order >= 1.8);
}

TEST_CASE("self-consistent runs conserve mass and reproduce the initial moments") {
  ModelParams p;
  InitialConditions ic;
  ic.c_f0 = 0.25;  // fits comfortably inside the automatic domain
  ic.c_g0 = 0.25;
  FpRunConfig cfg;
  cfg.n_cells = 512;
  cfg.x_max_f = 20.0;
  cfg.x_max_g = 20.0;
  cfg.t_end = 2.0;
  cfg.out_times = {0.0, 1.0, 2.0};
  cfg.keep_snapshots = false;
  const auto res = run_fp(p, ic, cfg);
  REQUIRE(res.moments.size() == 3);
  CHECK(res.init_truncated_f < 1e-12);
  CHECK(res.init_truncated_g < 1e-12);
  const auto& first = res.moments.front();
  CHECK(first.m_f == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(first.m_g == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(first.c_f == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(first.c_g == doctest::Approx(0.25).epsilon(1e-6));
  for (const auto& row : res.moments) {
    CHECK(std::fabs(row.mass_f - 1.0) <= 1e-10);
    CHECK(std::fabs(row.mass_g - 1.0) <= 1e-10);
  }
}

TEST_CASE("heavy-tailed starts report their truncated mass honestly") {
  ModelParams p;
  InitialConditions ic;  // c_f0 = 2: a shape-1/4 profile with a long tail
  FpRunConfig cfg;
  cfg.n_cells = 128;
  cfg.x_max_f = 12.0;
  cfg.x_max_g = 12.0;
  cfg.t_end = 0.1;
  cfg.out_times = {0.1};
  cfg.keep_snapshots = false;
  const auto res = run_fp(p, ic, cfg);
  CHECK(res.init_truncated_f > 0.05);
  CHECK(res.init_truncated_f < 0.25);
  // The grid run still carries unit mass after renormalization.
  CHECK(std::fabs(res.moments.back().mass_f - 1.0) <= 1e-10);
}

TEST_CASE("mean trajectories are insensitive to the noise level") {
  // The mean system closes without the noise terms, so the continuum means
  // carry no sigma dependence. On a grid the flux quadrature couples them
  // at O(dx^2); this pins the measured coupling and checks that it shrinks
  // under refinement.
  ModelParams p;
  p.sigma_f = 0.1;
  p.sigma_g = 0.1;
  ModelParams q = p;
  q.sigma_f *= 0.5;
  q.sigma_g *= 0.5;
  InitialConditions ic;
  ic.c_f0 = 0.25;
  ic.c_g0 = 0.25;

  auto sigma_shift = [&](int cells) {
    FpRunConfig cfg;
    cfg.n_cells = cells;
    cfg.x_max_f = 20.0;
    cfg.x_max_g = 20.0;
    cfg.t_end = 3.0;
    cfg.out_times = {3.0};
    cfg.keep_snapshots = false;
    const auto res_a = run_fp(p, ic, cfg);
    const auto res_b = run_fp(q, ic, cfg);
    const double rel_f = std::fabs(res_a.moments.back().m_f -
                                   res_b.moments.back().m_f) /
                         res_a.moments.back().m_f;
    const double rel_g = std::fabs(res_a.moments.back().m_g -
                                   res_b.moments.back().m_g) /
                         res_a.moments.back().m_g;
    return std::max(rel_f, rel_g);
  };

  const double coarse = sigma_shift(512);
  const double fine = sigma_shift(1024);
  CHECK(coarse < 3e-3);
  CHECK(fine < 0.6 * coarse);
}

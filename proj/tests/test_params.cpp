#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "kinlv/params.hpp"

using namespace kinlv;

TEST_CASE("default parameters pass validation with the capacity warning") {
  ModelParams p;
  const auto r = validate(p);
  CHECK(r.ok());
  // gamma*mu = 1.5 sits outside the small-capacity regime: warn, don't reject.
  REQUIRE(!r.warnings.empty());
  bool saw_capacity = false;
  for (const auto& w : r.warnings) {
    if (w.kind == IssueKind::LargeGammaMu) saw_capacity = true;
  }
  CHECK(saw_capacity);
}

TEST_CASE("derived quantities at the default parameter set") {
  ModelParams p;
  CHECK(p.delta() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(p.fixed_point_f() == doctest::Approx(10.0 / 3.0).epsilon(1e-15));
  CHECK(p.fixed_point_g() == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("non-positive cycle gap is a hard error") {
  ModelParams p;
  p.gamma = 0.1;
  p.mu = 10.0;
  p.nu = 1.0;  // gamma*mu - nu = 0
  const auto r = validate(p);
  CHECK(!r.ok());
  bool saw = false;
  for (const auto& e : r.errors) {
    if (e.kind == IssueKind::NonPositiveDelta) saw = true;
  }
  CHECK(saw);
}

TEST_CASE("redistribution strength must stay below one") {
  ModelParams p;
  p.chi = 1.0;  // alpha*chi = 1
  CHECK(!validate(p).ok());

  ModelParams q;
  q.theta = 1.0;  // nu*theta = 1
  CHECK(!validate(q).ok());

  ModelParams ok;
  ok.chi = 0.99;
  ok.theta = 0.99;
  CHECK(validate(ok).ok());
}

TEST_CASE("all hard violations are reported, not just the first") {
  ModelParams p;
  p.alpha = -1.0;
  p.beta = 0.0;
  p.sigma_f = -0.5;
  const auto r = validate(p);
  CHECK(r.errors.size() >= 3);
}

TEST_CASE("non-finite values are rejected before domain checks") {
  ModelParams p;
  p.mu = std::nan("");
  const auto r = validate(p);
  CHECK(!r.ok());
  CHECK(r.errors.front().kind == IssueKind::NonFinite);
}

TEST_CASE("mu below one is out of domain") {
  ModelParams p;
  p.mu = 0.5;
  CHECK(!validate(p).ok());
}

TEST_CASE("default initial conditions validate") {
  InitialConditions ic;
  CHECK(ic.m_f0 == 4.0);
  CHECK(ic.m_g0 == 3.0);
  CHECK(ic.c_f0 == 2.0);
  CHECK(ic.c_g0 == 1.0);
  CHECK(validate_initial(ic).ok());
}

TEST_CASE("initial conditions reject non-positive means") {
  InitialConditions ic;
  ic.m_f0 = 0.0;
  CHECK(!validate_initial(ic).ok());
  ic.m_f0 = 4.0;
  ic.m_g0 = -1.0;
  CHECK(!validate_initial(ic).ok());
}

TEST_CASE("uniform shape caps the representable cv at 1/sqrt(3)") {
  InitialConditions ic;
  ic.shape = DensityShape::Uniform;
  ic.c_f0 = 0.5;
  ic.c_g0 = 0.5;
  CHECK(validate_initial(ic).ok());
  ic.c_f0 = 0.6;  // > 1/sqrt(3) = 0.577...
  CHECK(!validate_initial(ic).ok());
}

TEST_CASE("describe renders every issue on its own line") {
  ModelParams p;
  p.alpha = -1.0;
  const auto r = validate(p);
  const std::string text = describe(r);
  CHECK(text.find("error:") != std::string::npos);
  CHECK(text.find("alpha") != std::string::npos);
}

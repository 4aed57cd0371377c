#include "capflow/elliptic_oracle.hpp"
#include "capflow/flows.hpp"

#include "doctest.h"

#include <cmath>

using namespace capflow;

namespace {
const double theta = pi_v<double> / 3;
}

TEST_CASE("unnormalized cap solution from a nearby guess") {
  const double p = 5;
  const auto g = make_geometry(theta, 2, {16, 16});
  const Vector<double> guess = 1.05 * g->ell;
  NewtonConfig<double> nc;
  nc.tol_residual = 1e-6;
  const auto r = solve_stationary(DensitySpec<double>::cap_stationary(p), p, g, StationaryMode::unnormalized,
                                  std::nullopt, nc, guess);
  REQUIRE(r.converged);
  CHECK(r.trace.size() <= 4);  // initial residual plus at most three updates
  CHECK((r.h.values - g->ell).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(r.quadratic_ratio() < 10);
  CHECK_FALSE(r.experimental);
}

TEST_CASE("normalized cap solution at twice the cap volume") {
  const double p = 2;
  const auto g = make_geometry(theta, 2, {16, 16});
  const double v = volume(make_field(g, g->ell));
  const auto r = solve_stationary(DensitySpec<double>::cap_stationary(p), p, g, StationaryMode::normalized, 2 * v,
                                  NewtonConfig<double>{});
  REQUIRE(r.converged);
  CHECK((r.h.values - std::cbrt(2.0) * g->ell).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(volume(r.h) == doctest::Approx(2 * v).epsilon(1e-10));
}

TEST_CASE("residual of a scaled exact solution") {
  FlowConfig<double> c;
  c.kind = FlowKind::unnormalized_lp;
  c.p = 5;
  c.theta = theta;
  c.resolution = {16, 16};
  c.f = DensitySpec<double>::cap_stationary(5);
  FlowSolver<double> s(c);
  const double expected = std::abs(std::pow(1.1, 2) - std::pow(1.1, 4)) / std::pow(1.1, 4);
  CHECK(s.stationary_residual(Vector<double>(1.1 * s.geometry()->ell), false) ==
        doctest::Approx(expected).epsilon(1e-8));
  CHECK(s.stationary_residual(s.geometry()->ell, false) < 1e-10);
}

TEST_CASE("continuation converges quadratically on a perturbed density") {
  const auto g = make_geometry(pi_v<double> / 4, 2, {16, 16});
  const auto r = solve_stationary(DensitySpec<double>::even_trig(1, 0.1), 2.0, g, StationaryMode::normalized,
                                  volume(make_field(g, g->ell)), NewtonConfig<double>{});
  REQUIRE(r.converged);
  CHECK(r.residual <= 1e-10);
  CHECK(r.quadratic_ratio() < 100);
}

TEST_CASE("newton settings are validated") {
  NewtonConfig<double> c;
  c.backtrack_ratio = 1;
  CHECK_THROWS_AS(validate(c), ConfigError);
  NewtonConfig<double> d;
  d.plan = {{2.0, 0.5}};
  CHECK_THROWS_AS(validate(d), ConfigError);
}

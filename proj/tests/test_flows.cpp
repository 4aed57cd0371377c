#include "capflow/flows.hpp"

#include "doctest.h"

#include <cmath>

using namespace capflow;

namespace {

FlowConfig<double> cap_config(FlowKind kind, double p, int dim, int n) {
  FlowConfig<double> c;
  c.kind = kind;
  c.p = p;
  c.dim = dim;
  c.theta = pi_v<double> / 3;
  c.resolution = dim == 2 ? Resolution{n, n} : Resolution{n, 1};
  c.f = DensitySpec<double>::cap_stationary(p);
  return c;
}

}  // namespace

TEST_CASE("hypotheses are checked") {
  auto c = cap_config(FlowKind::normalized, 2, 2, 8);
  c.theta = 1.6;
  CHECK_THROWS(FlowSolver<double>{c});
  try {
    validate(c);
    FAIL("accepted theta = 1.6");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "theta");
    CHECK(std::string(e.what()).find("(0, pi/2)") != std::string::npos);
  }
  auto u = cap_config(FlowKind::unnormalized_lp, 3, 2, 8);
  CHECK_THROWS_AS(FlowSolver<double>{u}, ConfigError);
  auto ne = cap_config(FlowKind::normalized, 2, 2, 8);
  ne.f = DensitySpec<double>::non_even_trig(1, 0.1);
  CHECK_THROWS_AS(FlowSolver<double>{ne}, ConfigError);
  auto low = cap_config(FlowKind::normalized, -3, 2, 8);
  CHECK_THROWS_AS(FlowSolver<double>{low}, ConfigError);
}

TEST_CASE("ell is stationary for f = ell^(1-p)") {
  for (int dim : {1, 2}) {
    auto c = cap_config(FlowKind::unnormalized_lp, 5, dim, 16);
    FlowSolver<double> s(c);
    const auto cur = curvature(s.geometry()->ell, s.ops());
    CHECK(s.speed(FlowKind::unnormalized_lp, s.geometry()->ell, cur).cwiseAbs().maxCoeff() < 1e-10);
    const auto r = s.run();
    CHECK(r.outcome == Outcome::converged);
    CHECK(r.state.step_index <= 2);
    CHECK(r.state.history.size() <= 2);
  }
}

TEST_CASE("scaled cap is stationary for the normalized flow") {
  auto c = cap_config(FlowKind::normalized, 2, 2, 16);
  c.initial.scale = 1.4;
  c.max_steps = 50;
  c.tol_stationary = 1e-14;
  FlowSolver<double> s(c);
  auto st = s.initial_state();
  const Vector<double> h0 = st.h.values;
  for (int k = 0; k < 50; ++k) REQUIRE(s.step(st).accepted);
  CHECK((st.h.values - h0).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("normalized flow decreases J and keeps the volume") {
  auto c = cap_config(FlowKind::normalized, 2, 1, 24);
  c.f = DensitySpec<double>::even_trig(1, 0.2);
  c.initial.bump = BumpKind::even;
  c.initial.eps = 0.1;
  c.tol_stationary = 1e-8;
  const auto r = run(c);
  REQUIRE(r.outcome == Outcome::converged);
  const auto& h = r.state.history;
  for (std::size_t k = 1; k < h.size(); ++k) {
    CHECK(h[k].J <= h[k - 1].J + 1e-10);
    CHECK(std::abs(h[k].V - r.state.V0) <= 1e-12 * r.state.V0);
  }
}

TEST_CASE("rescaling a shrinking step") {
  auto c = cap_config(FlowKind::shrinking, 2, 2, 12);
  c.f = DensitySpec<double>::even_trig(1, 0.2);
  FlowSolver<double> s(c);
  auto st = s.initial_state();
  REQUIRE(s.step_shrinking(st).accepted);
  CHECK(volume(st.h) < st.V0);
  CHECK(st.tau > 0);
  auto before = st;
  before.tau = 0;
  const auto [out, dtau] = s.rescale(before, st.V0);
  CHECK(volume(out.h) == doctest::Approx(st.V0).epsilon(1e-14));
  CHECK(dtau == doctest::Approx(st.tau));
  CHECK(dtau > 0);
}

TEST_CASE("barrier holds from half the cap") {
  auto c = cap_config(FlowKind::unnormalized_lp, 5, 1, 32);
  c.initial.scale = 0.5;
  c.tol_stationary = 1e-8;
  FlowSolver<double> s(c);
  CHECK(s.barrier_bound(s.initial_values()) == doctest::Approx(0.5));
  const auto r = s.run();
  CHECK(r.outcome == Outcome::converged);
  for (const auto& d : r.state.history) CHECK(d.min_h_over_ell >= 0.5 - 1e-6);
  CHECK((r.state.h.values - s.geometry()->ell).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("initial data") {
  auto c = cap_config(FlowKind::normalized, 2, 2, 12);
  c.initial.target_volume = 0.3;
  FlowSolver<double> s(c);
  CHECK(volume(make_field(s.geometry(), s.initial_values())) == doctest::Approx(0.3).epsilon(1e-12));
  const Vector<double> b = bump_field(BumpKind::even, s.mesh());
  CHECK(evenness_residual(b, s.mesh()) < 1e-15);
  Vector<double> wrong(3);
  c.initial.tabulated = wrong;
  CHECK_THROWS_AS(FlowSolver<double>(c).initial_values(), ConfigError);
}

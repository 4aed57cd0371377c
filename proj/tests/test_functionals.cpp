#include "capflow/flows.hpp"
#include "capflow/functionals.hpp"

#include "doctest.h"

#include <cmath>

using namespace capflow;

namespace {
const double theta = pi_v<double> / 3;

Vector<double> ell_power(const Vector<double>& ell, double q) { return ell.array().pow(q).matrix(); }
}  // namespace

TEST_CASE("J of the cap with f = 1 and p = 1") {
  const auto g = make_geometry(theta, 2, {64, 64});
  const auto& m = g->mesh;
  const Vector<double> one = Vector<double>::Ones(m.size());
  const double v0 = volume(make_field(g, g->ell));
  const double expected = -std::log(5 * pi_v<double> / 24) / 3 + std::log(5 * pi_v<double> / 8);
  CHECK(J_value(g->ell, one, 1.0, v0, m) == doctest::Approx(expected).epsilon(1e-3));
}

TEST_CASE("J of a constant field at p = 0 is log c past the volume term") {
  const auto m = build_cap_mesh(theta, 2, {12, 12});
  const Vector<double> f = ell_field(m);
  const double c = 2.5, v0 = 0.7;
  CHECK(J_value(Vector<double>(Vector<double>::Constant(m.size(), c)), f, 0.0, v0, m) + std::log(v0) / 3 ==
        doctest::Approx(std::log(c)).epsilon(1e-14));
}

TEST_CASE("doubling h adds log 2 to J") {
  const auto g = make_geometry(theta, 1, {32, 1});
  const Vector<double> f = evaluate(DensitySpec<double>::even_trig(1, 0.3), g->mesh);
  for (double p : {-1.0, 0.0, 2.0, 4.0}) {
    const double j1 = J_value(g->ell, f, p, 0.4, g->mesh);
    const double j2 = J_value(Vector<double>(2 * g->ell), f, p, 0.4, g->mesh);
    CHECK(j2 - j1 == doctest::Approx(std::log(2.0)).epsilon(1e-13));
  }
  CHECK_THROWS_AS(J_value(Vector<double>(-g->ell), f, 2.0, 0.4, g->mesh), DomainError);
}

TEST_CASE("dissipation vanishes at the stationary cap and is negative elsewhere") {
  const auto g = make_geometry(theta, 2, {32, 32});
  const auto& m = g->mesh;
  const double p = 3;
  const Vector<double> f = ell_power(g->ell, 1 - p);
  const auto c = curvature(g->ell, g->ops);
  const double v0 = volume(g->ell, c, m);
  CHECK(std::abs(J_dissipation(g->ell, c, f, p, v0, m)) < 1e-12);
  CHECK(std::abs(J_tilde_dissipation(g->ell, c, f, p, m)) < 1e-12);

  const Vector<double> h2 = 2 * g->ell;
  const auto c2 = curvature(h2, g->ops);
  CHECK(J_tilde_dissipation(h2, c2, ell_power(g->ell, -4), 5.0, m) < 0);
  Vector<double> bumped = g->ell;
  for (Index a = 0; a < bumped.size(); ++a) bumped[a] *= 1 + 0.1 * std::pow(m.rho[a] / theta, 2) * (1 - std::pow(m.rho[a] / theta, 2) / 2);
  const auto cb = curvature(bumped, g->ops);
  CHECK(J_dissipation(bumped, cb, f, p, volume(bumped, cb, m), m) < 0);
}

TEST_CASE("dissipation matches a difference quotient of J along the flow") {
  FlowConfig<double> c;
  c.p = 2;
  c.dim = 1;
  c.resolution = {32, 1};
  c.f = DensitySpec<double>::even_trig(1, 0.2);
  c.initial.bump = BumpKind::even;
  c.initial.eps = 0.2;
  c.volume_control = VolumeControl::formula;
  FlowSolver<double> s(c);
  const Vector<double> h0 = s.initial_values();
  const auto c0 = curvature(h0, s.ops());
  const double v = volume(h0, c0, s.mesh());
  const double rate = J_dissipation(h0, c0, s.density(), 2.0, v, s.mesh());
  const double dt = 1e-6;
  const Vector<double> h1 = s.advance(FlowKind::normalized, h0, dt);
  const double q = (J_value(h1, s.density(), 2.0, v, s.mesh()) - J_value(h0, s.density(), 2.0, v, s.mesh())) / dt;
  CHECK(q == doctest::Approx(rate).epsilon(1e-3));
  CHECK(rate < 0);
}

TEST_CASE("measure densities of the cap") {
  const auto g = make_geometry(theta, 2, {16, 16});
  const auto c = curvature(g->ell, g->ops);
  for (double p : {-1.0, 2.0, 5.0}) {
    const auto d = measure_densities(g->ell, c, p, g->ell);
    CHECK((d.area - g->ell).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((d.lp - ell_power(g->ell, 2 - p)).cwiseAbs().maxCoeff() < 1e-8);
  }
  const auto m = build_cap_mesh(theta, 2, {64, 64});
  const auto g64 = make_geometry(theta, 2, {64, 64});
  const auto d64 = measure_densities(g64->ell, curvature(g64->ell, g64->ops), 2.0, g64->ell);
  CHECK(integrate(d64.area, m) == doctest::Approx(5 * pi_v<double> / 8).epsilon(1e-3));
}

#include "capflow/convex_state.hpp"

#include "doctest.h"

#include <cmath>

using namespace capflow;

namespace {
const double theta = pi_v<double> / 3;
}

TEST_CASE("total weight approaches the cap area") {
  double prev = 1;
  for (int n : {16, 32, 64}) {
    const auto m = build_cap_mesh(theta, 2, {n, n});
    const double err = std::abs(m.weights.sum() - pi_v<double>);
    CHECK(err < prev / 3);
    prev = err;
  }
  CHECK(prev < 1e-3);
  const auto m1 = build_cap_mesh(theta, 1, {32, 1});
  CHECK(m1.weights.sum() == doctest::Approx(2 * theta).epsilon(1e-12));
  CHECK(cap_area(theta, 2) == doctest::Approx(pi_v<double>));
}

TEST_CASE("boundary nodes sit on the hyperplane at radius sin theta") {
  for (int dim : {1, 2}) {
    const auto m = build_cap_mesh(theta, dim, {12, 12});
    REQUIRE(!m.boundary_ids.empty());
    for (Index a : m.boundary_ids) {
      CHECK(std::abs(m.points(a, dim)) < 1e-15);
      CHECK(m.points.row(a).head(dim).norm() == doctest::Approx(std::sin(theta)).epsilon(1e-14));
    }
  }
}

TEST_CASE("ell at apex and boundary") {
  const auto m = build_cap_mesh(theta, 2, {8, 8});
  const auto ell = ell_field(m);
  CHECK(ell[0] == doctest::Approx(0.5).epsilon(1e-14));
  for (Index a : m.boundary_ids) CHECK(ell[a] == doctest::Approx(0.75).epsilon(1e-14));
  for (double t : {0.2, 0.7, 1.2, 1.5}) {
    const auto mt = build_cap_mesh(t, 2, {8, 8});
    CHECK(ell_field(mt).minCoeff() >= std::min(std::sin(t) * std::sin(t), 1 - std::cos(t)) - 1e-15);
  }
}

TEST_CASE("fitted stencils reproduce the cap and point support functions") {
  for (int dim : {1, 2}) {
    const auto g = make_geometry(theta, dim, {16, 16});
    const auto c = curvature(g->ell, g->ops);
    CHECK((c.b11.array() - 1).abs().maxCoeff() < 1e-10);
    if (dim == 2) {
      CHECK((c.b22.array() - 1).abs().maxCoeff() < 1e-10);
      CHECK(c.b12.cwiseAbs().maxCoeff() < 1e-10);
    }
    // h_v for v = E_{n+1} is nu_{n+1}; it does not satisfy the Robin condition
    const Vector<double> hv = g->mesh.normals.col(dim);
    const Vector<double> r11 = g->raw_ops.hess11 * hv + hv;
    CHECK(r11.cwiseAbs().maxCoeff() < 1e-9);
    if (dim == 2) {
      const Vector<double> r22 = g->raw_ops.hess22 * hv + hv;
      CHECK(r22.cwiseAbs().maxCoeff() < 1e-9);
      CHECK((g->raw_ops.hess12 * hv).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("normal derivative of ell equals sin theta cos theta") {
  const auto g = make_geometry(theta, 2, {16, 16});
  const Vector<double> d = g->ops.normal_deriv * g->ell;
  CHECK((d.array() - std::sin(theta) * std::cos(theta)).abs().maxCoeff() < 1e-9);
  CHECK(robin_residual(g->ell, g->ops) < 1e-9);
}

TEST_CASE("integrals of one and ell") {
  const auto m = build_cap_mesh(theta, 2, {64, 64});
  CHECK(integrate(Vector<double>::Ones(m.size()), m) == doctest::Approx(pi_v<double>).epsilon(1e-3));
  CHECK(integrate(ell_field(m), m) == doctest::Approx(5 * pi_v<double> / 8).epsilon(1e-3));
  CHECK(integrate(Vector<double>::Zero(m.size()), m) == 0.0);
}

TEST_CASE("even symmetrization") {
  const auto m = build_cap_mesh(theta, 2, {8, 12});
  const auto ell = ell_field(m);
  CHECK((symmetrize_even(ell, m) - ell).cwiseAbs().maxCoeff() < 1e-15);
  const Vector<double> odd = m.points.col(0);
  CHECK(symmetrize_even(odd, m).cwiseAbs().maxCoeff() < 1e-15);
  const Vector<double> even = m.points.col(0).cwiseAbs2();
  CHECK((symmetrize_even(even, m) - even).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(evenness_residual(odd, m) > 0.1);
}

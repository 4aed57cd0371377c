#include "capflow/functionals.hpp"

#include "doctest.h"

#include <cmath>

using namespace capflow;

namespace {
const double theta = pi_v<double> / 3;
}

TEST_CASE("gauss curvature of scaled caps") {
  for (int dim : {1, 2}) {
    const auto g = make_geometry(theta, dim, {16, 16});
    for (double c : {1.0, 0.5, 2.0}) {
      const auto k = curvature(make_field(g, Vector<double>(c * g->ell)));
      CHECK((k.gauss.array() - std::pow(c, -dim)).abs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("gauss curvature of a perturbed cap converges under refinement") {
  auto gauss_at_pole = [](int n) {
    const auto g = make_geometry(theta, 2, {n, n});
    Vector<double> h = g->ell;
    for (Index a = 0; a < h.size(); ++a) {
      const double r = g->mesh.rho[a] / theta;
      h[a] *= 1 + 0.05 * std::cos(2 * g->mesh.phi[a]) * (r * r - r * r * r * r / 2);
    }
    return curvature(h, g->ops).gauss[0];
  };
  const double ref = gauss_at_pole(128);
  const double e16 = std::abs(gauss_at_pole(16) - ref), e32 = std::abs(gauss_at_pole(32) - ref);
  CHECK(e32 < e16 / 3);
}

TEST_CASE("embedding of ell is the cap") {
  for (int dim : {1, 2}) {
    const auto g = make_geometry(theta, dim, {16, 16});
    const auto x = embed(make_field(g, g->ell));
    CHECK((x - g->mesh.points).cwiseAbs().maxCoeff() < 1e-9);
    const double c = 1.7;
    const auto y = embed(make_field(g, Vector<double>(c * g->ell)));
    Eigen::RowVectorXd center = Eigen::RowVectorXd::Zero(dim + 1);
    center[dim] = -c * std::cos(theta);
    for (Index a = 0; a < y.rows(); ++a) CHECK((y.row(a) - center).norm() == doctest::Approx(c).epsilon(1e-9));
  }
}

TEST_CASE("normals meet the support plane at the contact angle") {
  const auto m = build_cap_mesh(theta, 2, {12, 12});
  for (Index a : m.boundary_ids) CHECK(-m.normals(a, 2) == doctest::Approx(-std::cos(theta)).epsilon(1e-14));
}

TEST_CASE("admissibility checks") {
  const auto g = make_geometry(theta, 2, {16, 16});
  CHECK(validate_admissible(make_field(g, g->ell)).passed);
  const auto neg = validate_admissible(make_field(g, Vector<double>(g->ell.array() - 2 * g->ell.minCoeff())));
  CHECK_FALSE(neg.passed);
  CHECK_FALSE(neg.positive);
  Vector<double> spike = g->ell;
  spike[40] += 10;
  const auto bad = validate_admissible(make_field(g, spike));
  CHECK_FALSE(bad.convex);
  CHECK_THROWS_AS(embed(make_field(g, spike)), ConvexityLossError);
}

TEST_CASE("volume of the cap") {
  const auto g2 = make_geometry(theta, 2, {64, 64});
  CHECK(volume(make_field(g2, g2->ell)) == doctest::Approx(5 * pi_v<double> / 24).epsilon(1e-3));
  const auto g1 = make_geometry(theta, 1, {64, 1});
  const double seg = theta - std::sin(theta) * std::cos(theta);
  CHECK(volume(make_field(g1, g1->ell)) == doctest::Approx(seg).epsilon(1e-3));
  for (const auto& g : {g1, g2}) {
    const double v = volume(make_field(g, g->ell));
    const int n = g->mesh.dim;
    CHECK(volume(make_field(g, Vector<double>(1.3 * g->ell))) == doctest::Approx(std::pow(1.3, n + 1) * v).epsilon(1e-13));
  }
}

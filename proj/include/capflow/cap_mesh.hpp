#pragma once

#include "capflow/types.hpp"

#include <array>
#include <cmath>
#include <string>

namespace capflow {

/// Grid counts. For n = 1, `n_rho` is the number of intervals across
/// [-theta, theta] and `n_phi` is ignored. For n = 2, `n_rho` is the number of
/// rings outside the pole and `n_phi` the number of nodes per ring.
struct Resolution {
  int n_rho = 32;
  int n_phi = 32;
};

/// Discretization of the unit spherical cap C_theta meeting the hyperplane
/// {x_{n+1} = 0} at contact angle theta.
///
/// Nodes are parametrized by geodesic polar coordinates about the apex:
/// nu(rho, phi) = (sin rho cos phi, sin rho sin phi, cos rho) is the unit normal
/// of the sphere through the node, and xi = nu + cos(theta) e with
/// e = -E_{n+1}. For n = 1 the angle rho is signed and runs over [-theta, theta].
///
/// Layout (n = 2): node 0 is the pole, ring i in 1..n_rho occupies indices
/// 1 + (i - 1) n_phi + j. Ring n_rho is the boundary {xi_{n+1} = 0}.
template <typename Scalar>
struct CapMesh {
  Scalar theta{};
  int dim = 2;
  Resolution resolution{};
  Scalar d_rho{};
  Scalar d_phi{};

  Vector<Scalar> rho;
  Vector<Scalar> phi;
  PointMatrix<Scalar> points;   // xi
  PointMatrix<Scalar> normals;  // nu = xi - cos(theta) e
  PointMatrix<Scalar> frame1;   // e_rho (e_1 at the pole)
  PointMatrix<Scalar> frame2;   // e_phi (e_2 at the pole); unused for n = 1
  Vector<Scalar> weights;

  std::vector<Index> boundary_ids;
  std::vector<Index> interior_ids;
  std::vector<char> is_boundary;
  /// Node permutation realizing (x_1..x_n, x_{n+1}) -> (-x_1..-x_n, x_{n+1}).
  std::vector<Index> reflection;
  /// For each boundary node, the node itself followed by the next three nodes
  /// walking inward along its meridian.
  std::vector<std::array<Index, 4>> boundary_rays;

  Index size() const { return static_cast<Index>(rho.size()); }
  int ambient_dim() const { return dim + 1; }

  Index node(int ring, int j) const {
    if (dim == 1) return ring;
    if (ring == 0) return 0;
    const int m = resolution.n_phi;
    return 1 + static_cast<Index>(ring - 1) * m + ((j % m) + m) % m;
  }
};

template <typename Scalar>
CapMesh<Scalar> build_cap_mesh(Scalar theta, int dim, Resolution res) {
  using std::cos;
  using std::sin;
  if (!(theta > Scalar(0) && theta < pi_v<Scalar> / 2))
    throw DomainError("contact angle theta must lie in (0, pi/2), got " + std::to_string(double(theta)));
  if (dim != 1 && dim != 2) throw ConfigError("dimension must be 1 or 2", "dim");
  if (res.n_rho < 4) throw ConfigError("need at least 4 intervals in rho", "resolution");
  if (dim == 2 && (res.n_phi < 6 || res.n_phi % 2 != 0))
    throw ConfigError("n_phi must be even and at least 6", "resolution");

  CapMesh<Scalar> mesh;
  mesh.theta = theta;
  mesh.dim = dim;
  mesh.resolution = res;
  const int amb = dim + 1;
  const Scalar ct = cos(theta);

  if (dim == 1) {
    const int n = res.n_rho;
    mesh.resolution.n_phi = 1;
    const Index count = n + 1;
    mesh.d_rho = 2 * theta / Scalar(n);
    mesh.d_phi = Scalar(0);
    mesh.rho.resize(count);
    mesh.phi = Vector<Scalar>::Zero(count);
    mesh.points.resize(count, amb);
    mesh.normals.resize(count, amb);
    mesh.frame1.resize(count, amb);
    mesh.frame2 = PointMatrix<Scalar>::Zero(count, amb);
    mesh.weights.resize(count);
    for (Index a = 0; a < count; ++a) {
      // Exact endpoints so that boundary nodes sit on the hyperplane.
      const Scalar r = a == 0 ? -theta : (a == n ? theta : -theta + Scalar(a) * mesh.d_rho);
      mesh.rho[a] = r;
      mesh.normals.row(a) << sin(r), cos(r);
      mesh.frame1.row(a) << cos(r), -sin(r);
      mesh.weights[a] = (a == 0 || a == n) ? mesh.d_rho / 2 : mesh.d_rho;
    }
    mesh.reflection.resize(count);
    for (Index a = 0; a < count; ++a) mesh.reflection[a] = n - a;
    mesh.boundary_ids = {0, Index(n)};
    mesh.boundary_rays = {{0, 1, 2, 3}, {Index(n), Index(n - 1), Index(n - 2), Index(n - 3)}};
  } else {
    const int nr = res.n_rho;
    const int m = res.n_phi;
    const Index count = 1 + static_cast<Index>(nr) * m;
    mesh.d_rho = theta / Scalar(nr);
    mesh.d_phi = 2 * pi_v<Scalar> / Scalar(m);
    mesh.rho.resize(count);
    mesh.phi.resize(count);
    mesh.points.resize(count, amb);
    mesh.normals.resize(count, amb);
    mesh.frame1.resize(count, amb);
    mesh.frame2.resize(count, amb);
    mesh.weights.resize(count);

    mesh.rho[0] = 0;
    mesh.phi[0] = 0;
    mesh.normals.row(0) << 0, 0, 1;
    mesh.frame1.row(0) << 1, 0, 0;
    mesh.frame2.row(0) << 0, 1, 0;
    {
      // w0 * (4 r2 / m) = w1 * (r2 - cot(d) r1): ring 1 to pole coupling.
      const Scalar d = mesh.d_rho;
      const Scalar r1 = 1 / (2 * sin(d));
      const Scalar r2 = 1 / (4 * sin(d / 2) * sin(d / 2));
      mesh.weights[0] = sin(d) * d * mesh.d_phi * (r2 - cos(d) / sin(d) * r1) * Scalar(m) / (4 * r2);
    }
    for (int i = 1; i <= nr; ++i) {
      const Scalar r = i == nr ? theta : Scalar(i) * mesh.d_rho;
      // Pole and boundary weights make the Robin-closed Laplacian self-adjoint.
      const Scalar inner = theta - mesh.d_rho;
      const Scalar w = (i == nr ? (sin(inner) + cos(inner) * tan(mesh.d_rho / 2)) / 2 : sin(r)) *
                       mesh.d_rho * mesh.d_phi;
      for (int j = 0; j < m; ++j) {
        const Index a = mesh.node(i, j);
        const Scalar f = Scalar(j) * mesh.d_phi;
        mesh.rho[a] = r;
        mesh.phi[a] = f;
        mesh.normals.row(a) << sin(r) * cos(f), sin(r) * sin(f), cos(r);
        mesh.frame1.row(a) << cos(r) * cos(f), cos(r) * sin(f), -sin(r);
        mesh.frame2.row(a) << -sin(f), cos(f), 0;
        mesh.weights[a] = w;
      }
    }
    mesh.reflection.resize(count);
    mesh.reflection[0] = 0;
    for (int i = 1; i <= nr; ++i)
      for (int j = 0; j < m; ++j) mesh.reflection[mesh.node(i, j)] = mesh.node(i, j + m / 2);
    for (int j = 0; j < m; ++j) {
      mesh.boundary_ids.push_back(mesh.node(nr, j));
      mesh.boundary_rays.push_back(
          {mesh.node(nr, j), mesh.node(nr - 1, j), mesh.node(nr - 2, j), mesh.node(nr - 3, j)});
    }
  }

  mesh.points = mesh.normals;
  mesh.points.col(amb - 1).array() -= ct;
  // Boundary nodes lie exactly on the hyperplane.
  mesh.is_boundary.assign(mesh.size(), 0);
  for (Index b : mesh.boundary_ids) {
    mesh.is_boundary[b] = 1;
    mesh.points(b, amb - 1) = 0;
  }
  for (Index a = 0; a < mesh.size(); ++a)
    if (!mesh.is_boundary[a]) mesh.interior_ids.push_back(a);
  return mesh;
}

/// Capillary support function of the cap itself: sin^2 theta + cos theta (xi . e).
template <typename Scalar>
Vector<Scalar> ell_field(const CapMesh<Scalar>& mesh) {
  const Scalar ct = std::cos(mesh.theta);
  const Scalar st = std::sin(mesh.theta);
  // xi . e = -xi_{n+1}
  return (Vector<Scalar>::Constant(mesh.size(), st * st) - ct * mesh.points.col(mesh.dim)).eval();
}

template <typename Scalar, typename Derived>
Scalar integrate(const Eigen::MatrixBase<Derived>& field, const CapMesh<Scalar>& mesh) {
  return mesh.weights.dot(field);
}

template <typename Scalar, typename Derived>
Vector<Scalar> reflect(const Eigen::MatrixBase<Derived>& field, const CapMesh<Scalar>& mesh) {
  Vector<Scalar> out(mesh.size());
  for (Index a = 0; a < mesh.size(); ++a) out[a] = field[mesh.reflection[a]];
  return out;
}

/// Average of a field and its pullback under the even reflection.
template <typename Scalar, typename Derived>
Vector<Scalar> symmetrize_even(const Eigen::MatrixBase<Derived>& field, const CapMesh<Scalar>& mesh) {
  Vector<Scalar> out(mesh.size());
  for (Index a = 0; a < mesh.size(); ++a) out[a] = (field[a] + field[mesh.reflection[a]]) / 2;
  return out;
}

template <typename Scalar, typename Derived>
Scalar evenness_residual(const Eigen::MatrixBase<Derived>& field, const CapMesh<Scalar>& mesh) {
  Scalar r = 0;
  for (Index a = 0; a < mesh.size(); ++a) r = std::max(r, std::abs(field[a] - field[mesh.reflection[a]]));
  return r;
}

/// Closed-form area of the cap: 2 theta (n = 1), 2 pi (1 - cos theta) (n = 2).
template <typename Scalar>
Scalar cap_area(Scalar theta, int dim) {
  return dim == 1 ? 2 * theta : 2 * pi_v<Scalar> * (1 - std::cos(theta));
}

/// Smallest grid spacing measured in arc length.
template <typename Scalar>
Scalar min_spacing(const CapMesh<Scalar>& mesh) {
  if (mesh.dim == 1) return mesh.d_rho;
  return std::min(mesh.d_rho, std::sin(mesh.d_rho) * mesh.d_phi);
}

}  // namespace capflow

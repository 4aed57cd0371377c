#pragma once

#include "capflow/cap_mesh.hpp"

#include <array>
#include <cmath>

namespace capflow {

/// Linear differential operators on node fields, expressed in the orthonormal
/// frame (e_rho, e_phi) of the round metric ((e_1, e_2) at the pole).
///
/// All stencils are trigonometrically fitted: they are exact on the span of
/// {1, nu_1, .., nu_{n+1}}, i.e. on constants and on support functions of
/// points. Consequently Hess(ell) + ell I = I and Hess(h_v) + h_v I = 0 hold to
/// rounding, while the operators stay second-order accurate on smooth fields.
///
/// With `BoundaryClosure::one_sided` the boundary ring uses one-sided stencils
/// and no boundary condition is built in. With `BoundaryClosure::robin_ghost`
/// the boundary rows eliminate a ghost ring from the central Robin condition
/// nabla_mu h = cot(theta) h, so every node carries the interior formula. The
/// ghost closure is what the flows and the Newton solver discretize.
enum class BoundaryClosure { one_sided, robin_ghost };

template <typename Scalar>
struct FrameOperators {
  BoundaryClosure closure = BoundaryClosure::one_sided;
  int dim = 2;
  Scalar cot_theta{};
  std::array<SparseMatrix<Scalar>, 2> grad;
  SparseMatrix<Scalar> hess11;
  SparseMatrix<Scalar> hess22;
  SparseMatrix<Scalar> hess12;
  /// Rows follow mesh.boundary_ids; one-sided outward derivative nabla_mu
  /// (for either closure, so it measures the Robin defect independently).
  SparseMatrix<Scalar> normal_deriv;
  /// normal_deriv - cot(theta) * (boundary trace). The discrete Robin condition
  /// is robin * h = 0.
  SparseMatrix<Scalar> robin;
};

namespace stencil {

/// Weights w_k on nodes s_k = -k * step (k = 0, 1, 2) reproducing d/ds at s = 0
/// exactly on {1, cos s, sin s}.
template <typename Scalar>
std::array<Scalar, 3> one_sided_first(Scalar step) {
  using Mat = Eigen::Matrix<Scalar, 3, 3>;
  using Vec = Eigen::Matrix<Scalar, 3, 1>;
  Mat a;
  for (int k = 0; k < 3; ++k) {
    const Scalar s = -Scalar(k) * step;
    a(0, k) = 1;
    a(1, k) = std::cos(s);
    a(2, k) = std::sin(s);
  }
  const Vec w = a.fullPivLu().solve(Vec(0, 0, 1));
  return {w[0], w[1], w[2]};
}

/// Weights on s_k = -k * step (k = 0..3) reproducing d^2/ds^2 at s = 0 exactly
/// on {1, cos s, sin s, s^3}; second order for general smooth data.
template <typename Scalar>
std::array<Scalar, 4> one_sided_second(Scalar step) {
  using Mat = Eigen::Matrix<Scalar, 4, 4>;
  using Vec = Eigen::Matrix<Scalar, 4, 1>;
  Mat a;
  for (int k = 0; k < 4; ++k) {
    const Scalar s = -Scalar(k) * step;
    a(0, k) = 1;
    a(1, k) = std::cos(s);
    a(2, k) = std::sin(s);
    a(3, k) = s * s * s;
  }
  const Vec w = a.fullPivLu().solve(Vec(0, -1, 0, 0));
  return {w[0], w[1], w[2], w[3]};
}

template <typename Scalar>
Scalar central_first(Scalar step) {
  return Scalar(1) / (2 * std::sin(step));
}

template <typename Scalar>
Scalar central_second(Scalar step) {
  const Scalar s = std::sin(step / 2);
  return Scalar(1) / (4 * s * s);
}

}  // namespace stencil

namespace detail {

template <typename Scalar>
SparseMatrix<Scalar> from_triplets(Index rows, Index cols, const Triplets<Scalar>& t) {
  SparseMatrix<Scalar> m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

template <typename Scalar>
void frame_operators_1d(const CapMesh<Scalar>& mesh, BoundaryClosure closure, Triplets<Scalar>& g1,
                        Triplets<Scalar>& h11, Triplets<Scalar>& nd) {
  const int n = mesh.resolution.n_rho;
  const Scalar d = mesh.d_rho;
  const Scalar c1 = stencil::central_first(d);
  const Scalar c2 = stencil::central_second(d);
  for (Index a = 1; a < n; ++a) {
    g1.emplace_back(a, a + 1, c1);
    g1.emplace_back(a, a - 1, -c1);
    h11.emplace_back(a, a + 1, c2);
    h11.emplace_back(a, a, -2 * c2);
    h11.emplace_back(a, a - 1, c2);
  }
  const auto w1 = stencil::one_sided_first(d);
  const auto w2 = stencil::one_sided_second(d);
  for (std::size_t r = 0; r < mesh.boundary_rays.size(); ++r) {
    const auto& ray = mesh.boundary_rays[r];
    const Index b = ray[0];
    // Outward is -rho at the left end, +rho at the right end.
    const Scalar sign = b == 0 ? Scalar(-1) : Scalar(1);
    for (int k = 0; k < 3; ++k) nd.emplace_back(Index(r), ray[k], w1[k]);
    if (closure == BoundaryClosure::one_sided) {
      for (int k = 0; k < 3; ++k) g1.emplace_back(b, ray[k], sign * w1[k]);
      for (int k = 0; k < 4; ++k) h11.emplace_back(b, ray[k], w2[k]);
    } else {
      // ghost = h[ray1] + 2 sin(d) cot(theta) h[b]
      const Scalar cot = std::cos(mesh.theta) / std::sin(mesh.theta);
      g1.emplace_back(b, b, sign * cot);
      h11.emplace_back(b, ray[1], 2 * c2);
      h11.emplace_back(b, b, c2 * (2 * std::sin(d) * cot - 2));
    }
  }
}

template <typename Scalar>
void frame_operators_2d(const CapMesh<Scalar>& mesh, BoundaryClosure closure, Triplets<Scalar>& g1,
                        Triplets<Scalar>& g2,
                        Triplets<Scalar>& h11, Triplets<Scalar>& h22, Triplets<Scalar>& h12,
                        Triplets<Scalar>& nd) {
  using std::cos;
  using std::sin;
  const int nr = mesh.resolution.n_rho;
  const int m = mesh.resolution.n_phi;
  const Scalar dr = mesh.d_rho;
  const Scalar dp = mesh.d_phi;
  const Scalar r1 = stencil::central_first(dr);
  const Scalar r2 = stencil::central_second(dr);
  const Scalar p1 = stencil::central_first(dp);
  const Scalar p2 = stencil::central_second(dp);

  // Pole: fit the Hessian quadratic form from second differences along the
  // m / 2 geodesics through the apex, and the gradient from first differences.
  {
    const Scalar inv_m = Scalar(1) / Scalar(m);
    Scalar diag11 = 0, diag22 = 0, diag12 = 0;
    for (int j = 0; j < m; ++j) {
      const Scalar f = Scalar(j) * dp;
      const Index a = mesh.node(1, j);
      // Each ring-1 node appears in the difference along its own direction and
      // the opposite one; D_j = D_{j + m/2}.
      const Scalar mean = 2 * inv_m * r2;
      const Scalar cos2 = 4 * inv_m * cos(2 * f) * r2;
      const Scalar sin2 = 4 * inv_m * sin(2 * f) * r2;
      h11.emplace_back(0, a, mean + cos2);
      h22.emplace_back(0, a, mean - cos2);
      h12.emplace_back(0, a, sin2);
      diag11 -= mean + cos2;
      diag22 -= mean - cos2;
      diag12 -= sin2;
      g1.emplace_back(0, a, 2 * inv_m * 2 * cos(f) * r1);
      g2.emplace_back(0, a, 2 * inv_m * 2 * sin(f) * r1);
    }
    h11.emplace_back(0, 0, diag11);
    h22.emplace_back(0, 0, diag22);
    h12.emplace_back(0, 0, diag12);
  }

  const auto w1 = stencil::one_sided_first(dr);
  const auto w2 = stencil::one_sided_second(dr);

  for (int i = 1; i <= nr; ++i) {
    const Scalar rho = i == nr ? mesh.theta : Scalar(i) * dr;
    const Scalar s = sin(rho);
    const Scalar c = cos(rho);
    for (int j = 0; j < m; ++j) {
      const Index a = mesh.node(i, j);
      // Collect d/drho, d2/drho2, d/dphi, d2/dphi2, d2/drho dphi as
      // (node, weight) lists, then combine into the frame Hessian:
      //   H11 = h_rr
      //   H22 = h_pp / sin^2 + cot * h_r
      //   H12 = h_rp / sin - cos / sin^2 * h_p
      Triplets<Scalar> dr1, dr2, dph1, dph2, drp;
      auto add = [](Triplets<Scalar>& t, Index col, Scalar w) { t.emplace_back(0, col, w); };
      if (i < nr) {
        add(dr1, mesh.node(i + 1, j), r1);
        add(dr1, mesh.node(i - 1, j), -r1);
        add(dr2, mesh.node(i + 1, j), r2);
        add(dr2, a, -2 * r2);
        add(dr2, mesh.node(i - 1, j), r2);
        for (int sr : {1, -1})
          for (int sp : {1, -1})
            add(drp, mesh.node(i + sr, j + sp), Scalar(sr * sp) * r1 * p1);
      } else if (closure == BoundaryClosure::robin_ghost) {
        // ghost(j) = h(nr - 1, j) + 2 sin(dr) cot(theta) h(nr, j)
        const Scalar cot = std::cos(mesh.theta) / std::sin(mesh.theta);
        add(dr1, a, cot);
        add(dr2, mesh.node(nr - 1, j), 2 * r2);
        add(dr2, a, r2 * (2 * sin(dr) * cot - 2));
        add(drp, mesh.node(nr, j + 1), cot * p1);
        add(drp, mesh.node(nr, j - 1), -cot * p1);
      } else {
        for (int k = 0; k < 3; ++k) {
          add(dr1, mesh.node(nr - k, j), w1[k]);
          add(drp, mesh.node(nr - k, j + 1), w1[k] * p1);
          add(drp, mesh.node(nr - k, j - 1), -w1[k] * p1);
        }
        for (int k = 0; k < 4; ++k) add(dr2, mesh.node(nr - k, j), w2[k]);
      }
      add(dph1, mesh.node(i, j + 1), p1);
      add(dph1, mesh.node(i, j - 1), -p1);
      add(dph2, mesh.node(i, j + 1), p2);
      add(dph2, a, -2 * p2);
      add(dph2, mesh.node(i, j - 1), p2);

      for (const auto& t : dr1) {
        g1.emplace_back(a, t.col(), t.value());
        h22.emplace_back(a, t.col(), c / s * t.value());
      }
      for (const auto& t : dr2) h11.emplace_back(a, t.col(), t.value());
      for (const auto& t : dph1) {
        g2.emplace_back(a, t.col(), t.value() / s);
        h12.emplace_back(a, t.col(), -c / (s * s) * t.value());
      }
      for (const auto& t : dph2) h22.emplace_back(a, t.col(), t.value() / (s * s));
      for (const auto& t : drp) h12.emplace_back(a, t.col(), t.value() / s);
    }
  }
  for (std::size_t r = 0; r < mesh.boundary_rays.size(); ++r)
    for (int k = 0; k < 3; ++k) nd.emplace_back(Index(r), mesh.boundary_rays[r][k], w1[k]);
}

}  // namespace detail

template <typename Scalar>
FrameOperators<Scalar> frame_operators(const CapMesh<Scalar>& mesh,
                                       BoundaryClosure closure = BoundaryClosure::one_sided) {
  const Index n = mesh.size();
  const Index nb = static_cast<Index>(mesh.boundary_ids.size());
  Triplets<Scalar> g1, g2, h11, h22, h12, nd;
  if (mesh.dim == 1)
    detail::frame_operators_1d(mesh, closure, g1, h11, nd);
  else
    detail::frame_operators_2d(mesh, closure, g1, g2, h11, h22, h12, nd);

  FrameOperators<Scalar> ops;
  ops.closure = closure;
  ops.dim = mesh.dim;
  ops.cot_theta = std::cos(mesh.theta) / std::sin(mesh.theta);
  ops.grad[0] = detail::from_triplets(n, n, g1);
  ops.grad[1] = detail::from_triplets(n, n, g2);
  ops.hess11 = detail::from_triplets(n, n, h11);
  ops.hess22 = detail::from_triplets(n, n, h22);
  ops.hess12 = detail::from_triplets(n, n, h12);
  ops.normal_deriv = detail::from_triplets(nb, n, nd);
  Triplets<Scalar> rb = nd;
  for (Index r = 0; r < nb; ++r) rb.emplace_back(r, mesh.boundary_ids[r], -ops.cot_theta);
  ops.robin = detail::from_triplets(nb, n, rb);
  return ops;
}

template <typename Scalar>
Scalar robin_residual(const Vector<Scalar>& h, const FrameOperators<Scalar>& ops) {
  if (ops.robin.rows() == 0) return Scalar(0);
  return (ops.robin * h).cwiseAbs().maxCoeff();
}

}  // namespace capflow

#pragma once

#include "capflow/frame_operators.hpp"

#include <limits>
#include <memory>
#include <optional>
#include <sstream>

namespace capflow {

/// Mesh, operators and the reference field ell, built once and shared by every
/// field living on the mesh. `ops` carries the Robin ghost closure used for all
/// curvature of capillary support functions; `raw_ops` is the closure-free set.
template <typename Scalar>
struct CapGeometry {
  CapMesh<Scalar> mesh;
  FrameOperators<Scalar> ops;
  FrameOperators<Scalar> raw_ops;
  Vector<Scalar> ell;
};

template <typename Scalar>
std::shared_ptr<const CapGeometry<Scalar>> make_geometry(Scalar theta, int dim, Resolution res) {
  auto g = std::make_shared<CapGeometry<Scalar>>();
  g->mesh = build_cap_mesh(theta, dim, res);
  g->ops = frame_operators(g->mesh, BoundaryClosure::robin_ghost);
  g->raw_ops = frame_operators(g->mesh, BoundaryClosure::one_sided);
  g->ell = ell_field(g->mesh);
  return g;
}

/// Capillary support function sampled at the mesh nodes.
template <typename Scalar>
struct SupportField {
  std::shared_ptr<const CapGeometry<Scalar>> geometry;
  Vector<Scalar> values;
  bool even = false;

  const CapMesh<Scalar>& mesh() const { return geometry->mesh; }
  const FrameOperators<Scalar>& ops() const { return geometry->ops; }
  Index size() const { return values.size(); }
};

template <typename Scalar>
SupportField<Scalar> make_field(std::shared_ptr<const CapGeometry<Scalar>> g, Vector<Scalar> values,
                                bool even = false) {
  return SupportField<Scalar>{std::move(g), std::move(values), even};
}

/// Principal radii data b = Hess h + h I per node. For n = 1 only b11 is used.
template <typename Scalar>
struct CurvatureData {
  Vector<Scalar> b11, b22, b12;
  Vector<Scalar> sigma_n;  // det b
  Vector<Scalar> gauss;    // 1 / det b
  Vector<Scalar> kappa1;   // smaller principal curvature
  Vector<Scalar> kappa2;   // larger; equals kappa1 for n = 1
  Vector<Scalar> min_radius;
  Vector<Scalar> max_radius;

  Scalar min_eigenvalue = std::numeric_limits<Scalar>::infinity();
  Index worst_node = -1;
  bool convex = true;
};

class ConvexityLossError : public std::runtime_error {
 public:
  ConvexityLossError(Index node, double eigenvalue)
      : std::runtime_error("convexity lost at node " + std::to_string(node) +
                           " (smallest eigenvalue of b = " + std::to_string(eigenvalue) + ")"),
        node_(node),
        eigenvalue_(eigenvalue) {}
  Index node() const noexcept { return node_; }
  double eigenvalue() const noexcept { return eigenvalue_; }

 private:
  Index node_;
  double eigenvalue_;
};

/// States whose smallest radius of curvature is below this fraction of the
/// largest entry of b are treated as not strictly convex.
template <typename Scalar>
constexpr Scalar convexity_threshold = Scalar(1e-10);

template <typename Scalar>
CurvatureData<Scalar> curvature(const Vector<Scalar>& h, const FrameOperators<Scalar>& ops) {
  CurvatureData<Scalar> c;
  const Index n = h.size();
  c.b11 = ops.hess11 * h + h;
  if (ops.dim == 2) {
    c.b22 = ops.hess22 * h + h;
    c.b12 = ops.hess12 * h;
  } else {
    c.b22 = Vector<Scalar>::Ones(n);
    c.b12 = Vector<Scalar>::Zero(n);
  }
  c.sigma_n.resize(n);
  c.gauss.resize(n);
  c.kappa1.resize(n);
  c.kappa2.resize(n);
  c.min_radius.resize(n);
  c.max_radius.resize(n);
  Scalar max_entry = 0;
  for (Index a = 0; a < n; ++a) {
    Scalar lo, hi;
    if (ops.dim == 1) {
      lo = hi = c.b11[a];
      c.sigma_n[a] = c.b11[a];
      max_entry = std::max(max_entry, std::abs(c.b11[a]));
    } else {
      const Scalar mean = (c.b11[a] + c.b22[a]) / 2;
      const Scalar half = (c.b11[a] - c.b22[a]) / 2;
      const Scalar disc = std::sqrt(half * half + c.b12[a] * c.b12[a]);
      lo = mean - disc;
      hi = mean + disc;
      c.sigma_n[a] = c.b11[a] * c.b22[a] - c.b12[a] * c.b12[a];
      max_entry = std::max({max_entry, std::abs(c.b11[a]), std::abs(c.b22[a]), std::abs(c.b12[a])});
    }
    c.min_radius[a] = lo;
    c.max_radius[a] = hi;
    c.gauss[a] = Scalar(1) / c.sigma_n[a];
    c.kappa1[a] = Scalar(1) / hi;
    c.kappa2[a] = Scalar(1) / lo;
    if (lo < c.min_eigenvalue) {
      c.min_eigenvalue = lo;
      c.worst_node = a;
    }
  }
  c.convex = c.min_eigenvalue > convexity_threshold<Scalar> * max_entry;
  return c;
}

template <typename Scalar>
CurvatureData<Scalar> curvature(const SupportField<Scalar>& h) {
  return curvature(h.values, h.ops());
}

/// Frame gradient mapped to ambient coordinates, one row per node.
template <typename Scalar>
PointMatrix<Scalar> ambient_gradient(const Vector<Scalar>& h, const CapMesh<Scalar>& mesh,
                                     const FrameOperators<Scalar>& ops) {
  const Vector<Scalar> g1 = ops.grad[0] * h;
  PointMatrix<Scalar> g = mesh.frame1.array().colwise() * g1.array();
  if (mesh.dim == 2) {
    const Vector<Scalar> g2 = ops.grad[1] * h;
    g.array() += mesh.frame2.array().colwise() * g2.array();
  }
  return g;
}

template <typename Scalar>
Vector<Scalar> gradient_norm(const Vector<Scalar>& h, const FrameOperators<Scalar>& ops) {
  Vector<Scalar> g = (ops.grad[0] * h).cwiseAbs2();
  if (ops.dim == 2) g += (ops.grad[1] * h).cwiseAbs2();
  return g.cwiseSqrt();
}

/// Inverse capillary Gauss map: X(xi) = grad h + h nu.
template <typename Scalar>
PointMatrix<Scalar> embed(const SupportField<Scalar>& h) {
  const auto c = curvature(h);
  if (!c.convex) throw ConvexityLossError(c.worst_node, double(c.min_eigenvalue));
  PointMatrix<Scalar> x = ambient_gradient(h.values, h.mesh(), h.ops());
  x.array() += h.mesh().normals.array().colwise() * h.values.array();
  return x;
}

/// Robin residual is measured with one-sided stencils, so smooth capillary
/// fields show an O(d_rho^2) defect. Unset `robin` means d_rho * max|h|.
struct AdmissibilityTolerance {
  std::optional<double> robin;
  double evenness = 1e-12;
};

template <typename Scalar>
struct AdmissibilityReport {
  Scalar min_h{};
  Scalar min_eigenvalue{};
  Index worst_node = -1;
  Scalar robin_residual{};
  Scalar evenness_residual{};
  bool positive = false;
  bool convex = false;
  bool robin_ok = false;
  bool even_ok = true;
  bool passed = false;

  std::string summary() const {
    std::ostringstream os;
    os << (passed ? "admissible" : "not admissible") << ": min h = " << double(min_h)
       << ", min eig b = " << double(min_eigenvalue) << ", robin residual = " << double(robin_residual)
       << ", evenness residual = " << double(evenness_residual);
    if (!positive) os << " [positivity]";
    if (!convex) os << " [convexity]";
    if (!robin_ok) os << " [robin]";
    if (!even_ok) os << " [evenness]";
    return os.str();
  }
};

template <typename Scalar>
AdmissibilityReport<Scalar> validate_admissible(const SupportField<Scalar>& h,
                                                AdmissibilityTolerance tol = {}) {
  AdmissibilityReport<Scalar> r;
  r.min_h = h.values.minCoeff();
  const auto c = curvature(h);
  r.min_eigenvalue = c.min_eigenvalue;
  r.worst_node = c.worst_node;
  r.robin_residual = robin_residual(h.values, h.ops());
  r.evenness_residual = evenness_residual(h.values, h.mesh());
  r.positive = r.min_h > Scalar(0);
  r.convex = c.convex;
  const Scalar robin_tol =
      tol.robin ? Scalar(*tol.robin) : h.mesh().d_rho * h.values.cwiseAbs().maxCoeff();
  r.robin_ok = r.robin_residual <= robin_tol;
  r.even_ok = !h.even || r.evenness_residual <= Scalar(tol.evenness);
  r.passed = r.positive && r.convex && r.robin_ok && r.even_ok;
  return r;
}

/// Jacobian of h -> det(Hess h + h I) at h, via the cofactor matrix of b.
template <typename Scalar>
SparseMatrix<Scalar> det_jacobian(const CurvatureData<Scalar>& c, const FrameOperators<Scalar>& ops) {
  const Index n = c.b11.size();
  SparseMatrix<Scalar> id(n, n);
  id.setIdentity();
  if (ops.dim == 1) return SparseMatrix<Scalar>(ops.hess11 + id);
  SparseMatrix<Scalar> j = c.b22.asDiagonal() * (ops.hess11 + id);
  j += c.b11.asDiagonal() * (ops.hess22 + id);
  j -= (2 * c.b12).asDiagonal() * ops.hess12;
  return j;
}

}  // namespace capflow

#pragma once

#include "capflow/cap_mesh.hpp"

#include <cmath>
#include <string>

namespace capflow {

enum class DensityKind { constant, power_of_ell, even_trig, non_even_trig, tabulated };

/// Prescribed positive function f on the cap.
///
///   constant       c
///   power_of_ell   c * ell^q
///   even_trig      c (1 + eps cos(2 phi) sin^2 rho)
///   non_even_trig  c (1 + eps cos(phi) sin rho)
///   tabulated      per-node values
///
/// For n = 1 the signed angle rho plays the role of (rho, phi = 0).
template <typename Scalar>
struct DensitySpec {
  DensityKind kind = DensityKind::constant;
  Scalar c = 1;
  Scalar q = 0;
  Scalar eps = 0;
  Vector<Scalar> table;

  static DensitySpec constant(Scalar c) { return {DensityKind::constant, c}; }
  static DensitySpec power_of_ell(Scalar c, Scalar q) { return {DensityKind::power_of_ell, c, q}; }
  /// The density making every scaled cap a stationary solution for exponent p.
  static DensitySpec cap_stationary(Scalar p) { return power_of_ell(1, 1 - p); }
  static DensitySpec even_trig(Scalar c, Scalar eps) { return {DensityKind::even_trig, c, 0, eps}; }
  static DensitySpec non_even_trig(Scalar c, Scalar eps) { return {DensityKind::non_even_trig, c, 0, eps}; }
  static DensitySpec tabulated(Vector<Scalar> values) {
    DensitySpec d;
    d.kind = DensityKind::tabulated;
    d.table = std::move(values);
    return d;
  }

  /// Evenness of the closed-form kinds; tabulated data is checked on the mesh.
  bool even_flag() const { return kind != DensityKind::non_even_trig && kind != DensityKind::tabulated; }
};

inline std::string to_string(DensityKind k) {
  switch (k) {
    case DensityKind::constant: return "constant";
    case DensityKind::power_of_ell: return "power_of_ell";
    case DensityKind::even_trig: return "even_trig";
    case DensityKind::non_even_trig: return "non_even_trig";
    case DensityKind::tabulated: return "tabulated";
  }
  return "unknown";
}

template <typename Scalar>
Vector<Scalar> evaluate(const DensitySpec<Scalar>& f, const CapMesh<Scalar>& mesh) {
  const Index n = mesh.size();
  if (f.kind != DensityKind::tabulated && !(f.c > 0)) throw DomainError("density scale c must be positive");
  if ((f.kind == DensityKind::even_trig || f.kind == DensityKind::non_even_trig) && !(std::abs(f.eps) < 1))
    throw DomainError("density perturbation requires |eps| < 1 for positivity");
  Vector<Scalar> out(n);
  switch (f.kind) {
    case DensityKind::constant:
      out.setConstant(f.c);
      break;
    case DensityKind::power_of_ell: {
      const Vector<Scalar> ell = ell_field(mesh);
      out = f.c * ell.array().pow(f.q);
      break;
    }
    case DensityKind::even_trig:
      for (Index a = 0; a < n; ++a) {
        const Scalar s = std::sin(mesh.rho[a]);
        const Scalar c2 = mesh.dim == 1 ? Scalar(1) : std::cos(2 * mesh.phi[a]);
        out[a] = f.c * (1 + f.eps * c2 * s * s);
      }
      break;
    case DensityKind::non_even_trig:
      for (Index a = 0; a < n; ++a) {
        const Scalar c1 = mesh.dim == 1 ? Scalar(1) : std::cos(mesh.phi[a]);
        out[a] = f.c * (1 + f.eps * c1 * std::sin(mesh.rho[a]));
      }
      break;
    case DensityKind::tabulated:
      if (f.table.size() != n) throw ConfigError("tabulated density has wrong number of nodes", "density");
      out = f.table;
      break;
  }
  if (!(out.minCoeff() > 0)) throw DomainError("density must be strictly positive on every node");
  return out;
}

/// Pointwise reflection test on the mesh.
template <typename Scalar>
bool is_even(const DensitySpec<Scalar>& f, const CapMesh<Scalar>& mesh, Scalar tol = Scalar(1e-12)) {
  const Vector<Scalar> v = evaluate(f, mesh);
  return evenness_residual(v, mesh) <= tol * v.cwiseAbs().maxCoeff();
}

}  // namespace capflow

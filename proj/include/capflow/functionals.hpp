#pragma once

#include "capflow/convex_state.hpp"
#include "capflow/density.hpp"

#include <cmath>

namespace capflow {

/// Enclosed volume via the cone formula (n+1)^{-1} int h / K; the flat face
/// contributes nothing because the origin lies on the support hyperplane.
template <typename Scalar>
Scalar volume(const Vector<Scalar>& h, const CurvatureData<Scalar>& c, const CapMesh<Scalar>& mesh) {
  return mesh.weights.dot(h.cwiseProduct(c.sigma_n)) / Scalar(mesh.dim + 1);
}

template <typename Scalar>
Scalar volume(const SupportField<Scalar>& h) {
  return volume(h.values, curvature(h), h.mesh());
}

/// int f h^p (p = 0 gives int f).
template <typename Scalar>
Scalar lp_integral(const Vector<Scalar>& h, const Vector<Scalar>& f, Scalar p, const CapMesh<Scalar>& mesh) {
  if (p == Scalar(0)) return mesh.weights.dot(f);
  return mesh.weights.dot(f.cwiseProduct(h.array().pow(p).matrix()));
}

/// alpha = (n+1) V / int f h^p.
template <typename Scalar>
Scalar normalization_factor(const Vector<Scalar>& h, const Vector<Scalar>& f, Scalar p, Scalar vol,
                            const CapMesh<Scalar>& mesh) {
  return Scalar(mesh.dim + 1) * vol / lp_integral(h, f, p, mesh);
}

template <typename Scalar>
Scalar J_value(const Vector<Scalar>& h, const Vector<Scalar>& f, Scalar p, Scalar v0, const CapMesh<Scalar>& mesh) {
  if (!(h.minCoeff() > 0)) throw DomainError("J requires a positive support function");
  if (!(v0 > 0)) throw DomainError("J requires a positive reference volume");
  const Scalar base = -std::log(v0) / Scalar(mesh.dim + 1);
  if (p == Scalar(0))
    return base + mesh.weights.dot(f.cwiseProduct(h.array().log().matrix())) / mesh.weights.dot(f);
  return base + std::log(lp_integral(h, f, p, mesh)) / p;
}

/// Exact rate dJ/dtau along the normalized flow:
///   -int (-h + alpha f h^p K)^2 / ((n+1) V0 h K),  alpha = (n+1) V0 / int f h^p.
template <typename Scalar>
Scalar J_dissipation(const Vector<Scalar>& h, const CurvatureData<Scalar>& c, const Vector<Scalar>& f, Scalar p,
                     Scalar v0, const CapMesh<Scalar>& mesh) {
  const Scalar alpha = normalization_factor(h, f, p, v0, mesh);
  const Vector<Scalar> hp = p == Scalar(0) ? Vector<Scalar>::Ones(h.size()) : Vector<Scalar>(h.array().pow(p));
  const Vector<Scalar> speed = (alpha * f.array() * hp.array() * c.gauss.array() - h.array()).matrix();
  const Vector<Scalar> integrand = speed.cwiseAbs2().cwiseProduct(c.sigma_n).cwiseQuotient(h);
  return -mesh.weights.dot(integrand) / (Scalar(mesh.dim + 1) * v0);
}

/// -V + (1/p) int f h^p, monotone along the unnormalized flow.
template <typename Scalar>
Scalar J_tilde_value(const Vector<Scalar>& h, const CurvatureData<Scalar>& c, const Vector<Scalar>& f, Scalar p,
                     const CapMesh<Scalar>& mesh) {
  if (p == Scalar(0)) throw DomainError("J_tilde is defined for p != 0 only");
  return -volume(h, c, mesh) + lp_integral(h, f, p, mesh) / p;
}

/// -int (-h + f h^p K)^2 / (h K).
template <typename Scalar>
Scalar J_tilde_dissipation(const Vector<Scalar>& h, const CurvatureData<Scalar>& c, const Vector<Scalar>& f, Scalar p,
                           const CapMesh<Scalar>& mesh) {
  const Vector<Scalar> speed = (f.array() * h.array().pow(p) * c.gauss.array() - h.array()).matrix();
  return -mesh.weights.dot(speed.cwiseAbs2().cwiseProduct(c.sigma_n).cwiseQuotient(h));
}

template <typename Scalar>
struct MeasureDensities {
  Vector<Scalar> area;  // ell / K
  Vector<Scalar> lp;    // ell h^{1-p} / K
};

/// Densities of the capillary area measure and the capillary L_p area measure
/// with respect to the area element of the cap.
template <typename Scalar>
MeasureDensities<Scalar> measure_densities(const Vector<Scalar>& h, const CurvatureData<Scalar>& c, Scalar p,
                                           const Vector<Scalar>& ell) {
  MeasureDensities<Scalar> m;
  m.area = ell.cwiseProduct(c.sigma_n);
  m.lp = (m.area.array() * h.array().pow(1 - p)).matrix();
  return m;
}

/// One row of the per-step diagnostics; column order is the CSV schema.
template <typename Scalar>
struct DiagnosticsRecord {
  Scalar tau{};
  Scalar J{};
  Scalar J_tilde{};
  Scalar V{};
  Scalar alpha{};
  Scalar min_h{};
  Scalar max_h{};
  Scalar max_grad_h{};
  Scalar min_K{};
  Scalar max_K{};
  Scalar min_kappa{};
  Scalar max_kappa{};
  Scalar min_h_over_ell{};
  Scalar robin_residual{};
  Scalar speed_sup{};
  Scalar stationary_residual{};

  static constexpr const char* columns[] = {"tau",       "J",          "J_tilde",        "V",
                                            "alpha",     "min_h",      "max_h",          "max_grad_h",
                                            "min_K",     "max_K",      "min_kappa",      "max_kappa",
                                            "min_h_over_ell", "robin_residual", "speed_sup", "stationary_residual"};
  static constexpr int column_count = 16;

  std::array<Scalar, 16> values() const {
    return {tau,   J,     J_tilde,   V,         alpha,     min_h,          max_h,          max_grad_h,
            min_K, max_K, min_kappa, max_kappa, min_h_over_ell, robin_residual, speed_sup, stationary_residual};
  }

  static DiagnosticsRecord from_values(const std::array<Scalar, 16>& v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10], v[11], v[12], v[13], v[14], v[15]};
  }
};

}  // namespace capflow

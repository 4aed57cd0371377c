#pragma once

#include "capflow/convex_state.hpp"
#include "capflow/density.hpp"
#include "capflow/functionals.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace capflow {

/// unnormalized:  det(Hess h + h I) = f h^{p-1}
/// normalized:    det(Hess h + h I) = lambda f h^{p-1},  V(h) = V0
enum class StationaryMode { unnormalized, normalized };

inline std::string to_string(StationaryMode m) {
  return m == StationaryMode::normalized ? "normalized" : "unnormalized";
}

/// One continuation stage: exponent p and blend s of the density,
/// f_s = (ell^{1-p})^{1-s} f^s. s = 0 has the exact cap solution.
template <typename Scalar>
struct ContinuationStage {
  Scalar p{};
  Scalar blend{};
};

template <typename Scalar>
struct NewtonConfig {
  Scalar tol_residual = Scalar(1e-10);
  int max_iters = 40;
  Scalar initial_fraction = 1;
  Scalar backtrack_ratio = Scalar(0.5);
  Scalar min_fraction = Scalar(1.0 / 1024);
  /// Empty: blends 0, 1/4, 1/2, 3/4, 1 at the target p.
  std::vector<ContinuationStage<Scalar>> plan;
  /// Halvings of a blend increment before giving up.
  int max_stage_halvings = 12;
};

template <typename Scalar>
void validate(const NewtonConfig<Scalar>& c) {
  if (!(c.tol_residual > 0)) throw ConfigError("tol_residual must be positive", "tol_residual");
  if (c.max_iters < 1) throw ConfigError("max_iters must be at least 1", "max_iters");
  if (!(c.initial_fraction > 0 && c.initial_fraction <= 1))
    throw ConfigError("initial_fraction must lie in (0, 1]", "initial_fraction");
  if (!(c.backtrack_ratio > 0 && c.backtrack_ratio < 1))
    throw ConfigError("backtrack_ratio must lie in (0, 1)", "backtrack_ratio");
  if (!(c.min_fraction > 0 && c.min_fraction <= c.initial_fraction))
    throw ConfigError("min_fraction must lie in (0, initial_fraction]", "min_fraction");
  if (!c.plan.empty() && c.plan.front().blend != Scalar(0))
    throw ConfigError("continuation plan must start at blend 0 (exact cap solution)", "plan");
  for (const auto& st : c.plan)
    if (!(st.blend >= 0 && st.blend <= 1)) throw ConfigError("plan blends must lie in [0, 1]", "plan");
}

template <typename Scalar>
struct NewtonIterate {
  Scalar p{};
  Scalar blend{};
  int iteration = 0;
  Scalar residual{};
  Scalar step_fraction{};
};

template <typename Scalar>
struct NewtonResult {
  SupportField<Scalar> h;
  Scalar lambda = 1;
  Scalar residual{};
  bool converged = false;
  /// Target outside the hypotheses of the existence theory (p <= n+1
  /// unnormalized); the solve is attempted anyway.
  bool experimental = false;
  std::vector<NewtonIterate<Scalar>> trace;
  std::string message;

  /// max r_{k+1} / r_k^2 over the final stage's last iterations.
  Scalar quadratic_ratio() const {
    Scalar worst = 0;
    for (std::size_t k = 1; k < trace.size(); ++k) {
      const auto& a = trace[k - 1];
      const auto& b = trace[k];
      if (a.blend != b.blend || a.p != b.p || b.iteration != a.iteration + 1) continue;
      if (a.residual > Scalar(1e-2) || b.residual < Scalar(1e-13) || b.step_fraction != Scalar(1)) continue;
      worst = std::max(worst, b.residual / (a.residual * a.residual));
    }
    return worst;
  }
};

namespace detail {

template <typename Scalar>
struct StationarySystem {
  const CapGeometry<Scalar>& g;
  StationaryMode mode;
  Scalar p;
  Vector<Scalar> f;  // blended density at nodes
  Scalar v0;

  const CapMesh<Scalar>& mesh() const { return g.mesh; }

  /// Relative residual: max |det b - lambda f h^{p-1}| / max |lambda f h^{p-1}|.
  Scalar residual(const Vector<Scalar>& h, Scalar lambda, const CurvatureData<Scalar>& c) const {
    const Vector<Scalar> rhs = (lambda * f.array() * h.array().pow(p - 1)).matrix();
    Scalar r = (c.sigma_n - rhs).cwiseAbs().maxCoeff() / rhs.cwiseAbs().maxCoeff();
    if (mode == StationaryMode::normalized) r += std::abs(volume(h, c, mesh()) - v0) / v0;
    return r;
  }
};

}  // namespace detail

/// Damped Newton solve of the stationary equations on the ghost-closed grid,
/// with continuation in the density blend from the cap solution. `guess`
/// skips continuation and starts the final stage from the given values.
template <typename Scalar>
NewtonResult<Scalar> solve_stationary(const DensitySpec<Scalar>& f_spec, std::type_identity_t<Scalar> p,
                                      std::shared_ptr<const CapGeometry<Scalar>> geometry, StationaryMode mode,
                                      std::optional<std::type_identity_t<Scalar>> v0,
                                      const NewtonConfig<Scalar>& config,
                                      std::optional<Vector<std::type_identity_t<Scalar>>> guess = std::nullopt) {
  validate(config);
  const auto& g = *geometry;
  const auto& mesh = g.mesh;
  const int n = mesh.dim;
  const Vector<Scalar> f_target = evaluate(f_spec, mesh);
  const bool even = is_even(f_spec, mesh);
  if (mode == StationaryMode::normalized) {
    if (!v0 || !(*v0 > 0)) throw ConfigError("normalized mode needs V0 > 0", "V0");
    if (!even) throw ConfigError("normalized mode needs an even density f", "density");
  }
  if (!(p > -Scalar(n + 1))) throw ConfigError("p must exceed -n-1", "p");

  NewtonResult<Scalar> result;
  result.experimental = mode == StationaryMode::unnormalized && p <= Scalar(n + 1);

  std::vector<ContinuationStage<Scalar>> plan = config.plan;
  if (plan.empty())
    for (Scalar s : {Scalar(0), Scalar(0.25), Scalar(0.5), Scalar(0.75), Scalar(1)}) plan.push_back({p, s});
  if (plan.back().blend != Scalar(1) || plan.back().p != p) plan.push_back({p, Scalar(1)});

  // Stage-0 exact solution: h = c ell with c^{n+1} = V0 / V(ell) (normalized) or c = 1.
  const Vector<Scalar>& ell = g.ell;
  auto cap_start = [&](Scalar stage_p, Vector<Scalar>& h, Scalar& lambda) {
    Scalar c = 1;
    if (mode == StationaryMode::normalized) {
      const Scalar vc = volume(ell, curvature(ell, g.ops), mesh);
      c = std::pow(*v0 / vc, Scalar(1) / Scalar(n + 1));
    }
    h = c * ell;
    lambda = mode == StationaryMode::normalized ? std::pow(c, Scalar(n + 1) - stage_p) : Scalar(1);
  };

  auto blended = [&](Scalar stage_p, Scalar s) {
    return Vector<Scalar>(
        (ell.array().log() * ((Scalar(1) - stage_p) * (1 - s)) + f_target.array().log() * s).exp().matrix());
  };

  Eigen::SparseLU<SparseMatrix<Scalar>, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;

  Vector<Scalar> h;
  Scalar lambda = 1;
  std::size_t first_stage = 0;
  if (guess) {
    if (guess->size() != mesh.size()) throw ConfigError("initial guess has wrong number of nodes", "guess");
    h = *guess;
    if (mode == StationaryMode::normalized) {
      const auto c = curvature(h, g.ops);
      lambda = normalization_factor(h, f_target, p, volume(h, c, mesh), mesh);
    }
    first_stage = plan.size() - 1;
  } else {
    cap_start(plan.front().p, h, lambda);
  }

  // Newton at fixed (p, blend). Returns true on convergence; h, lambda updated.
  auto newton = [&](Scalar stage_p, Scalar s, Vector<Scalar>& hh, Scalar& lam, std::string& why) -> bool {
    detail::StationarySystem<Scalar> sys{g, mode, stage_p, blended(stage_p, s), v0.value_or(Scalar(0))};
    auto c = curvature(hh, g.ops);
    Scalar res = sys.residual(hh, lam, c);
    Scalar step_fraction = 0;
    for (int it = 0;; ++it) {
      result.trace.push_back({stage_p, s, it, res, step_fraction});
      if (res <= config.tol_residual) return true;
      if (it >= config.max_iters) {
        why = "no convergence in " + std::to_string(config.max_iters) + " iterations";
        return false;
      }
      // G(h) = det b - lam f h^{p-1}
      const Vector<Scalar> fh = (sys.f.array() * hh.array().pow(stage_p - 1)).matrix();
      const Vector<Scalar> G = c.sigma_n - lam * fh;
      SparseMatrix<Scalar> jac = det_jacobian(c, g.ops);
      const Vector<Scalar> dfh = ((stage_p - 1) * lam * fh.array() / hh.array()).matrix();
      jac -= SparseMatrix<Scalar>(dfh.asDiagonal());
      if (!analyzed) {
        lu.analyzePattern(jac);
        analyzed = true;
      }
      lu.factorize(jac);
      if (lu.info() != Eigen::Success) {
        why = "singular Newton matrix";
        return false;
      }
      Vector<Scalar> dh;
      Scalar dlam = 0;
      if (mode == StationaryMode::unnormalized) {
        dh = lu.solve(Vector<Scalar>(-G));
      } else {
        // Bordered: jac dh - fh dlam = -G,  grad V . dh = V0 - V.
        const Vector<Scalar>& w = mesh.weights;
        const Vector<Scalar> gradv =
            (w.cwiseProduct(c.sigma_n) + det_jacobian(c, g.ops).transpose() * w.cwiseProduct(hh)) / Scalar(n + 1);
        const Vector<Scalar> a = lu.solve(Vector<Scalar>(-G));
        const Vector<Scalar> b = lu.solve(fh);
        const Scalar gap = sys.v0 - volume(hh, c, mesh);
        const Scalar denom = gradv.dot(b);
        if (!(std::abs(denom) > 0)) {
          why = "degenerate volume constraint";
          return false;
        }
        dlam = (gap - gradv.dot(a)) / denom;
        dh = a + dlam * b;
      }
      if (even) dh = symmetrize_even(dh, mesh);
      Scalar t = config.initial_fraction;
      bool moved = false;
      for (; t >= config.min_fraction; t *= config.backtrack_ratio) {
        Vector<Scalar> trial = hh + t * dh;
        if (!(trial.minCoeff() > 0)) continue;
        const auto ct = curvature(trial, g.ops);
        if (!ct.convex) continue;
        const Scalar lt = lam + t * dlam;
        const Scalar rt = sys.residual(trial, lt, ct);
        if (!(rt < res || rt <= config.tol_residual)) continue;
        hh = std::move(trial);
        lam = lt;
        c = ct;
        res = rt;
        moved = true;
        break;
      }
      if (!moved) {
        why = "line search failed (ellipticity or residual) at residual " + std::to_string(double(res));
        return false;
      }
      step_fraction = t;
    }
  };

  std::string why;
  Scalar prev_blend = first_stage > 0 ? plan[first_stage - 1].blend : plan.front().blend;
  Scalar prev_p = first_stage > 0 ? plan[first_stage - 1].p : plan.front().p;
  for (std::size_t k = first_stage; k < plan.size(); ++k) {
    const auto target = plan[k];
    Vector<Scalar> h_ok = h;
    Scalar lam_ok = lambda;
    Scalar s_ok = prev_blend, p_ok = prev_p;
    int halvings = 0;
    Scalar frac = 1;
    for (;;) {
      const Scalar s = s_ok + frac * (target.blend - s_ok);
      const Scalar pp = p_ok + frac * (target.p - p_ok);
      Vector<Scalar> ht = h_ok;
      Scalar lt = lam_ok;
      if (newton(pp, s, ht, lt, why)) {
        h_ok = std::move(ht);
        lam_ok = lt;
        s_ok = s;
        p_ok = pp;
        if (s == target.blend && pp == target.p) break;
        frac = 1;
        continue;
      }
      if (guess && k == first_stage) {
        result.message = "Newton from the given guess failed: " + why;
        result.h = make_field(geometry, h_ok, even);
        result.lambda = lam_ok;
        result.residual = result.trace.back().residual;
        return result;
      }
      if (++halvings > config.max_stage_halvings) {
        std::ostringstream os;
        os << "continuation stalled at blend " << double(s_ok) << ", p " << double(p_ok) << ": " << why;
        result.message = os.str();
        result.h = make_field(geometry, h_ok, even);
        result.lambda = lam_ok;
        result.residual = result.trace.back().residual;
        return result;
      }
      frac /= 2;
    }
    h = std::move(h_ok);
    lambda = lam_ok;
    prev_blend = s_ok;
    prev_p = p_ok;
  }

  result.h = make_field(geometry, h, even);
  result.lambda = lambda;
  result.residual = result.trace.back().residual;
  result.converged = true;
  if (even && evenness_residual(h, mesh) > Scalar(1e-12)) {
    result.converged = false;
    result.message = "even target produced a non-even solution";
    return result;
  }
  result.message = "converged";
  return result;
}

}  // namespace capflow

#pragma once

#include "capflow/functionals.hpp"

#include <Eigen/SparseLU>

#include <chrono>
#include <iomanip>
#include <sstream>
#include <cmath>
#include <optional>
#include <string>

namespace capflow {

enum class FlowKind { normalized, unnormalized_lp, shrinking };
enum class Integrator { linear_implicit, explicit_euler };
enum class VolumeControl { constrained, formula };
enum class BumpKind { none, even, non_even };
enum class Outcome { converged, max_steps, failed };

inline std::string to_string(FlowKind k) {
  switch (k) {
    case FlowKind::normalized: return "normalized";
    case FlowKind::unnormalized_lp: return "unnormalized_lp";
    case FlowKind::shrinking: return "shrinking";
  }
  return "unknown";
}

inline std::string to_string(Integrator i) {
  return i == Integrator::linear_implicit ? "linear_implicit" : "explicit_euler";
}

inline std::string to_string(VolumeControl v) { return v == VolumeControl::constrained ? "constrained" : "formula"; }

inline std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::converged: return "converged";
    case Outcome::max_steps: return "max_steps";
    case Outcome::failed: return "failed";
  }
  return "unknown";
}

/// Initial support function h0 = scale * ell * (1 + eps * bump), or tabulated
/// values. When `target_volume` is set the scale is chosen to meet it.
template <typename Scalar>
struct InitialData {
  Scalar scale = 1;
  std::optional<Scalar> target_volume;
  BumpKind bump = BumpKind::none;
  Scalar eps = 0;
  std::optional<Vector<Scalar>> tabulated;
};

template <typename Scalar>
struct FlowConfig {
  FlowKind kind = FlowKind::normalized;
  Scalar p = 2;
  Scalar theta = pi_v<Scalar> / 4;
  int dim = 2;
  Resolution resolution{};
  DensitySpec<Scalar> f = DensitySpec<Scalar>::constant(1);
  InitialData<Scalar> initial{};
  Integrator integrator = Integrator::linear_implicit;
  /// constrained: the normalized flow picks alpha each step so the discrete
  /// volume stays at V0. formula: alpha from the current state only.
  VolumeControl volume_control = VolumeControl::constrained;
  Scalar dt_init = Scalar(1e-2);
  Scalar dt_min = Scalar(1e-12);
  Scalar dt_max = Scalar(1);
  Scalar cfl_safety = Scalar(0.5);
  Scalar tol_stationary = Scalar(1e-6);
  Scalar tol_volume_drift = Scalar(1e-3);
  int max_steps = 10000;
  bool enforce_even = true;
  Scalar monotonicity_slack = Scalar(1e-10);
  int max_halvings = 40;
  Scalar volume_floor = Scalar(1e-8);
  Scalar barrier_tol = Scalar(1e-6);
  /// Stop, reported as max_steps, after this many consecutive steps whose dt
  /// was cut by the monotonicity test. 0 disables.
  int stall_window = 200;
  /// The step matrix is refactored unless dt is unchanged and the state moved
  /// by at most this fraction of max|h| since the last factorization.
  Scalar jacobian_reuse_tol = Scalar(1e-8);
};

/// Checks the hypotheses under which each flow is posed. Throws ConfigError
/// naming the offending key.
template <typename Scalar>
void validate(const FlowConfig<Scalar>& c) {
  const int n = c.dim;
  if (!(c.theta > 0 && c.theta < pi_v<Scalar> / 2))
    throw ConfigError("theta must lie in (0, pi/2); got " + std::to_string(double(c.theta)), "theta");
  if (n != 1 && n != 2) throw ConfigError("dim must be 1 or 2", "dim");
  if (c.kind == FlowKind::unnormalized_lp) {
    if (!(c.p > n + 1))
      throw ConfigError("unnormalized_lp flow requires p > n + 1 = " + std::to_string(n + 1), "p");
  } else {
    if (!(c.p > -n - 1)) throw ConfigError("normalized flow requires p > -n - 1 = " + std::to_string(-n - 1), "p");
    if (!c.enforce_even) throw ConfigError("normalized flow requires enforce_even = true", "enforce_even");
    if (c.f.kind == DensityKind::non_even_trig)
      throw ConfigError("normalized flow requires an even density f", "density");
  }
  if (!(c.dt_min > 0 && c.dt_min <= c.dt_init && c.dt_init <= c.dt_max))
    throw ConfigError("time steps must satisfy 0 < dt_min <= dt_init <= dt_max", "dt_init");
  if (!(c.cfl_safety > 0 && c.cfl_safety <= 1)) throw ConfigError("cfl_safety must lie in (0, 1]", "cfl_safety");
  if (!(c.tol_stationary > 0)) throw ConfigError("tol_stationary must be positive", "tol_stationary");
  if (!(c.tol_volume_drift > 0)) throw ConfigError("tol_volume_drift must be positive", "tol_volume_drift");
  if (c.max_steps < 1) throw ConfigError("max_steps must be at least 1", "max_steps");
  if (c.initial.target_volume && !(*c.initial.target_volume > 0))
    throw ConfigError("target_volume must be positive", "initial");
  if (!(c.initial.scale > 0)) throw ConfigError("initial scale must be positive", "initial");
}

template <typename Scalar>
struct FlowState {
  SupportField<Scalar> h;
  Scalar tau = 0;
  Scalar t = 0;
  long step_index = 0;
  Scalar dt = 0;
  Scalar V0 = 0;
  /// Lower bound for min(h / ell) along the unnormalized flow.
  Scalar barrier = 0;
  std::vector<DiagnosticsRecord<Scalar>> history;
};

struct StepReport {
  bool accepted = false;
  int rejections = 0;
  /// Some attempt was rejected by the monotonicity test.
  bool gated = false;
  std::string failure;
};

template <typename Scalar>
struct RunResult {
  FlowState<Scalar> state;
  Outcome outcome = Outcome::failed;
  std::string message;
  long rejected_steps = 0;
  double wall_seconds = 0;
};

/// Bump with vanishing normal derivative on the boundary, so that
/// ell * (1 + eps * bump) keeps the Robin condition.
template <typename Scalar>
Vector<Scalar> bump_field(BumpKind kind, const CapMesh<Scalar>& mesh) {
  Vector<Scalar> g = Vector<Scalar>::Zero(mesh.size());
  if (kind == BumpKind::none) return g;
  for (Index a = 0; a < mesh.size(); ++a) {
    const Scalar r = mesh.rho[a] / mesh.theta;
    if (kind == BumpKind::even) {
      const Scalar ang = mesh.dim == 1 ? Scalar(1) : std::cos(2 * mesh.phi[a]);
      g[a] = ang * (r * r - r * r * r * r / 2);
    } else {
      const Scalar ang = mesh.dim == 1 ? Scalar(1) : std::cos(mesh.phi[a]);
      g[a] = ang * (r - r * r * r / 3);
    }
  }
  return g;
}

/// h0 from the initial-data description; `even` symmetrizes the built field.
template <typename Scalar>
Vector<Scalar> initial_values(const InitialData<Scalar>& init, const CapGeometry<Scalar>& g, bool even) {
  const auto& mesh = g.mesh;
  if (init.tabulated) {
    if (init.tabulated->size() != mesh.size())
      throw ConfigError("tabulated initial data has wrong number of nodes", "initial");
    return *init.tabulated;
  }
  Vector<Scalar> h = g.ell.cwiseProduct((Vector<Scalar>::Ones(mesh.size()) + init.eps * bump_field(init.bump, mesh)));
  if (even) h = symmetrize_even(h, mesh);
  Scalar scale = init.scale;
  if (init.target_volume) {
    const Scalar v = volume(h, curvature(h, g.ops), mesh);
    scale = std::pow(*init.target_volume / v, Scalar(1) / Scalar(mesh.dim + 1));
  }
  return scale * h;
}

/// Time stepper for the three capillary Gauss-curvature-type flows acting on
/// the capillary support function.
///
///   normalized       d_tau h = -alpha f h^p K + h
///   unnormalized_lp  d_tau h = -f h^p K + h
///   shrinking        d_t h   = -f h^p K
///
/// Each step is a linearly implicit Euler step (or explicit Euler, on request)
/// on all nodes; the Robin condition enters through the ghost-closed boundary
/// rows of the curvature operators. A step is accepted only if the new state is positive,
/// strictly convex and does not increase the flow's monotone functional beyond
/// the configured slack; otherwise dt is halved and the step retried.
template <typename Scalar>
class FlowSolver {
 public:
  explicit FlowSolver(FlowConfig<Scalar> config)
      : FlowSolver(config, make_geometry(config.theta, config.dim, config.resolution)) {}

  FlowSolver(FlowConfig<Scalar> config, std::shared_ptr<const CapGeometry<Scalar>> geometry)
      : config_(std::move(config)), geometry_(std::move(geometry)) {
    validate(config_);
    f_ = evaluate(config_.f, mesh());
    if (config_.enforce_even && !is_even(config_.f, mesh()))
      throw ConfigError("enforce_even requires an even density f", "density");
  }

  const FlowConfig<Scalar>& config() const { return config_; }
  const CapMesh<Scalar>& mesh() const { return geometry_->mesh; }
  const FrameOperators<Scalar>& ops() const { return geometry_->ops; }
  const std::shared_ptr<const CapGeometry<Scalar>>& geometry() const { return geometry_; }
  const Vector<Scalar>& density() const { return f_; }
  Scalar p() const { return config_.p; }

  Vector<Scalar> initial_values() const { return capflow::initial_values(config_.initial, *geometry_, config_.enforce_even); }

  FlowState<Scalar> initial_state() const { return make_state(initial_values()); }

  FlowState<Scalar> make_state(Vector<Scalar> h0) const {
    FlowState<Scalar> s;
    s.h = make_field(geometry_, std::move(h0), config_.enforce_even);
    const auto report = validate_admissible(s.h);
    if (!report.passed) throw ConfigError("initial data: " + report.summary(), "initial");
    const auto c = curvature(s.h);
    s.V0 = volume(s.h.values, c, mesh());
    if (!(s.V0 > 0)) throw DomainError("initial body has non-positive volume");
    s.dt = config_.dt_init;
    if (config_.kind == FlowKind::unnormalized_lp) s.barrier = barrier_bound(s.h.values);
    s.history.push_back(diagnostics(s));
    return s;
  }

  /// min{ min(h0 / ell), (max f ell^{p-1})^{-1/(p-n-1)} }.
  Scalar barrier_bound(const Vector<Scalar>& h0) const {
    const Vector<Scalar>& ell = geometry_->ell;
    const Scalar start = h0.cwiseQuotient(ell).minCoeff();
    const Scalar fmax = (f_.array() * ell.array().pow(config_.p - 1)).maxCoeff();
    const Scalar level = std::pow(fmax, Scalar(-1) / (config_.p - Scalar(mesh().dim + 1)));
    return std::min(start, level);
  }

  /// f h^p K per node.
  Vector<Scalar> curvature_speed(const Vector<Scalar>& h, const CurvatureData<Scalar>& c) const {
    if (config_.p == Scalar(0)) return f_.cwiseProduct(c.gauss);
    return (f_.array() * h.array().pow(config_.p) * c.gauss.array()).matrix();
  }

  /// Normalization factor actually used by the normalized flow; the volume is
  /// that of the current state.
  Scalar alpha(const Vector<Scalar>& h, const CurvatureData<Scalar>& c) const {
    return normalization_factor(h, f_, config_.p, volume(h, c, mesh()), mesh());
  }

  /// Right-hand side d h / d(time) of the selected flow, on all nodes.
  Vector<Scalar> speed(FlowKind kind, const Vector<Scalar>& h, const CurvatureData<Scalar>& c) const {
    const Vector<Scalar> s = curvature_speed(h, c);
    switch (kind) {
      case FlowKind::normalized: return h - alpha(h, c) * s;
      case FlowKind::unnormalized_lp: return h - s;
      case FlowKind::shrinking: return -s;
    }
    return s;
  }

  /// Relative Monge-Ampere residual over all nodes. In normalized mode the
  /// right-hand side is alpha f h^{p-1} with alpha from `reference_volume`.
  Scalar stationary_residual(const Vector<Scalar>& h, bool normalized_mode,
                             std::optional<Scalar> reference_volume = std::nullopt) const {
    const auto c = curvature(h, ops());
    Scalar a = 1;
    if (normalized_mode)
      a = normalization_factor(h, f_, config_.p, reference_volume.value_or(volume(h, c, mesh())), mesh());
    const Vector<Scalar> rhs = (a * f_.array() * h.array().pow(config_.p - 1)).matrix();
    Scalar num = 0, den = 0;
    for (Index i = 0; i < h.size(); ++i) {
      num = std::max(num, std::abs(c.sigma_n[i] - rhs[i]));
      den = std::max(den, std::abs(rhs[i]));
    }
    return num / den;
  }

  /// One integrator update of size dt, without acceptance tests. `target_volume`
  /// is used by the normalized flow under VolumeControl::constrained.
  Vector<Scalar> advance(FlowKind kind, const Vector<Scalar>& h, Scalar dt,
                         std::optional<Scalar> target_volume = std::nullopt) {
    const auto c = curvature(h, ops());
    const Vector<Scalar> s = curvature_speed(h, c);
    const Scalar a = kind == FlowKind::normalized ? alpha(h, c) : Scalar(1);
    const Scalar lin = kind == FlowKind::shrinking ? Scalar(0) : Scalar(1);
    // next = h + A^{-1} dt (lin h - a S); both parts kept apart so a can be re-chosen.
    Vector<Scalar> up = dt * lin * h;
    Vector<Scalar> down = dt * s;
    if (config_.integrator == Integrator::linear_implicit) {
      const Index n = h.size();
      const bool reuse = factor_ready_ && factor_kind_ == kind && factor_dt_ == dt &&
                         (h - factor_h_).cwiseAbs().maxCoeff() <= config_.jacobian_reuse_tol * h.cwiseAbs().maxCoeff();
      if (!reuse) {
        // d(rate) = lin dh - a (p S / h dh + S / det d det)
        const Vector<Scalar> diag = Vector<Scalar>::Constant(n, lin) - a * config_.p * s.cwiseQuotient(h);
        const SparseMatrix<Scalar> jac_det = det_jacobian(c, ops());
        SparseMatrix<Scalar> jac = (a * s.cwiseQuotient(c.sigma_n)).asDiagonal() * jac_det;
        SparseMatrix<Scalar> id(n, n);
        id.setIdentity();
        const SparseMatrix<Scalar> system = id - dt * (jac + SparseMatrix<Scalar>(diag.asDiagonal()));
        factorize(system);
        factor_ready_ = true;
        factor_kind_ = kind;
        factor_dt_ = dt;
        factor_h_ = h;
      }
      up = lu_.solve(up);
      down = lu_.solve(down);
    }
    if (config_.enforce_even) {
      up = symmetrize_even(up, mesh());
      down = symmetrize_even(down, mesh());
    }
    Scalar coef = a;
    if (kind == FlowKind::normalized && config_.volume_control == VolumeControl::constrained && target_volume)
      coef = constrained_alpha(h, up, down, a, *target_volume);
    return h + up - coef * down;
  }

  StepReport step_normalized(FlowState<Scalar>& s) { return step_impl(FlowKind::normalized, s); }
  StepReport step_unnormalized_lp(FlowState<Scalar>& s) { return step_impl(FlowKind::unnormalized_lp, s); }
  /// Advances t and sets tau = -(n+1)^{-1} log(V / V0); the values are not
  /// rescaled, that is the business of rescale().
  StepReport step_shrinking(FlowState<Scalar>& s) { return step_impl(FlowKind::shrinking, s); }

  StepReport step(FlowState<Scalar>& s) { return step_impl(config_.kind, s); }

  /// Rescales a shrinking-flow state to volume `v0` and returns it together with
  /// the increment of tau = -(n+1)^{-1} log(V_t / V0) since `s.tau`.
  std::pair<FlowState<Scalar>, Scalar> rescale(const FlowState<Scalar>& s, Scalar v0) const {
    const Scalar v = volume(s.h);
    const Scalar inv = Scalar(1) / Scalar(mesh().dim + 1);
    FlowState<Scalar> out = s;
    out.h.values *= std::pow(v0 / v, inv);
    out.V0 = v0;
    const Scalar tau = -inv * std::log(v / v0);
    out.tau = tau;
    return {out, tau - s.tau};
  }

  DiagnosticsRecord<Scalar> diagnostics(const FlowState<Scalar>& s) const {
    if (config_.kind == FlowKind::shrinking) {
      auto rescaled = rescale(s, s.V0).first;
      auto d = diagnostics_of(rescaled, FlowKind::normalized);
      d.V = volume(s.h);
      return d;
    }
    return diagnostics_of(s, config_.kind);
  }

  RunResult<Scalar> run() { return run(initial_state()); }

  RunResult<Scalar> run(FlowState<Scalar> state) {
    const auto start = std::chrono::steady_clock::now();
    RunResult<Scalar> result;
    auto finish = [&](Outcome o, std::string msg) {
      result.state = std::move(state);
      result.outcome = o;
      result.message = std::move(msg);
      result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return result;
    };
    if (state.history.empty()) state.history.push_back(diagnostics(state));
    auto sci = [](Scalar x) {
      std::ostringstream os;
      os << std::scientific << std::setprecision(3) << double(x);
      return os.str();
    };
    int gated = 0;
    for (;;) {
      const Scalar res = state.history.back().stationary_residual;
      if (res <= config_.tol_stationary)
        return finish(Outcome::converged, "stationary residual " + sci(res));
      if (state.step_index >= config_.max_steps)
        return finish(Outcome::max_steps, "max_steps reached with residual " + sci(res));
      const StepReport r = step(state);
      result.rejected_steps += r.rejections;
      if (!r.accepted) return finish(Outcome::failed, r.failure);
      gated = r.gated ? gated + 1 : 0;
      if (config_.stall_window > 0 && gated >= config_.stall_window)
        return finish(Outcome::max_steps, "stalled: monotone functional gated " + std::to_string(gated) +
                                              " consecutive steps at residual " +
                                              sci(state.history.back().stationary_residual));
    }
  }

 private:
  DiagnosticsRecord<Scalar> diagnostics_of(const FlowState<Scalar>& s, FlowKind kind) const {
    const Vector<Scalar>& h = s.h.values;
    const auto c = curvature(h, ops());
    DiagnosticsRecord<Scalar> d;
    d.tau = s.tau;
    d.V = volume(h, c, mesh());
    d.J = J_value(h, f_, config_.p, s.V0, mesh());
    d.J_tilde = config_.p == Scalar(0) ? Scalar(0) : J_tilde_value(h, c, f_, config_.p, mesh());
    d.alpha = alpha(h, c);
    d.min_h = h.minCoeff();
    d.max_h = h.maxCoeff();
    d.max_grad_h = gradient_norm(h, ops()).maxCoeff();
    d.min_K = c.gauss.minCoeff();
    d.max_K = c.gauss.maxCoeff();
    d.min_kappa = c.kappa1.minCoeff();
    d.max_kappa = c.kappa2.maxCoeff();
    d.min_h_over_ell = h.cwiseQuotient(geometry_->ell).minCoeff();
    d.robin_residual = robin_residual(h, ops());
    const Vector<Scalar> rate = speed(kind, h, c);
    d.speed_sup = rate.cwiseAbs().maxCoeff();
    d.stationary_residual = stationary_residual(h, kind != FlowKind::unnormalized_lp);
    return d;
  }

  /// Functional whose monotonicity gates step acceptance.
  Scalar monotone_functional(FlowKind kind, const Vector<Scalar>& h, const CurvatureData<Scalar>& c,
                             Scalar v0) const {
    switch (kind) {
      case FlowKind::normalized: return J_value(h, f_, config_.p, v0, mesh());
      case FlowKind::unnormalized_lp: return J_tilde_value(h, c, f_, config_.p, mesh());
      // Scale-invariant form: equals J of the rescaled body.
      case FlowKind::shrinking: return J_value(h, f_, config_.p, volume(h, c, mesh()), mesh());
    }
    return 0;
  }

  Scalar stability_cap(FlowKind kind, const Vector<Scalar>& h) const {
    const auto c = curvature(h, ops());
    const Scalar a = kind == FlowKind::normalized ? alpha(h, c) : Scalar(1);
    const Scalar coef = a * curvature_speed(h, c).maxCoeff() * c.kappa2.maxCoeff();
    const Scalar dx = min_spacing(mesh());
    return config_.cfl_safety * dx * dx / (2 * Scalar(mesh().dim) * (1 + coef));
  }

  StepReport step_impl(FlowKind kind, FlowState<Scalar>& s) {
    StepReport report;
    const Vector<Scalar>& h = s.h.values;
    const auto c0 = curvature(h, ops());
    const Scalar v_old = volume(h, c0, mesh());
    const Scalar f_old = monotone_functional(kind, h, c0, s.V0);
    Scalar dt = std::min(s.dt, config_.dt_max);
    if (config_.integrator == Integrator::explicit_euler) dt = std::min(dt, stability_cap(kind, h));
    std::string reason;
    for (int attempt = 0; attempt <= config_.max_halvings; ++attempt) {
      if (dt < config_.dt_min) break;
      reason.clear();
      Vector<Scalar> next;
      try {
        next = advance(kind, h, dt, s.V0);
      } catch (const std::exception& e) {
        reason = e.what();
      }
      if (reason.empty()) reason = check_candidate(kind, s, next, v_old, f_old);
      if (reason.empty()) {
        s.h.values = std::move(next);
        if (kind == FlowKind::shrinking) {
          s.t += dt;
          const Scalar inv = Scalar(1) / Scalar(mesh().dim + 1);
          s.tau = -inv * std::log(volume(s.h) / s.V0);
        } else {
          s.tau += dt;
        }
        ++s.step_index;
        s.dt = std::min(2 * dt, config_.dt_max);
        s.history.push_back(diagnostics(s));
        report.accepted = true;
        return report;
      }
      ++report.rejections;
      if (reason == monotone_rejection) report.gated = true;
      dt /= 2;
    }
    report.failure = "step failure at tau = " + std::to_string(double(s.tau)) + " after " +
                     std::to_string(report.rejections) + " rejections (last: " + reason + ")";
    return report;
  }

  std::string check_candidate(FlowKind kind, const FlowState<Scalar>& s, const Vector<Scalar>& next, Scalar v_old,
                              Scalar f_old) const {
    if (!next.allFinite()) return "non-finite values";
    if (!(next.minCoeff() > 0)) return "positivity lost";
    const auto c = curvature(next, ops());
    if (!c.convex) return "convexity lost at node " + std::to_string(c.worst_node);
    const Scalar v = volume(next, c, mesh());
    if (kind == FlowKind::shrinking) {
      if (!(v < v_old)) return "volume did not decrease";
      if (v < config_.volume_floor * s.V0) return "extinction approached: volume below floor";
    }
    if (kind == FlowKind::normalized && std::abs(v - s.V0) > config_.tol_volume_drift * s.V0)
      return "volume drift above tolerance";
    if (kind == FlowKind::unnormalized_lp &&
        next.cwiseQuotient(geometry_->ell).minCoeff() < s.barrier - config_.barrier_tol)
      return "h / ell fell below the lower barrier";
    const Scalar f_new = monotone_functional(kind, next, c, s.V0);
    if (!(f_new <= f_old + config_.monotonicity_slack)) return monotone_rejection;
    return {};
  }

  void factorize(const SparseMatrix<Scalar>& a) {
    if (!pattern_ready_ || a.nonZeros() != pattern_nnz_) {
      lu_.analyzePattern(a);
      pattern_ready_ = true;
      pattern_nnz_ = a.nonZeros();
    }
    factor_ready_ = false;
    lu_.factorize(a);
    if (lu_.info() != Eigen::Success) throw std::runtime_error("linear solve failed: singular step matrix");
  }

  /// Newton on a -> V(h + up - a down) = target, started from the explicit value.
  Scalar constrained_alpha(const Vector<Scalar>& h, const Vector<Scalar>& up, const Vector<Scalar>& down,
                           Scalar a, Scalar target) const {
    const Vector<Scalar>& w = mesh().weights;
    for (int it = 0; it < 30; ++it) {
      const Vector<Scalar> x = h + up - a * down;
      const auto c = curvature(x, ops());
      const Scalar gap = volume(x, c, mesh()) - target;
      if (std::abs(gap) <= 64 * std::numeric_limits<Scalar>::epsilon() * target) break;
      const Scalar slope = -w.dot(c.sigma_n.cwiseProduct(down));
      if (!(slope != 0)) break;
      a -= gap / slope;
    }
    return a;
  }

  static constexpr const char* monotone_rejection = "monotone functional increased";

  FlowConfig<Scalar> config_;
  std::shared_ptr<const CapGeometry<Scalar>> geometry_;
  Vector<Scalar> f_;
  Eigen::SparseLU<SparseMatrix<Scalar>, Eigen::COLAMDOrdering<int>> lu_;
  bool pattern_ready_ = false;
  Index pattern_nnz_ = 0;
  bool factor_ready_ = false;
  FlowKind factor_kind_{};
  Scalar factor_dt_{};
  Vector<Scalar> factor_h_;
};

template <typename Scalar>
RunResult<Scalar> run(const FlowConfig<Scalar>& config) {
  FlowSolver<Scalar> solver(config);
  return solver.run();
}

}  // namespace capflow

// One PASS/FAIL line per acceptance criterion. Exit status is non-zero if any fails.

#include "capflow/elliptic_oracle.hpp"
#include "capflow/flows.hpp"
#include "capflow/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

using namespace capflow;

namespace {

namespace tol {
constexpr double geometry_order = 1.8;
constexpr double cap_drift = 1e-6;
constexpr int cap_steps = 1000;
constexpr double monotone_slack = 1e-10;
constexpr double volume_drift = 1e-3;
constexpr double volume_order = 1.8;
constexpr double dissipation_rel = 1e-2;
constexpr double dissipation_fraction = 0.95;
constexpr double barrier_slack = 1e-6;
constexpr double barrier_limit = 1e-4;
constexpr double oracle_nodewise = 1e-4;
constexpr double consistency_spread = 1.25;
constexpr double bound_factor = 2.0;
}  // namespace tol

namespace budget {
constexpr double geometry = 10, cap = 30, matrix = 300, oracle_case = 120;
}

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s  [%d] %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double closed_area(double theta) { return 2 * pi_v<double> * (1 - std::cos(theta)); }
double closed_ell_integral(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return 2 * pi_v<double> * ((1 - c) - c * s * s / 2);
}

FlowConfig<double> p2_config(int dim, int n_rho) {
  FlowConfig<double> c;
  c.p = 2;
  c.dim = dim;
  c.resolution = dim == 2 ? Resolution{n_rho, n_rho} : Resolution{n_rho, 1};
  c.f = DensitySpec<double>::even_trig(1, 0.2);
  c.initial.bump = BumpKind::even;
  c.initial.eps = 0.2;
  return c;
}

void criterion_geometry() {
  const auto start = Clock::now();
  const double theta = pi_v<double> / 3;
  // Reference values at theta = pi/3.
  const double area_ref = pi_v<double>, ell_ref = 5 * pi_v<double> / 8;
  const bool refs_ok = std::abs(closed_area(theta) - area_ref) < 1e-14 &&
                       std::abs(closed_ell_integral(theta) - ell_ref) < 1e-14;
  double ea[4], el[4];
  const int sizes[] = {16, 32, 64, 128};
  for (int i = 0; i < 4; ++i) {
    const auto mesh = build_cap_mesh(theta, 2, {sizes[i], sizes[i]});
    ea[i] = std::abs(mesh.weights.sum() - area_ref);
    el[i] = std::abs(mesh.weights.dot(ell_field(mesh)) - ell_ref);
  }
  double min_order = 1e9;
  for (int i = 0; i < 3; ++i)
    min_order = std::min({min_order, std::log2(ea[i] / ea[i + 1]), std::log2(el[i] / el[i + 1])});
  const double t = seconds_since(start);
  report(1, "geometry convergence", refs_ok && min_order >= tol::geometry_order && t < budget::geometry,
         fmt("min observed order %.3f (>= %.1f) over N=16..128; errors at N=128 area %.2e, int ell %.2e; %.2fs",
             min_order, tol::geometry_order, ea[3], el[3], t));
}

void criterion_stationary_cap() {
  const auto start = Clock::now();
  FlowConfig<double> c;
  c.kind = FlowKind::unnormalized_lp;
  c.p = 5;
  c.resolution = {64, 64};
  c.f = DensitySpec<double>::cap_stationary(5);
  c.tol_stationary = 1e-300;
  c.max_steps = tol::cap_steps;
  FlowSolver<double> s(c);
  auto st = s.initial_state();
  const Vector<double> ell = s.geometry()->ell;
  double drift = (st.h.values - ell).cwiseAbs().maxCoeff();
  bool ok = true;
  for (int k = 0; k < tol::cap_steps && ok; ++k) {
    ok = s.step(st).accepted;
    drift = std::max(drift, (st.h.values - ell).cwiseAbs().maxCoeff());
  }
  const double t = seconds_since(start);
  report(2, "stationary cap", ok && drift < tol::cap_drift && t < budget::cap,
         fmt("sup |h - ell| over %ld steps = %.2e (< %.0e); %.1fs", st.step_index, drift, tol::cap_drift, t));
}

struct MatrixRun {
  MatrixCase c;
  RunResult<double> r;
};

std::vector<MatrixRun> matrix_runs;
double matrix_seconds = 0;

void criterion_monotonicity() {
  const auto start = Clock::now();
  for (auto& c : monotonicity_matrix(32, 64)) matrix_runs.push_back({c, run(c.config)});
  matrix_seconds = seconds_since(start);
  double worst = -1e300;
  int failed = 0, converged = 0, stalled = 0;
  for (const auto& m : matrix_runs) {
    worst = std::max(worst, max_monotone_increase(m.r.state.history, m.c.config.kind));
    failed += m.r.outcome == Outcome::failed;
    converged += m.r.outcome == Outcome::converged;
    stalled += m.r.outcome == Outcome::max_steps;
  }
  report(3, "monotonicity matrix",
         worst <= tol::monotone_slack && failed == 0 && matrix_seconds < budget::matrix,
         fmt("8 runs, worst step increase %.2e (<= %.0e), failed %d, converged %d, stalled %d; %.1fs", worst,
             tol::monotone_slack, failed, converged, stalled, matrix_seconds));
}

void criterion_volume() {
  auto drift_of = [](const RunResult<double>& r) {
    double d = 0;
    for (const auto& x : r.state.history) d = std::max(d, std::abs(x.V - r.state.V0) / r.state.V0);
    return d;
  };
  // Formula alpha, n = 1, dt_max tied to d_rho^2 so time and space refine together.
  double d[2];
  bool ok = true;
  const int sizes[] = {64, 128};
  for (int i = 0; i < 2; ++i) {
    auto c = p2_config(1, sizes[i]);
    const double h = 2 * c.theta / sizes[i];
    c.volume_control = VolumeControl::formula;
    c.dt_max = c.dt_init = 5 * h * h;
    c.tol_stationary = 1e-8;
    c.max_steps = 1000000;
    c.tol_volume_drift = 1;  // measure the drift, do not gate steps on it
    const auto r = run(c);
    ok = ok && r.outcome == Outcome::converged;
    d[i] = drift_of(r);
  }
  const double order = std::log2(d[0] / d[1]);
  // Default constrained control at n = 2.
  auto c2 = p2_config(2, 64);
  c2.tol_stationary = 1e-8;
  const auto r2 = run(c2);
  const double d2 = drift_of(r2);
  ok = ok && r2.outcome == Outcome::converged;
  report(4, "volume conservation",
         ok && d[0] <= tol::volume_drift && order >= tol::volume_order && d2 <= tol::volume_drift,
         fmt("n=1 formula: drift %.2e at N=64, %.2e at N=128, order %.2f (>= %.1f); n=2 constrained N=64: %.1e",
             d[0], d[1], order, tol::volume_order, d2));
}

void criterion_dissipation() {
  auto c = p2_config(1, 64);
  c.dt_max = c.dt_init = 1e-3;
  c.max_steps = 100000;
  FlowSolver<double> s(c);
  auto st = s.initial_state();
  const auto& w = s.mesh().weights;
  const Vector<double>& f = s.density();
  auto dissipation = [&](const Vector<double>& h) {
    return J_dissipation(h, curvature(h, s.ops()), f, c.p, st.V0, s.mesh());
  };
  Vector<double> prev = st.h.values;
  double d_prev = dissipation(prev), tau_prev = st.tau;
  int good = 0, total = 0;
  bool ok = true;
  while (st.history.back().stationary_residual > c.tol_stationary && st.step_index < c.max_steps) {
    if (!s.step(st).accepted) {
      ok = false;
      break;
    }
    const Vector<double>& h = st.h.values;
    // Delta J = log(I1 / I0) / p with I1 - I0 formed without cancellation (p = 2).
    const double i0 = w.dot(f.cwiseProduct(prev.cwiseAbs2()));
    const double di = w.dot(f.cwiseProduct((h - prev).cwiseProduct(h + prev)));
    const double fd = std::log1p(di / i0) / c.p / (st.tau - tau_prev);
    const double d_now = dissipation(h);
    const double ref = (d_prev + d_now) / 2;
    good += std::abs(fd - ref) <= tol::dissipation_rel * std::abs(ref);
    ++total;
    prev = h;
    d_prev = d_now;
    tau_prev = st.tau;
  }
  const double frac = total ? double(good) / total : 0;
  report(5, "dissipation identity", ok && frac >= tol::dissipation_fraction,
         fmt("n=1 p=2 dt=1e-3: %d of %d steps within %.0e relative (%.1f%%, need %.0f%%)", good, total,
             tol::dissipation_rel, 100 * frac, 100 * tol::dissipation_fraction));
}

void criterion_barrier() {
  FlowConfig<double> c;
  c.kind = FlowKind::unnormalized_lp;
  c.p = 5;
  c.resolution = {64, 64};
  c.f = DensitySpec<double>::cap_stationary(5);
  c.initial.scale = 0.5;
  c.tol_stationary = 1e-8;
  FlowSolver<double> s(c);
  const auto r = s.run();
  double lo = 1e300;
  for (const auto& d : r.state.history) lo = std::min(lo, d.min_h_over_ell);
  const double dev = (r.state.h.values.cwiseQuotient(s.geometry()->ell).array() - 1).abs().maxCoeff();
  report(6, "barrier", lo >= 0.5 - tol::barrier_slack && dev <= tol::barrier_limit && r.outcome == Outcome::converged,
         fmt("n=2 N=64: min h/ell over %ld steps %.9f (>= 0.5 - %.0e), final max|h/ell - 1| %.2e (<= %.0e), %s",
             r.state.step_index, lo, tol::barrier_slack, dev, tol::barrier_limit, to_string(r.outcome).c_str()));
}

void criterion_oracle() {
  struct Case {
    double p;
    bool normalized;
  };
  const Case cases[] = {{-2, true}, {2, true}, {5, false}, {8, false}};
  std::ostringstream detail;
  bool ok = true;
  for (const auto& k : cases) {
    const auto start = Clock::now();
    FlowConfig<double> c;
    c.kind = k.normalized ? FlowKind::normalized : FlowKind::unnormalized_lp;
    c.p = k.p;
    c.resolution = {64, 64};
    c.f = k.normalized ? DensitySpec<double>::even_trig(1, 0.2) : DensitySpec<double>::non_even_trig(1, 0.2);
    c.enforce_even = k.normalized;
    c.initial.bump = BumpKind::even;
    c.initial.eps = 0.1;
    c.tol_stationary = 1e-10;
    FlowSolver<double> s(c);
    const auto r = s.run();
    const auto mode = k.normalized ? StationaryMode::normalized : StationaryMode::unnormalized;
    const auto v0 = k.normalized ? std::optional<double>(r.state.V0) : std::nullopt;
    const auto nr = solve_stationary(c.f, c.p, s.geometry(), mode, v0, NewtonConfig<double>{});
    const double diff = (r.state.h.values - nr.h.values).cwiseAbs().maxCoeff();
    const double t = seconds_since(start);
    const bool case_ok = nr.converged && r.outcome != Outcome::failed && diff <= tol::oracle_nodewise &&
                         t < budget::oracle_case;
    ok = ok && case_ok;
    detail << fmt("p=%g %s %.1e (flow %s, %.0fs); ", k.p, k.normalized ? "norm" : "unnorm", diff,
                  r.outcome == Outcome::converged ? "converged" : "stalled", t);
  }
  report(7, "oracle equivalence", ok, detail.str() + fmt("tol %.0e", tol::oracle_nodewise));
}

void criterion_rescaling() {
  std::ostringstream detail;
  bool ok = true;
  for (int dim : {1, 2}) {
    auto c = p2_config(dim, dim == 2 ? 32 : 64);
    std::vector<double> consts;
    // The stiff pole and boundary modes leave the O(dt^2) regime above dt ~ 1e-5.
    for (double dt : {4.8828125e-6, 2.44140625e-6, 1.220703125e-6}) {
      FlowSolver<double> a(c), b(c);
      const auto s0 = a.initial_state();
      const Vector<double> shrunk = a.advance(FlowKind::shrinking, s0.h.values, dt);
      const double v1 = volume(make_field(a.geometry(), shrunk));
      const double scale = std::pow(s0.V0 / v1, 1.0 / (dim + 1));
      const Vector<double> normalized = b.advance(FlowKind::normalized, s0.h.values, std::log(scale), s0.V0);
      consts.push_back((scale * shrunk - normalized).cwiseAbs().maxCoeff() / (dt * dt));
    }
    const double spread = *std::max_element(consts.begin(), consts.end()) / *std::min_element(consts.begin(), consts.end());
    ok = ok && spread <= tol::consistency_spread;
    detail << fmt("n=%d C = %.4f, %.4f, %.4f (spread %.3f); ", dim, consts[0], consts[1], consts[2], spread);
  }
  report(8, "normalized/shrinking consistency", ok, detail.str() + fmt("max spread %.2f", tol::consistency_spread));
}

void criterion_uniform_bounds() {
  // Final-quartile extrema against the extrema of the earlier three quartiles,
  // in the direction a blow-up would take (min_h down, max_K and max_kappa up).
  int checked = 0;
  double worst = 1;
  std::string worst_label;
  for (const auto& m : matrix_runs) {
    if (m.r.outcome != Outcome::converged) continue;
    const auto& hist = m.r.state.history;
    if (hist.size() < 8) continue;
    const std::size_t q = hist.size() - hist.size() / 4;
    using R = DiagnosticsRecord<double>;
    const std::pair<double R::*, bool> fields[] = {{&R::min_h, false}, {&R::max_K, true}, {&R::max_kappa, true}};
    for (auto [field, is_max] : fields) {
      double early = hist[0].*field, tail = hist[q].*field;
      for (std::size_t k = 0; k < hist.size(); ++k) {
        const double v = hist[k].*field;
        if (k < q) early = is_max ? std::max(early, v) : std::min(early, v);
        else tail = is_max ? std::max(tail, v) : std::min(tail, v);
      }
      const double growth = is_max ? tail / early : early / tail;
      if (growth > worst) worst = growth, worst_label = m.c.label;
    }
    ++checked;
  }
  report(9, "uniform-bound monitors", checked > 0 && worst <= tol::bound_factor,
         fmt("%d converged matrix runs; worst final-quartile growth past earlier bound %.3f (within %.0fx)%s%s",
             checked, worst, tol::bound_factor, worst_label.empty() ? "" : " at ", worst_label.c_str()));
}

}  // namespace

int main() {
  const std::function<void()> criteria[] = {criterion_geometry,    criterion_stationary_cap, criterion_monotonicity,
                                            criterion_volume,      criterion_dissipation,    criterion_barrier,
                                            criterion_oracle,      criterion_rescaling,      criterion_uniform_bounds};
  int id = 1;
  for (const auto& c : criteria) {
    try {
      c();
    } catch (const std::exception& e) {
      report(id, "criterion", false, std::string("exception: ") + e.what());
    }
    ++id;
  }
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

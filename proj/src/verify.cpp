#include "capflow/verify.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace capflow {

int thread_count_from_env() {
  if (const char* s = std::getenv("CAPFLOW_THREADS")) {
    const int v = std::atoi(s);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex m;
  auto worker = [&] {
    for (int i; (i = next++) < count;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(m);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int k = std::max(1, std::min(threads, count));
  std::vector<std::thread> pool;
  for (int t = 1; t < k; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<MatrixCase> monotonicity_matrix(int n_rho_2d, int n_rho_1d) {
  auto base = [&](FlowKind kind, double p, int dim) {
    FlowConfig<double> c;
    c.kind = kind;
    c.p = p;
    c.dim = dim;
    c.resolution = dim == 2 ? Resolution{n_rho_2d, n_rho_2d} : Resolution{n_rho_1d, 1};
    c.initial.bump = BumpKind::even;
    c.initial.eps = 0.1;
    c.tol_stationary = 1e-8;
    c.max_steps = 2000;
    return c;
  };
  std::vector<MatrixCase> out;
  const std::pair<double, int> normalized[] = {{-2, 2}, {0, 1}, {2, 2}, {4, 1}};
  for (auto [p, dim] : normalized) {
    auto c = base(FlowKind::normalized, p, dim);
    c.f = DensitySpec<double>::even_trig(1, 0.2);
    out.push_back({"normalized p=" + std::to_string(int(p)) + " n=" + std::to_string(dim) + " even", c});
  }
  struct U {
    double p;
    bool even;
    int dim;
  };
  const U unnormalized[] = {{4.5, true, 1}, {4.5, false, 2}, {6, true, 2}, {6, false, 1}};
  for (auto u : unnormalized) {
    auto c = base(FlowKind::unnormalized_lp, u.p, u.dim);
    c.f = u.even ? DensitySpec<double>::even_trig(1, 0.2) : DensitySpec<double>::non_even_trig(1, 0.2);
    c.enforce_even = u.even;
    std::ostringstream label;
    label << "unnormalized p=" << u.p << " n=" << u.dim << (u.even ? " even" : " non-even");
    out.push_back({label.str(), c});
  }
  return out;
}

double max_monotone_increase(const std::vector<DiagnosticsRecord<double>>& history, FlowKind kind) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < history.size(); ++k) {
    const double d = kind == FlowKind::unnormalized_lp ? history[k].J_tilde - history[k - 1].J_tilde
                                                       : history[k].J - history[k - 1].J;
    worst = std::max(worst, d);
  }
  return history.size() < 2 ? 0.0 : worst;
}

namespace {

CheckRow row(const std::string& suite, const std::string& name, double value, double threshold, bool passed,
             std::string detail = {}) {
  return {suite, name, value, threshold, passed, std::move(detail)};
}

double ell_integral(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return 2 * pi_v<double> * ((1 - c) - c * s * s / 2);
}

std::vector<CheckRow> geometry_suite(int threads) {
  const double theta = pi_v<double> / 3;
  const int sizes[] = {32, 64};
  double area_err[2], ell_err[2];
  std::shared_ptr<const CapGeometry<double>> g64;
  parallel_for(2, threads, [&](int i) {
    auto g = make_geometry(theta, 2, {sizes[i], sizes[i]});
    area_err[i] = std::abs(g->mesh.weights.sum() - cap_area(theta, 2));
    ell_err[i] = std::abs(g->mesh.weights.dot(g->ell) - ell_integral(theta));
    if (i == 1) g64 = g;
  });
  std::vector<CheckRow> rows;
  const double area_order = std::log2(area_err[0] / area_err[1]);
  const double ell_order = std::log2(ell_err[0] / ell_err[1]);
  rows.push_back(row("geometry", "area error N=64", area_err[1], 1e-3, area_err[1] <= 1e-3));
  rows.push_back(row("geometry", "area order 32->64", area_order, 1.8, area_order >= 1.8));
  rows.push_back(row("geometry", "int ell error N=64", ell_err[1], 1e-3, ell_err[1] <= 1e-3));
  rows.push_back(row("geometry", "int ell order 32->64", ell_order, 1.8, ell_order >= 1.8));
  const auto c = curvature(g64->ell, g64->ops);
  const double det_err = (c.sigma_n.array() - 1).abs().maxCoeff();
  rows.push_back(row("geometry", "cap det b = 1", det_err, 1e-10, det_err <= 1e-10));
  const double robin = robin_residual(g64->ell, g64->ops);
  rows.push_back(row("geometry", "cap robin residual", robin, 1e-10, robin <= 1e-10));
  const double v = volume(make_field(g64, g64->ell, true));
  const double v_err = std::abs(v - ell_integral(theta) / 3);
  rows.push_back(row("geometry", "cap volume error N=64", v_err, 1e-3, v_err <= 1e-3));
  auto g1 = make_geometry(theta, 1, {64, 1});
  const double len_err = std::abs(g1->mesh.weights.sum() - 2 * theta);
  rows.push_back(row("geometry", "n=1 arc length", len_err, 1e-12, len_err <= 1e-12));
  return rows;
}

std::vector<CheckRow> monotonicity_suite(int threads) {
  const auto cases = monotonicity_matrix(24, 32);
  std::vector<RunResult<double>> results(cases.size());
  parallel_for(int(cases.size()), threads, [&](int i) { results[i] = run(cases[i].config); });
  std::vector<CheckRow> rows;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& r = results[i];
    const double inc = max_monotone_increase(r.state.history, cases[i].config.kind);
    const bool ok = inc <= 1e-10 && r.outcome != Outcome::failed;
    rows.push_back(row("monotonicity", cases[i].label, inc, 1e-10, ok,
                       to_string(r.outcome) + ", " + std::to_string(r.state.step_index) + " steps"));
  }
  return rows;
}

std::vector<CheckRow> conservation_suite(int threads) {
  // constrained at n = 2; formula at n = 1 with dt_max tied to d_rho^2.
  std::vector<CheckRow> rows(2);
  parallel_for(2, threads, [&](int i) {
    const bool formula = i == 1;
    FlowConfig<double> c;
    c.p = 2;
    c.dim = formula ? 1 : 2;
    c.resolution = formula ? Resolution{64, 1} : Resolution{24, 24};
    c.f = DensitySpec<double>::even_trig(1, 0.2);
    c.initial.bump = BumpKind::even;
    c.initial.eps = 0.1;
    c.tol_stationary = 1e-8;
    c.max_steps = 100000;
    if (formula) {
      const double d = 2 * c.theta / 64;
      c.volume_control = VolumeControl::formula;
      c.dt_max = 10 * d * d;
      c.dt_init = c.dt_max;
    }
    const auto r = run(c);
    double drift = 0;
    for (const auto& d : r.state.history) drift = std::max(drift, std::abs(d.V - r.state.V0) / r.state.V0);
    rows[i] = row("conservation", formula ? "volume drift formula n=1" : "volume drift constrained n=2", drift, 1e-3,
                  drift <= 1e-3 && r.outcome == Outcome::converged, to_string(r.outcome));
  });
  return rows;
}

std::vector<CheckRow> barrier_suite(int threads) {
  const int dims[] = {1, 2};
  std::vector<CheckRow> rows(4);
  parallel_for(2, threads, [&](int i) {
    FlowConfig<double> c;
    c.kind = FlowKind::unnormalized_lp;
    c.p = 5;
    c.dim = dims[i];
    c.resolution = dims[i] == 2 ? Resolution{24, 24} : Resolution{64, 1};
    c.f = DensitySpec<double>::cap_stationary(5);
    c.initial.scale = 0.5;
    c.tol_stationary = 1e-8;
    FlowSolver<double> s(c);
    const auto r = s.run();
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& d : r.state.history) lo = std::min(lo, d.min_h_over_ell);
    const double dev = (r.state.h.values.cwiseQuotient(s.geometry()->ell).array() - 1).abs().maxCoeff();
    const std::string tag = " n=" + std::to_string(dims[i]);
    rows[2 * i] = row("barrier", "min h/ell over run" + tag, lo, 0.5 - 1e-6, lo >= 0.5 - 1e-6);
    rows[2 * i + 1] = row("barrier", "final |h/ell - 1|" + tag, dev, 1e-4,
                          dev <= 1e-4 && r.outcome == Outcome::converged, to_string(r.outcome));
  });
  return rows;
}

std::vector<CheckRow> oracle_suite(int threads) {
  struct Case {
    std::string label;
    FlowConfig<double> flow;
    StationaryMode mode;
  };
  std::vector<Case> cases;
  {
    FlowConfig<double> c;
    c.p = 2;
    c.resolution = {24, 24};
    c.f = DensitySpec<double>::even_trig(1, 0.2);
    c.initial.bump = BumpKind::even;
    c.initial.eps = 0.1;
    c.tol_stationary = 1e-10;
    cases.push_back({"normalized p=2 n=2", c, StationaryMode::normalized});
  }
  {
    FlowConfig<double> c;
    c.kind = FlowKind::unnormalized_lp;
    c.p = 5;
    c.dim = 1;
    c.resolution = {64, 1};
    c.f = DensitySpec<double>::non_even_trig(1, 0.2);
    c.enforce_even = false;
    c.initial.bump = BumpKind::even;
    c.initial.eps = 0.1;
    c.tol_stationary = 1e-10;
    cases.push_back({"unnormalized p=5 n=1 non-even", c, StationaryMode::unnormalized});
  }
  std::vector<CheckRow> rows(cases.size());
  parallel_for(int(cases.size()), threads, [&](int i) {
    const auto& k = cases[i];
    FlowSolver<double> s(k.flow);
    const auto r = s.run();
    NewtonConfig<double> nc;
    const auto v0 = k.mode == StationaryMode::normalized ? std::optional<double>(r.state.V0) : std::nullopt;
    const auto nr = solve_stationary(k.flow.f, k.flow.p, s.geometry(), k.mode, v0, nc);
    const double diff = (r.state.h.values - nr.h.values).cwiseAbs().maxCoeff();
    rows[i] = row("oracle", k.label, diff, 1e-4,
                  diff <= 1e-4 && nr.converged && r.outcome == Outcome::converged,
                  "flow " + to_string(r.outcome) + ", newton " + (nr.converged ? "converged" : "failed"));
  });
  return rows;
}

}  // namespace

std::vector<std::string> suite_names() { return {"geometry", "monotonicity", "conservation", "barrier", "oracle", "all"}; }

std::vector<CheckRow> run_suite(const std::string& name, int threads) {
  if (name == "geometry") return geometry_suite(threads);
  if (name == "monotonicity") return monotonicity_suite(threads);
  if (name == "conservation") return conservation_suite(threads);
  if (name == "barrier") return barrier_suite(threads);
  if (name == "oracle") return oracle_suite(threads);
  if (name == "all") {
    std::vector<CheckRow> all;
    for (const auto& s : suite_names()) {
      if (s == "all") continue;
      auto r = run_suite(s, threads);
      all.insert(all.end(), r.begin(), r.end());
    }
    return all;
  }
  std::string known;
  for (const auto& s : suite_names()) known += (known.empty() ? "" : ", ") + s;
  throw ConfigError("unknown suite \"" + name + "\" (known: " + known + ")", "suite");
}

std::string format_table(const std::vector<CheckRow>& rows) {
  std::size_t w = 4;
  for (const auto& r : rows) w = std::max(w, r.suite.size() + r.name.size() + 2);
  std::ostringstream os;
  os << std::left << std::setw(int(w)) << "check" << "  " << std::setw(12) << "value" << "  " << std::setw(12)
     << "threshold" << "  result\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(int(w)) << (r.suite + ": " + r.name) << "  " << std::setw(12) << std::setprecision(4)
       << r.value << "  " << std::setw(12) << r.threshold << "  " << (r.passed ? "PASS" : "FAIL");
    if (!r.detail.empty()) os << "  (" << r.detail << ")";
    os << '\n';
  }
  return os.str();
}

}  // namespace capflow

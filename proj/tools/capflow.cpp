#include "capflow/config.hpp"
#include "capflow/io.hpp"
#include "capflow/verify.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace capflow;
using nlohmann::json;

namespace {

constexpr int exit_converged = 0;
constexpr int exit_failure = 1;
constexpr int exit_max_steps = 2;
constexpr int exit_invalid = 64;

const char* fp_caveat =
    "diagnostics reproduce bitwise for identical inputs, binary and floating-point environment "
    "(compiler flags, CPU, libm); other environments agree to rounding";

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) { write_atomic(path, text); }

void write_diagnostics(const fs::path& dir, const std::vector<DiagnosticsRecord<double>>& history, const std::string& format) {
  if (format == "json") {
    write_text(dir / "diagnostics.json", diagnostics_json(history).dump(1) + "\n");
  } else {
    std::ostringstream os;
    write_diagnostics_csv(os, history);
    write_text(dir / "diagnostics.csv", os.str());
  }
}

void write_embedding(const fs::path& dir, const SupportField<double>& h, const std::string& format) {
  if (format == "json") {
    write_text(dir / "embedding.json", embedding_json(h).dump(1) + "\n");
  } else {
    std::ostringstream os;
    write_embedding_csv(os, h);
    write_text(dir / "embedding.csv", os.str());
  }
}

json manifest_base(const std::string& command, const RunConfig& rc, const CapMesh<double>& mesh, int threads) {
  json m;
  m["command"] = command;
  m["code_version"] = CAPFLOW_VERSION;
  m["config"] = rc.echo;
  m["mesh_fingerprint"] = mesh_fingerprint(mesh);
  m["seeds"] = json::array();
  if (rc.random_density) m["seeds"].push_back(rc.random_density->seed);
  m["threads"] = threads;
  m["reproducibility"] = fp_caveat;
  return m;
}

/// Config errors carry a field name; anchor them to its line in the file.
[[noreturn]] void rethrow_anchored(const ConfigError& e, const std::string& path) {
  throw ConfigFileError(path, line_of_key(slurp(path), e.field().empty() ? "flow" : e.field()), e.what());
}

int cmd_run(const std::string& config_path, const fs::path& out, const std::string& format, int threads) {
  const RunConfig rc = load_config(config_path);
  fs::create_directories(out);
  std::optional<FlowSolver<double>> solver;
  FlowState<double> state;
  try {
    solver.emplace(rc.flow);
    state = rc.initial_checkpoint ? restore_state(read_checkpoint(*rc.initial_checkpoint), solver->geometry())
                                  : solver->initial_state();
  } catch (const ConfigError& e) {
    rethrow_anchored(e, config_path);
  }
  auto result = solver->run(std::move(state));
  const auto& s = result.state;
  write_diagnostics(out, s.history, format);
  write_checkpoint(out / "final.json", checkpoint_of(s, rc.flow));
  write_embedding(out, s.h, format);
  write_text(out / "mesh.json", mesh_json(solver->mesh()).dump(1) + "\n");

  json m = manifest_base("run", rc, solver->mesh(), threads);
  m["outcome"] = to_string(result.outcome);
  m["message"] = result.message;
  const auto& last = s.history.back();
  m["final_residuals"] = {{"stationary", last.stationary_residual},
                          {"robin", last.robin_residual},
                          {"volume_drift", std::abs(last.V - s.V0) / s.V0}};
  m["steps"] = s.step_index;
  m["rejected_attempts"] = result.rejected_steps;
  m["wall_seconds"] = result.wall_seconds;
  write_text(out / "manifest.json", m.dump(2) + "\n");

  std::cout << to_string(result.outcome) << ": " << result.message << " (" << s.step_index << " steps)\n";
  switch (result.outcome) {
    case Outcome::converged: return exit_converged;
    case Outcome::max_steps: return exit_max_steps;
    case Outcome::failed: return exit_failure;
  }
  return exit_failure;
}

int cmd_solve(const std::string& config_path, const fs::path& out, const std::string& format, int threads) {
  const RunConfig rc = load_config(config_path, ConfigUse::solve);
  const auto& fc = rc.flow;
  fs::create_directories(out);
  const auto start = std::chrono::steady_clock::now();
  const auto geometry = make_geometry(fc.theta, fc.dim, fc.resolution);

  NewtonResult<double> nr;
  std::optional<double> v0 = rc.newton_v0;
  try {
    // Initial data gives the default V0 and the "initial" guess.
    const Vector<double> h0 = rc.initial_checkpoint ? read_checkpoint(*rc.initial_checkpoint).values
                                                    : initial_values(fc.initial, *geometry, fc.enforce_even);
    std::optional<Vector<double>> guess;
    if (rc.newton_guess) guess = *rc.newton_guess == "initial" ? h0 : read_checkpoint(*rc.newton_guess).values;
    if (rc.newton_mode == StationaryMode::normalized && !v0) v0 = volume(make_field(geometry, h0));
    if (rc.newton_mode == StationaryMode::unnormalized) v0.reset();
    nr = solve_stationary(fc.f, fc.p, geometry, rc.newton_mode, v0, rc.newton, guess);
  } catch (const ConfigError& e) {
    rethrow_anchored(e, config_path);
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::ostringstream trace;
  trace << "p,blend,iteration,residual,step_fraction\n" << std::setprecision(17);
  for (const auto& t : nr.trace)
    trace << t.p << ',' << t.blend << ',' << t.iteration << ',' << t.residual << ',' << t.step_fraction << '\n';
  write_text(out / "newton_trace.csv", trace.str());

  Checkpoint ck;
  ck.theta = fc.theta;
  ck.dim = fc.dim;
  ck.resolution = geometry->mesh.resolution;
  ck.kind = "stationary";
  ck.p = fc.p;
  ck.values = nr.h.values;
  ck.even = nr.h.even;
  ck.V0 = v0.value_or(volume(nr.h));
  ck.lambda = nr.lambda;

  // Diagnostics of the solution as a one-row history, when the matching flow is posed.
  json diag_note = nullptr;
  try {
    FlowConfig<double> dc = fc;
    dc.kind = rc.newton_mode == StationaryMode::normalized ? FlowKind::normalized : FlowKind::unnormalized_lp;
    dc.enforce_even = nr.h.even;
    FlowSolver<double> ds(dc, geometry);
    auto st = ds.make_state(nr.h.values);
    st.V0 = ck.V0;
    st.history = {ds.diagnostics(st)};
    ck.history = st.history;
    write_diagnostics(out, ck.history, format);
  } catch (const std::exception& e) {
    diag_note = std::string("no diagnostics: ") + e.what();
  }
  write_checkpoint(out / "final.json", ck);
  if (nr.converged) write_embedding(out, nr.h, format);
  write_text(out / "mesh.json", mesh_json(geometry->mesh).dump(1) + "\n");

  json m = manifest_base("solve", rc, geometry->mesh, threads);
  m["outcome"] = nr.converged ? "converged" : "failed";
  m["message"] = nr.message;
  m["experimental"] = nr.experimental;
  m["lambda"] = nr.lambda;
  m["V0"] = v0 ? json(*v0) : json(nullptr);
  m["final_residuals"] = {{"stationary", nr.residual}, {"robin", robin_residual(nr.h.values, geometry->ops)}};
  m["newton_iterations"] = nr.trace.size();
  m["wall_seconds"] = wall;
  if (!diag_note.is_null()) m["diagnostics_note"] = diag_note;
  write_text(out / "manifest.json", m.dump(2) + "\n");

  std::cout << (nr.converged ? "converged" : "failed") << ": " << nr.message << "\n";
  return nr.converged ? exit_converged : exit_failure;
}

int cmd_verify(const std::string& suite, const std::optional<fs::path>& out, int threads) {
  const auto rows = run_suite(suite, threads);
  std::cout << format_table(rows);
  bool all = true;
  json j = json::array();
  for (const auto& r : rows) {
    all = all && r.passed;
    j.push_back({{"suite", r.suite}, {"check", r.name}, {"value", r.value}, {"threshold", r.threshold},
                 {"passed", r.passed}, {"detail", r.detail}});
  }
  if (out) {
    fs::create_directories(*out);
    write_text(*out / ("verify_" + suite + ".json"), j.dump(2) + "\n");
  }
  std::cout << (all ? "all checks passed\n" : "some checks FAILED\n");
  return all ? exit_converged : exit_failure;
}

int cmd_export(const fs::path& checkpoint, const fs::path& out, const std::string& format) {
  const Checkpoint ck = read_checkpoint(checkpoint);
  const auto geometry = make_geometry(ck.theta, ck.dim, ck.resolution);
  fs::create_directories(out);
  const auto h = make_field(geometry, ck.values, ck.even);
  write_embedding(out, h, format);
  write_diagnostics(out, ck.history, format);
  write_text(out / "mesh.json", mesh_json(geometry->mesh).dump(1) + "\n");
  write_checkpoint(out / "checkpoint.json", ck);
  std::cout << "exported " << h.size() << " nodes to " << out.string() << "\n";
  return exit_converged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capillary L_p Minkowski flows and stationary solver"};
  app.require_subcommand(1);
  app.set_version_flag("--version", CAPFLOW_VERSION);

  std::string config, format = "csv", suite, checkpoint;
  std::string out;
  auto add_format = [&](CLI::App* c) {
    c->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };
  auto* run = app.add_subcommand("run", "run a flow to convergence");
  run->add_option("--config", config, "JSON config")->required();
  run->add_option("--out", out, "output directory")->required();
  add_format(run);
  auto* solve = app.add_subcommand("solve", "damped Newton solve of the stationary equation");
  solve->add_option("--config", config, "JSON config")->required();
  solve->add_option("--out", out, "output directory")->required();
  add_format(solve);
  auto* verify = app.add_subcommand("verify", "run an invariant suite and print a pass/fail table");
  verify->add_option("--suite", suite, "geometry, monotonicity, conservation, barrier, oracle or all")->required();
  verify->add_option("--out", out, "directory for a JSON copy of the table");
  auto* exp = app.add_subcommand("export", "re-emit embedding and diagnostics from a checkpoint");
  exp->add_option("--checkpoint", checkpoint, "checkpoint header (.json)")->required();
  exp->add_option("--out", out, "output directory")->required();
  add_format(exp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_invalid;
  }

  const int threads = thread_count_from_env();
  Eigen::setNbThreads(threads);
  try {
    if (*run) return cmd_run(config, out, format, threads);
    if (*solve) return cmd_solve(config, out, format, threads);
    if (*verify) return cmd_verify(suite, out.empty() ? std::nullopt : std::optional<fs::path>(out), threads);
    if (*exp) return cmd_export(checkpoint, out, format);
  } catch (const ConfigFileError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return exit_invalid;
  } catch (const ConfigError& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return exit_invalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_failure;
  }
  return exit_failure;
}

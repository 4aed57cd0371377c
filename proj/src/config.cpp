#include "capflow/config.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace capflow {

using nlohmann::json;

namespace {

int line_at(const std::string& text, std::size_t pos) {
  int line = 1;
  for (std::size_t i = 0; i < pos && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

/// Walks one JSON object, remembering the dotted path for error positions.
class Section {
 public:
  Section(const json& node, std::string path, const std::string& text, const std::string& source)
      : node_(node), path_(std::move(path)), text_(text), source_(source) {
    if (!node_.is_object()) fail_at(path_, "expected an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const { fail_at(join(key), msg); }
  [[noreturn]] void fail_at(const std::string& dotted, const std::string& msg) const {
    throw ConfigFileError(source_, line_of_key(text_, dotted), msg);
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  template <typename T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    return convert<T>(key);
  }

  template <typename T>
  std::optional<T> maybe(const std::string& key) {
    seen_.insert(key);
    if (!has(key) || node_.at(key).is_null()) return std::nullopt;
    return convert<T>(key);
  }

  Vector<double> vector(const std::string& key) {
    seen_.insert(key);
    const auto v = convert<std::vector<double>>(key);
    return Eigen::Map<const Vector<double>>(v.data(), Index(v.size()));
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    return Section(node_.at(key), join(key), text_, source_);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return node_.at(key);
  }

  void finish() const {
    for (const auto& [k, v] : node_.items())
      if (!seen_.count(k)) fail(k, "unknown key \"" + k + "\"");
  }

  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  template <typename T>
  T convert(const std::string& key) const {
    try {
      return node_.at(key).get<T>();
    } catch (const json::exception& e) {
      fail(key, "bad value for \"" + key + "\": " + e.what());
    }
  }

  const json& node_;
  std::string path_;
  const std::string& text_;
  const std::string& source_;
  std::set<std::string> seen_;
};

template <typename E>
E pick(Section& s, const std::string& key, E fallback, std::initializer_list<std::pair<const char*, E>> names) {
  if (!s.has(key)) {
    s.get<std::string>(key, "");
    return fallback;
  }
  const std::string v = s.get<std::string>(key, "");
  std::string all;
  for (const auto& [n, e] : names) {
    if (v == n) return e;
    all += all.empty() ? n : std::string(", ") + n;
  }
  s.fail(key, "\"" + v + "\" is not one of: " + all);
}

DensitySpec<double> parse_density(Section d, const CapMesh<double>& mesh, std::optional<RandomDensity>& random) {
  const std::string kind = d.get<std::string>("kind", "constant");
  const double c = d.get<double>("c", 1.0);
  DensitySpec<double> f;
  if (kind == "constant") {
    f = DensitySpec<double>::constant(c);
  } else if (kind == "power_of_ell") {
    f = DensitySpec<double>::power_of_ell(c, d.get<double>("q", 0.0));
  } else if (kind == "cap_stationary") {
    if (!d.has("p")) d.fail("kind", "cap_stationary density needs \"p\"");
    f = DensitySpec<double>::cap_stationary(d.get<double>("p", 0.0));
    f.c = c;
  } else if (kind == "even_trig") {
    f = DensitySpec<double>::even_trig(c, d.get<double>("eps", 0.0));
  } else if (kind == "non_even_trig") {
    f = DensitySpec<double>::non_even_trig(c, d.get<double>("eps", 0.0));
  } else if (kind == "tabulated") {
    if (!d.has("values")) d.fail("kind", "tabulated density needs \"values\"");
    Vector<double> v = d.vector("values");
    if (v.size() != mesh.size())
      d.fail("values", "expected " + std::to_string(mesh.size()) + " values, got " + std::to_string(v.size()));
    if (!(v.minCoeff() > 0)) d.fail("values", "density values must be positive");
    f = DensitySpec<double>::tabulated(std::move(v));
  } else if (kind == "random") {
    RandomDensity r;
    if (!d.has("seed")) d.fail("kind", "random density needs \"seed\"");
    r.seed = d.get<std::uint64_t>("seed", 0);
    r.c = c;
    r.amplitude = d.get<double>("amplitude", r.amplitude);
    r.modes = d.get<int>("modes", r.modes);
    r.even = d.get<bool>("even", r.even);
    if (r.modes < 1) d.fail("modes", "modes must be at least 1");
    if (!(r.amplitude >= 0)) d.fail("amplitude", "amplitude must be non-negative");
    random = r;
    f = DensitySpec<double>::tabulated(random_density_table(r, mesh));
  } else {
    d.fail("kind", "unknown density kind \"" + kind + "\"");
  }
  if (f.kind != DensityKind::tabulated && !(f.c > 0)) d.fail("c", "density scale c must be positive");
  if ((f.kind == DensityKind::even_trig || f.kind == DensityKind::non_even_trig) && !(std::abs(f.eps) < 1))
    d.fail("eps", "|eps| < 1 is required for a positive density");
  d.finish();
  return f;
}

}  // namespace

int line_of_key(const std::string& text, const std::string& dotted) {
  std::size_t pos = 0;
  std::istringstream parts(dotted);
  std::string key;
  bool found = false;
  while (std::getline(parts, key, '.')) {
    const std::size_t at = text.find("\"" + key + "\"", pos);
    if (at == std::string::npos) break;
    pos = at;
    found = true;
  }
  return found ? line_at(text, pos) : 1;
}

Vector<double> random_density_table(const RandomDensity& r, const CapMesh<double>& mesh) {
  std::mt19937_64 gen(r.seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::vector<std::pair<double, double>> ab(r.modes + 1);
  for (int m = 1; m <= r.modes; ++m) ab[m] = {coef(gen), coef(gen)};
  Vector<double> out(mesh.size());
  for (Index a = 0; a < mesh.size(); ++a) {
    const double s = std::sin(mesh.rho[a]);
    const double ph = mesh.dim == 1 ? 0.0 : mesh.phi[a];
    double g = 0;
    for (int m = 1; m <= r.modes; ++m) {
      if (r.even && m % 2) continue;
      g += std::pow(s, m) * (ab[m].first * std::cos(m * ph) + ab[m].second * std::sin(m * ph));
    }
    out[a] = r.c * std::exp(r.amplitude * g);
  }
  return out;
}

RunConfig parse_config(const std::string& text, const std::string& source, ConfigUse use) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigFileError(source, line_at(text, e.byte > 0 ? e.byte - 1 : 0), e.what());
  }
  RunConfig rc;
  auto& fc = rc.flow;
  Section top(doc, "", text, source);

  fc.kind = pick(top, "flow", FlowKind::normalized,
                 {{"normalized", FlowKind::normalized},
                  {"unnormalized_lp", FlowKind::unnormalized_lp},
                  {"shrinking", FlowKind::shrinking}});
  fc.p = top.get<double>("p", fc.p);
  fc.theta = top.get<double>("theta", fc.theta);
  fc.dim = top.get<int>("dim", fc.dim);
  if (!(fc.theta > 0 && fc.theta < pi_v<double> / 2))
    top.fail("theta", "theta must lie in (0, pi/2); got " + std::to_string(fc.theta));
  if (fc.dim != 1 && fc.dim != 2) top.fail("dim", "dim must be 1 or 2");
  if (top.has("resolution")) {
    Section r = top.child("resolution");
    fc.resolution.n_rho = r.get<int>("n_rho", fc.resolution.n_rho);
    fc.resolution.n_phi = r.get<int>("n_phi", fc.resolution.n_phi);
    r.finish();
  }
  CapMesh<double> mesh;
  try {
    mesh = build_cap_mesh(fc.theta, fc.dim, fc.resolution);
  } catch (const std::exception& e) {
    top.fail("resolution", e.what());
  }

  if (top.has("density")) fc.f = parse_density(top.child("density"), mesh, rc.random_density);

  fc.integrator = pick(top, "integrator", fc.integrator,
                       {{"linear_implicit", Integrator::linear_implicit}, {"explicit_euler", Integrator::explicit_euler}});
  fc.volume_control = pick(top, "volume_control", fc.volume_control,
                           {{"constrained", VolumeControl::constrained}, {"formula", VolumeControl::formula}});
  fc.dt_init = top.get<double>("dt_init", fc.dt_init);
  fc.dt_min = top.get<double>("dt_min", fc.dt_min);
  fc.dt_max = top.get<double>("dt_max", fc.dt_max);
  fc.cfl_safety = top.get<double>("cfl_safety", fc.cfl_safety);
  fc.tol_stationary = top.get<double>("tol_stationary", fc.tol_stationary);
  fc.tol_volume_drift = top.get<double>("tol_volume_drift", fc.tol_volume_drift);
  fc.max_steps = top.get<int>("max_steps", fc.max_steps);
  fc.enforce_even = top.get<bool>("enforce_even", is_even(fc.f, mesh));
  fc.monotonicity_slack = top.get<double>("monotonicity_slack", fc.monotonicity_slack);
  fc.max_halvings = top.get<int>("max_halvings", fc.max_halvings);
  fc.volume_floor = top.get<double>("volume_floor", fc.volume_floor);
  fc.barrier_tol = top.get<double>("barrier_tol", fc.barrier_tol);
  fc.stall_window = top.get<int>("stall_window", fc.stall_window);
  fc.jacobian_reuse_tol = top.get<double>("jacobian_reuse_tol", fc.jacobian_reuse_tol);

  if (top.has("initial")) {
    Section in = top.child("initial");
    fc.initial.scale = in.get<double>("scale", fc.initial.scale);
    fc.initial.target_volume = in.maybe<double>("target_volume");
    fc.initial.bump = pick(in, "bump", BumpKind::none,
                           {{"none", BumpKind::none}, {"even", BumpKind::even}, {"non_even", BumpKind::non_even}});
    fc.initial.eps = in.get<double>("eps", 0.0);
    if (in.has("values")) {
      Vector<double> v = in.vector("values");
      if (v.size() != mesh.size())
        in.fail("values", "expected " + std::to_string(mesh.size()) + " values, got " + std::to_string(v.size()));
      fc.initial.tabulated = std::move(v);
    }
    rc.initial_checkpoint = in.maybe<std::string>("checkpoint");
    if (rc.initial_checkpoint && fc.initial.tabulated) in.fail("checkpoint", "give either values or checkpoint");
    in.finish();
  }

  rc.newton_mode = fc.kind == FlowKind::unnormalized_lp ? StationaryMode::unnormalized : StationaryMode::normalized;
  if (top.has("newton")) {
    Section nw = top.child("newton");
    auto& nc = rc.newton;
    rc.newton_mode = pick(nw, "mode", rc.newton_mode,
                          {{"normalized", StationaryMode::normalized}, {"unnormalized", StationaryMode::unnormalized}});
    rc.newton_v0 = nw.maybe<double>("V0");
    rc.newton_guess = nw.maybe<std::string>("guess");
    nc.tol_residual = nw.get<double>("tol_residual", nc.tol_residual);
    nc.max_iters = nw.get<int>("max_iters", nc.max_iters);
    nc.initial_fraction = nw.get<double>("initial_fraction", nc.initial_fraction);
    nc.backtrack_ratio = nw.get<double>("backtrack_ratio", nc.backtrack_ratio);
    nc.min_fraction = nw.get<double>("min_fraction", nc.min_fraction);
    nc.max_stage_halvings = nw.get<int>("max_stage_halvings", nc.max_stage_halvings);
    if (nw.has("plan")) {
      const json& plan = nw.raw("plan");
      if (!plan.is_array()) nw.fail("plan", "plan must be an array");
      for (const auto& st : plan) {
        Section s(st, nw.join("plan"), text, source);
        nc.plan.push_back({s.get<double>("p", fc.p), s.get<double>("blend", 1.0)});
        s.finish();
      }
    }
    if (rc.newton_v0 && !(*rc.newton_v0 > 0)) nw.fail("V0", "V0 must be positive");
    try {
      validate(nc);
    } catch (const ConfigError& e) {
      nw.fail(e.field(), e.what());
    }
    nw.finish();
  }
  top.finish();

  try {
    if (use == ConfigUse::run) validate(fc);
    if (fc.enforce_even && !is_even(fc.f, mesh)) throw ConfigError("enforce_even requires an even density f", "density");
  } catch (const ConfigError& e) {
    std::string field = e.field();
    if (field == "dt_init" && !top.has("dt_init")) field = top.has("dt_min") ? "dt_min" : "dt_max";
    if (field == "initial" && !top.has("initial")) field = "flow";
    if (field == "enforce_even" && !top.has("enforce_even")) field = "flow";
    throw ConfigFileError(source, line_of_key(text, field), e.what());
  }

  json& echo = rc.echo;
  echo["flow"] = to_string(fc.kind);
  echo["p"] = fc.p;
  echo["theta"] = fc.theta;
  echo["dim"] = fc.dim;
  echo["resolution"] = {{"n_rho", fc.resolution.n_rho}, {"n_phi", fc.resolution.n_phi}};
  json dj = {{"kind", to_string(fc.f.kind)}, {"c", fc.f.c}, {"q", fc.f.q}, {"eps", fc.f.eps}};
  if (rc.random_density) {
    const auto& r = *rc.random_density;
    dj = {{"kind", "random"}, {"seed", r.seed}, {"c", r.c}, {"amplitude", r.amplitude}, {"modes", r.modes}, {"even", r.even}};
  } else if (fc.f.kind == DensityKind::tabulated) {
    dj = {{"kind", "tabulated"}, {"values", std::vector<double>(fc.f.table.data(), fc.f.table.data() + fc.f.table.size())}};
  }
  echo["density"] = dj;
  echo["integrator"] = to_string(fc.integrator);
  echo["volume_control"] = to_string(fc.volume_control);
  echo["dt_init"] = fc.dt_init;
  echo["dt_min"] = fc.dt_min;
  echo["dt_max"] = fc.dt_max;
  echo["cfl_safety"] = fc.cfl_safety;
  echo["tol_stationary"] = fc.tol_stationary;
  echo["tol_volume_drift"] = fc.tol_volume_drift;
  echo["max_steps"] = fc.max_steps;
  echo["enforce_even"] = fc.enforce_even;
  echo["monotonicity_slack"] = fc.monotonicity_slack;
  echo["max_halvings"] = fc.max_halvings;
  echo["volume_floor"] = fc.volume_floor;
  echo["barrier_tol"] = fc.barrier_tol;
  echo["stall_window"] = fc.stall_window;
  echo["jacobian_reuse_tol"] = fc.jacobian_reuse_tol;
  json ij = {{"scale", fc.initial.scale},
             {"bump", fc.initial.bump == BumpKind::none ? "none" : fc.initial.bump == BumpKind::even ? "even" : "non_even"},
             {"eps", fc.initial.eps}};
  ij["target_volume"] = fc.initial.target_volume ? json(*fc.initial.target_volume) : json(nullptr);
  if (fc.initial.tabulated)
    ij["values"] = std::vector<double>(fc.initial.tabulated->data(), fc.initial.tabulated->data() + fc.initial.tabulated->size());
  if (rc.initial_checkpoint) ij["checkpoint"] = *rc.initial_checkpoint;
  echo["initial"] = ij;
  const auto& nc = rc.newton;
  json plan = json::array();
  for (const auto& st : nc.plan) plan.push_back({{"p", st.p}, {"blend", st.blend}});
  echo["newton"] = {{"mode", to_string(rc.newton_mode)},
                    {"V0", rc.newton_v0 ? json(*rc.newton_v0) : json(nullptr)},
                    {"guess", rc.newton_guess ? json(*rc.newton_guess) : json(nullptr)},
                    {"tol_residual", nc.tol_residual},
                    {"max_iters", nc.max_iters},
                    {"initial_fraction", nc.initial_fraction},
                    {"backtrack_ratio", nc.backtrack_ratio},
                    {"min_fraction", nc.min_fraction},
                    {"max_stage_halvings", nc.max_stage_halvings},
                    {"plan", plan}};
  return rc;
}

RunConfig load_config(const std::string& path, ConfigUse use) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigFileError(path, 1, "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path, use);
}

}  // namespace capflow

#include "capflow/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace capflow {

using nlohmann::json;

namespace {

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return r;
}

void put_f64(std::string& out, double x) {
  const std::uint64_t le = to_le(std::bit_cast<std::uint64_t>(x));
  char b[8];
  std::memcpy(b, &le, 8);
  out.append(b, 8);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_file(const fs::path& path) {
  try {
    return json::parse(slurp(path));
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::vector<double> as_std(const Vector<double>& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticsRecord<double>>& history) {
  using R = DiagnosticsRecord<double>;
  for (int i = 0; i < R::column_count; ++i) os << (i ? "," : "") << R::columns[i];
  os << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : history) {
    const auto v = r.values();
    for (int i = 0; i < R::column_count; ++i) os << (i ? "," : "") << v[i];
    os << '\n';
  }
}

std::vector<DiagnosticsRecord<double>> read_diagnostics_csv(std::istream& is) {
  using R = DiagnosticsRecord<double>;
  std::string line;
  if (!std::getline(is, line)) throw IoError("diagnostics CSV is empty");
  std::vector<R> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::array<double, 16> v{};
    std::istringstream row(line);
    std::string cell;
    int i = 0;
    for (; i < R::column_count && std::getline(row, cell, ','); ++i) v[i] = std::strtod(cell.c_str(), nullptr);
    if (i != R::column_count) throw IoError("diagnostics row with " + std::to_string(i) + " columns");
    out.push_back(R::from_values(v));
  }
  return out;
}

json diagnostics_json(const std::vector<DiagnosticsRecord<double>>& history) {
  using R = DiagnosticsRecord<double>;
  json cols = json::array();
  for (int i = 0; i < R::column_count; ++i) cols.push_back(R::columns[i]);
  json rows = json::array();
  for (const auto& r : history) {
    const auto v = r.values();
    rows.push_back(std::vector<double>(v.begin(), v.end()));
  }
  return {{"columns", cols}, {"rows", rows}};
}

std::vector<DiagnosticsRecord<double>> diagnostics_from_json(const json& j) {
  using R = DiagnosticsRecord<double>;
  std::vector<R> out;
  for (const auto& row : j.at("rows")) {
    const auto v = row.get<std::vector<double>>();
    if (v.size() != std::size_t(R::column_count)) throw IoError("diagnostics row has wrong length");
    std::array<double, 16> a{};
    std::copy(v.begin(), v.end(), a.begin());
    out.push_back(R::from_values(a));
  }
  return out;
}

namespace {

struct EmbeddingRows {
  PointMatrix<double> x;
  CurvatureData<double> c;
  std::vector<Index> order;
};

EmbeddingRows embedding_rows(const SupportField<double>& h) {
  EmbeddingRows e{embed(h), curvature(h), {}};
  for (Index a = 0; a < h.size(); ++a) e.order.push_back(a);
  if (h.mesh().dim == 1) e.order.push_back(0);
  return e;
}

}  // namespace

void write_embedding_csv(std::ostream& os, const SupportField<double>& h) {
  const auto& mesh = h.mesh();
  const int n = mesh.dim;
  const auto e = embedding_rows(h);
  os << "node,rho,phi";
  for (int k = 1; k <= n + 1; ++k) os << ",X" << k;
  for (int k = 1; k <= n; ++k) os << ",kappa" << k;
  os << ",K\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Index a : e.order) {
    os << a << ',' << mesh.rho[a] << ',' << mesh.phi[a];
    for (int k = 0; k <= n; ++k) os << ',' << e.x(a, k);
    os << ',' << e.c.kappa1[a];
    if (n == 2) os << ',' << e.c.kappa2[a];
    os << ',' << e.c.gauss[a] << '\n';
  }
}

json embedding_json(const SupportField<double>& h) {
  const auto& mesh = h.mesh();
  const auto e = embedding_rows(h);
  json nodes = json::array();
  for (Index a : e.order) {
    std::vector<double> x(e.x.cols());
    for (Index k = 0; k < e.x.cols(); ++k) x[k] = e.x(a, k);
    std::vector<double> kap{e.c.kappa1[a]};
    if (mesh.dim == 2) kap.push_back(e.c.kappa2[a]);
    nodes.push_back({{"node", a}, {"rho", mesh.rho[a]}, {"phi", mesh.phi[a]}, {"X", x}, {"kappa", kap}, {"K", e.c.gauss[a]}});
  }
  return {{"dim", mesh.dim}, {"theta", mesh.theta}, {"closed", mesh.dim == 1}, {"nodes", nodes}};
}

json mesh_json(const CapMesh<double>& mesh) {
  json pts = json::array();
  for (Index a = 0; a < mesh.size(); ++a) {
    std::vector<double> x(mesh.points.cols());
    for (Index k = 0; k < mesh.points.cols(); ++k) x[k] = mesh.points(a, k);
    pts.push_back(x);
  }
  return {{"theta", mesh.theta},
          {"dim", mesh.dim},
          {"resolution", {{"n_rho", mesh.resolution.n_rho}, {"n_phi", mesh.resolution.n_phi}}},
          {"nodes", pts},
          {"rho", as_std(mesh.rho)},
          {"phi", as_std(mesh.phi)},
          {"weights", as_std(mesh.weights)},
          {"boundary_ids", mesh.boundary_ids},
          {"fingerprint", mesh_fingerprint(mesh)}};
}

std::string mesh_fingerprint(const CapMesh<double>& mesh) {
  std::string bytes;
  for (Index a = 0; a < mesh.size(); ++a)
    for (Index k = 0; k < mesh.points.cols(); ++k) put_f64(bytes, mesh.points(a, k));
  for (Index a = 0; a < mesh.size(); ++a) put_f64(bytes, mesh.weights[a]);
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char ch : bytes) {
    hash ^= ch;
    hash *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << hash;
  return os.str();
}

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_field(const fs::path& path, const Vector<double>& values) {
  std::string bytes;
  bytes.reserve(std::size_t(values.size()) * 8);
  for (Index a = 0; a < values.size(); ++a) put_f64(bytes, values[a]);
  write_atomic(path, bytes);
  fs::path side = path;
  side += ".json";
  const json meta = {{"dtype", "<f8"}, {"shape", {values.size()}}, {"order", "C"}, {"bytes", bytes.size()}};
  write_atomic(side, meta.dump(2) + "\n");
}

Vector<double> read_field(const fs::path& path) {
  fs::path side = path;
  side += ".json";
  const json meta = parse_file(side);
  if (meta.value("dtype", "") != "<f8") throw IoError(side.string() + ": unsupported dtype");
  const auto shape = meta.at("shape").get<std::vector<long>>();
  if (shape.size() != 1) throw IoError(side.string() + ": expected a 1-d field");
  const std::string bytes = slurp(path);
  if (bytes.size() != std::size_t(shape[0]) * 8)
    throw IoError(path.string() + ": payload size does not match sidecar shape");
  Vector<double> v(shape[0]);
  for (long a = 0; a < shape[0]; ++a) {
    std::uint64_t le;
    std::memcpy(&le, bytes.data() + 8 * a, 8);
    v[a] = std::bit_cast<double>(to_le(le));
  }
  return v;
}

Checkpoint checkpoint_of(const FlowState<double>& s, const FlowConfig<double>& c) {
  Checkpoint k;
  k.theta = c.theta;
  k.dim = c.dim;
  k.resolution = s.h.mesh().resolution;
  k.kind = to_string(c.kind);
  k.p = c.p;
  k.values = s.h.values;
  k.even = s.h.even;
  k.tau = s.tau;
  k.t = s.t;
  k.step_index = s.step_index;
  k.dt = s.dt;
  k.V0 = s.V0;
  k.barrier = s.barrier;
  k.history = s.history;
  return k;
}

void write_checkpoint(const fs::path& header, const Checkpoint& c) {
  fs::path payload = header;
  payload.replace_extension(".bin");
  write_field(payload, c.values);
  const json j = {{"format", "capflow-checkpoint"},
                  {"version", 1},
                  {"theta", c.theta},
                  {"dim", c.dim},
                  {"resolution", {{"n_rho", c.resolution.n_rho}, {"n_phi", c.resolution.n_phi}}},
                  {"kind", c.kind},
                  {"p", c.p},
                  {"payload", payload.filename().string()},
                  {"even", c.even},
                  {"tau", c.tau},
                  {"t", c.t},
                  {"step_index", c.step_index},
                  {"dt", c.dt},
                  {"V0", c.V0},
                  {"barrier", c.barrier},
                  {"lambda", c.lambda},
                  {"history", diagnostics_json(c.history)}};
  write_atomic(header, j.dump(1) + "\n");
}

Checkpoint read_checkpoint(const fs::path& header) {
  const json j = parse_file(header);
  if (j.value("format", "") != "capflow-checkpoint") throw IoError(header.string() + ": not a capflow checkpoint");
  if (j.value("version", 0) != 1) throw IoError(header.string() + ": unsupported checkpoint version");
  Checkpoint c;
  try {
    c.theta = j.at("theta").get<double>();
    c.dim = j.at("dim").get<int>();
    c.resolution = {j.at("resolution").at("n_rho").get<int>(), j.at("resolution").at("n_phi").get<int>()};
    c.kind = j.at("kind").get<std::string>();
    c.p = j.at("p").get<double>();
    c.even = j.at("even").get<bool>();
    c.tau = j.at("tau").get<double>();
    c.t = j.at("t").get<double>();
    c.step_index = j.at("step_index").get<long>();
    c.dt = j.at("dt").get<double>();
    c.V0 = j.at("V0").get<double>();
    c.barrier = j.at("barrier").get<double>();
    c.lambda = j.at("lambda").get<double>();
    c.history = diagnostics_from_json(j.at("history"));
    c.values = read_field(header.parent_path() / j.at("payload").get<std::string>());
  } catch (const json::exception& e) {
    throw IoError(header.string() + ": " + e.what());
  }
  return c;
}

FlowState<double> restore_state(const Checkpoint& c, std::shared_ptr<const CapGeometry<double>> g) {
  if (g->mesh.dim != c.dim || g->mesh.theta != c.theta || g->mesh.resolution.n_rho != c.resolution.n_rho ||
      (c.dim == 2 && g->mesh.resolution.n_phi != c.resolution.n_phi))
    throw IoError("checkpoint mesh does not match the configured mesh");
  if (c.values.size() != g->mesh.size()) throw IoError("checkpoint field has wrong number of nodes");
  FlowState<double> s;
  s.h = make_field(std::move(g), c.values, c.even);
  s.tau = c.tau;
  s.t = c.t;
  s.step_index = c.step_index;
  s.dt = c.dt;
  s.V0 = c.V0;
  s.barrier = c.barrier;
  s.history = c.history;
  return s;
}

}  // namespace capflow

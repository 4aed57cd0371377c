#pragma once

#include "capflow/flows.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace capflow {

namespace fs = std::filesystem;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Header row, then one row per record; columns in DiagnosticsRecord order.
void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticsRecord<double>>& history);
std::vector<DiagnosticsRecord<double>> read_diagnostics_csv(std::istream& is);
nlohmann::json diagnostics_json(const std::vector<DiagnosticsRecord<double>>& history);
std::vector<DiagnosticsRecord<double>> diagnostics_from_json(const nlohmann::json& j);

/// node, rho, phi, X1..X{n+1}, kappa1..kappa{n}, K. For n = 1 the first node is
/// repeated at the end so the rows form a closed polyline.
void write_embedding_csv(std::ostream& os, const SupportField<double>& h);
nlohmann::json embedding_json(const SupportField<double>& h);

nlohmann::json mesh_json(const CapMesh<double>& mesh);
/// FNV-1a 64 over the little-endian bytes of the node coordinates and weights.
std::string mesh_fingerprint(const CapMesh<double>& mesh);

/// Writes to a sibling temporary and renames over `path`.
void write_atomic(const fs::path& path, const std::string& content);

/// Raw little-endian float64 payload plus `<path>.json` sidecar {dtype, shape}.
void write_field(const fs::path& path, const Vector<double>& values);
Vector<double> read_field(const fs::path& path);

/// Everything needed to resume a run or re-export a field.
struct Checkpoint {
  double theta = 0;
  int dim = 2;
  Resolution resolution{};
  std::string kind;  // flow kind or "stationary"
  double p = 0;
  Vector<double> values;
  bool even = false;
  double tau = 0;
  double t = 0;
  long step_index = 0;
  double dt = 0;
  double V0 = 0;
  double barrier = 0;
  double lambda = 1;
  std::vector<DiagnosticsRecord<double>> history;
};

Checkpoint checkpoint_of(const FlowState<double>& s, const FlowConfig<double>& c);
/// `header` is the JSON file; the payload goes next to it as `<stem>.bin`.
void write_checkpoint(const fs::path& header, const Checkpoint& c);
Checkpoint read_checkpoint(const fs::path& header);
FlowState<double> restore_state(const Checkpoint& c, std::shared_ptr<const CapGeometry<double>> g);

}  // namespace capflow

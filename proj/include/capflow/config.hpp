#pragma once

#include "capflow/elliptic_oracle.hpp"
#include "capflow/flows.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace capflow {

/// Invalid configuration with a source position: "path:line: message".
class ConfigFileError : public std::runtime_error {
 public:
  ConfigFileError(const std::string& source, int line, const std::string& message)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Random smooth density c exp(amplitude * sum_m sin^m rho (a_m cos m phi + b_m sin m phi)),
/// coefficients uniform in [-1, 1] from a seeded mt19937_64. `even` keeps even m only.
struct RandomDensity {
  std::uint64_t seed = 0;
  double c = 1;
  double amplitude = 0.1;
  int modes = 4;
  bool even = true;
};

Vector<double> random_density_table(const RandomDensity& r, const CapMesh<double>& mesh);

/// Everything one invocation needs. `echo` is the normalized configuration
/// with every default filled in.
struct RunConfig {
  FlowConfig<double> flow;
  NewtonConfig<double> newton;
  StationaryMode newton_mode = StationaryMode::normalized;
  std::optional<double> newton_v0;
  /// "initial" or a checkpoint path.
  std::optional<std::string> newton_guess;
  /// Resume from this checkpoint instead of building initial data.
  std::optional<std::string> initial_checkpoint;
  std::optional<RandomDensity> random_density;
  nlohmann::json echo;
};

/// `solve` skips the checks that only concern time stepping, so that
/// experimental stationary targets (unnormalized p <= n + 1) can be given.
enum class ConfigUse { run, solve };

RunConfig parse_config(const std::string& text, const std::string& source = "<config>", ConfigUse use = ConfigUse::run);
RunConfig load_config(const std::string& path, ConfigUse use = ConfigUse::run);

/// 1-based line of the first occurrence of the dotted key path in raw JSON text;
/// 1 when not found.
int line_of_key(const std::string& text, const std::string& dotted);

}  // namespace capflow

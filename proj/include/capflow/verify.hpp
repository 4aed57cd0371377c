#pragma once

#include "capflow/elliptic_oracle.hpp"
#include "capflow/flows.hpp"

#include <functional>
#include <string>
#include <vector>

namespace capflow {

struct CheckRow {
  std::string suite;
  std::string name;
  double value = 0;
  double threshold = 0;
  bool passed = false;
  std::string detail;
};

/// CAPFLOW_THREADS if set to a positive integer, else hardware concurrency.
int thread_count_from_env();

/// Runs fn(0..count-1) on up to `threads` workers. Exceptions are rethrown.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

struct MatrixCase {
  std::string label;
  FlowConfig<double> config;
};

/// Eight runs: normalized p in {-2, 0, 2, 4} with even f, unnormalized
/// p in {4.5, 6} with even and non-even f; dimensions alternate.
std::vector<MatrixCase> monotonicity_matrix(int n_rho_2d, int n_rho_1d);

/// Largest step-to-step increase of the functional the flow keeps monotone
/// (J for normalized, J_tilde for unnormalized_lp).
double max_monotone_increase(const std::vector<DiagnosticsRecord<double>>& history, FlowKind kind);

std::vector<std::string> suite_names();
/// Throws ConfigError for an unknown suite.
std::vector<CheckRow> run_suite(const std::string& name, int threads);
std::string format_table(const std::vector<CheckRow>& rows);

}  // namespace capflow

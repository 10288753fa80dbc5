#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "fedgs/config.hpp"
#include "fedgs/engine.hpp"

namespace fedgs {

// Absolute or config-relative file targets for one run; empty entries are
// skipped.
struct RunPaths {
  std::string dir;
  std::string rounds_csv;
  std::string summary_json;
  std::string trace_csv;
  std::string counts_csv;
  std::string graph_file;
};

RunPaths resolve_paths(const OutputConfig& output);

// Creates the output directory and proves it is writable before any
// training starts. Throws IoError otherwise.
void ensure_writable_dir(const std::string& dir);

void write_rounds_csv(const std::vector<RoundRecord>& records,
                      const std::string& path);

// Parsed view of one rounds-CSV line (the file keeps the available-set size,
// not its members).
struct RoundCsvRow {
  std::int64_t t = 0;
  std::int64_t num_available = 0;
  std::vector<int> selected;
  double objective = 0.0;
  double g_score = 0.0;
  double var_v = 0.0;
  double train_loss = 0.0;
  double test_loss = 0.0;
};

std::vector<RoundCsvRow> read_rounds_csv(const std::string& path);

void write_counts_csv(const std::vector<std::int64_t>& counts,
                      const std::string& path);

void write_summary_json(const ExperimentResult& result,
                        const ExperimentConfig& config, const std::string& path);

Json summary_to_json(const ExperimentResult& result,
                     const ExperimentConfig& config);

// Prepares, runs, and writes every configured artifact for one experiment.
// `log` (when non-null) receives one progress line per phase.
ExperimentResult execute_run(const ExperimentConfig& config,
                             std::ostream* log = nullptr);

struct MatrixCell {
  std::string sampler;
  std::string availability;
  std::uint64_t seed = 0;
  std::string dir;
  ExperimentSummary summary;
};

struct MatrixResult {
  std::vector<MatrixCell> cells;
  std::vector<std::string> sampler_labels;
  std::vector<std::string> availability_labels;
  // mean_min_test_loss[i][j]: sampler i, availability mode j, mean over seeds.
  std::vector<std::vector<double>> mean_min_test_loss;
};

// Runs every sampler x availability x seed combination of the grid into
// <output_dir>/<sampler>__<mode>__s<seed>/ and writes
// <output_dir>/matrix_summary.csv.
MatrixResult run_matrix(const MatrixConfig& matrix, std::ostream* log = nullptr);

void write_matrix_summary_csv(const MatrixResult& result,
                              const std::string& path);

}  // namespace fedgs

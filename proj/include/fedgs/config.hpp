#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fedgs/domain.hpp"
#include "json.hpp"

namespace fedgs {

struct DatasetConfig {
  std::string scheme = "synthetic";  // synthetic | dirichlet | two_label
  int n_clients = 30;
  double alpha = 0.5;  // synthetic: model heterogeneity
  double beta = 0.5;   // synthetic: input heterogeneity
  double dirichlet_alpha = 1.75;
  // Partition schemes draw from a generated labeled pool:
  std::int64_t source_examples = 2000;
  int source_classes = 10;
  int source_dim = 60;
  double train_fraction = 0.8;

  bool operator==(const DatasetConfig&) const = default;
};

struct SamplerConfig {
  std::string name = "fedgs";  // fedgs | uniform | md | poc
  double alpha = 1.0;
  double budget_seconds = 1.0;
  std::int64_t budget_swaps = -1;
  bool exact = false;  // brute-force solver instead of the heuristic
  // Cap on examples used per client for the poc loss probe; 0 = full split.
  int poc_eval_cap = 0;

  bool operator==(const SamplerConfig&) const = default;
};

struct GraphConfig {
  std::string method = "oracle";  // oracle | cosine_updates | functional | sspp
  double epsilon = 0.1;
  double sigma2 = 0.01;
  int noise_batch = 64;

  bool operator==(const GraphConfig&) const = default;
};

struct AvailabilityConfig {
  std::string mode = "IDL";
  double beta = 0.0;
  std::int64_t period = 40;
  int num_y = 0;  // 0: one bin per class

  bool operator==(const AvailabilityConfig&) const = default;
};

struct TrainerConfig {
  int steps = 10;       // local SGD steps per round
  int batch_size = 10;
  double learning_rate = 0.1;
  double decay = 0.998;
  double prox_mu = 0.0;

  bool operator==(const TrainerConfig&) const = default;
};

struct OutputConfig {
  std::string dir = "out";
  std::string rounds_csv = "rounds.csv";
  std::string summary = "summary.json";
  std::string trace_csv;   // empty: skip
  std::string counts_csv;  // empty: skip
  std::string graph_file;  // empty: skip

  bool operator==(const OutputConfig&) const = default;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  std::int64_t rounds = 100;
  // Explicit cap on clients per round; 0 means derive from the fraction.
  int max_selected = 0;
  double participation_fraction = 0.2;
  SamplerConfig sampler;
  GraphConfig graph;
  AvailabilityConfig availability;
  TrainerConfig trainer;
  std::string aggregation = "auto";  // auto | weighted | uniform
  int workers = 1;
  ExperimentSeeds seeds;
  OutputConfig output;

  int resolved_max_selected() const;

  bool operator==(const ExperimentConfig& o) const;
};

using Json = nlohmann::ordered_json;

// Strict loaders: unknown fields are rejected with their full path, ranges
// are validated, defaults fill anything omitted.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& config);

// Applies a dotted-path override ("sampler.alpha=2"); values parse as JSON
// scalars, falling back to strings.
void apply_override(Json& j, const std::string& assignment);

// JSON writer with 12-significant-digit floats (reproducibility contract for
// all textual output); nlohmann's dump() would emit shortest-round-trip.
void write_json(std::ostream& os, const Json& j, int indent = 0);
std::string json_to_text(const Json& j);

struct MatrixConfig {
  ExperimentConfig base;
  std::vector<SamplerConfig> samplers;
  std::vector<AvailabilityConfig> availability_modes;
  std::vector<std::uint64_t> seeds;
  std::string output_dir = "matrix_out";
};

// Accepts the matrix file itself or a directory containing matrix.json.
MatrixConfig parse_matrix_config(const std::string& path);

std::string sampler_label(const SamplerConfig& s);
std::string availability_label(const AvailabilityConfig& a);

}  // namespace fedgs

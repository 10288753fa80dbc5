#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fedgs/availability.hpp"
#include "fedgs/config.hpp"
#include "fedgs/dataset.hpp"
#include "fedgs/graph.hpp"
#include "fedgs/model.hpp"
#include "fedgs/sampler.hpp"

namespace fedgs {

struct RoundRecord {
  std::int64_t t = 0;
  std::vector<int> available;
  std::vector<int> selected;
  std::vector<int> draws;
  // Solver objective; NaN for baselines and skipped rounds.
  double objective = std::numeric_limits<double>::quiet_NaN();
  double g_score = 0.0;
  double var_v = 0.0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double test_accuracy = 0.0;
  bool skipped = false;
  // Wall-clock seconds per phase; in-memory only (kept out of the CSV so
  // paired runs stay byte-identical).
  double elapsed_select = 0.0;
  double elapsed_train = 0.0;
  double elapsed_eval = 0.0;
};

struct ExperimentSummary {
  double initial_test_loss = 0.0;
  double initial_test_accuracy = 0.0;
  double min_test_loss = std::numeric_limits<double>::quiet_NaN();
  std::int64_t min_test_loss_round = -1;
  double final_test_loss = std::numeric_limits<double>::quiet_NaN();
  double final_test_accuracy = std::numeric_limits<double>::quiet_NaN();
  double final_counts_variance = 0.0;
  std::vector<std::int64_t> counts;
  std::int64_t completed_rounds = 0;
  std::int64_t skipped_rounds = 0;
  bool aborted = false;
  std::int64_t aborted_round = -1;
  int aborted_client = -1;
  std::string abort_reason;
  // What test_loss was measured on: "global_test" or "pooled_validation".
  std::string eval_set;
};

struct ExperimentResult {
  std::vector<RoundRecord> records;
  ExperimentSummary summary;
};

// Everything that is fixed before round 0: data, profiles, availability
// model, and the dependency graph.
struct ExperimentSetup {
  ExperimentConfig config;
  FederatedDataset data;
  std::vector<ClientProfile> profiles;
  std::vector<Example> eval_examples;
  bool eval_on_global_test = false;
  AvailabilityModel availability;
  SimilarityMatrix similarity;
  Graph3DG graph;
  int max_selected = 1;
};

ExperimentSetup prepare_experiment(const ExperimentConfig& config);

// E mini-batch SGD steps from theta_global on one client's train split.
// Batches are drawn without replacement from a per-(round, client) shuffle,
// reshuffling when fewer than a full batch remains. prox_mu > 0 adds
// prox_mu * (theta - theta_global) to each step's gradient. Throws
// DivergenceError when the loss or parameters leave the finite range.
ModelParams local_sgd(const ModelParams& theta_global,
                      std::span<const Example> train, const TrainerConfig& config,
                      double eta_t, std::uint64_t train_seed, std::int64_t t,
                      int client_id);

// Data-size-weighted average: sum_k (n_k / sum_i n_i) theta_k, accumulated
// in the order given (callers pass ascending client id).
ModelParams aggregate_fedgs(std::span<const ModelParams> models,
                            std::span<const std::int64_t> sizes);

// Plain average in the order given; a client drawn twice counts twice.
ModelParams aggregate_uniform(std::span<const ModelParams> models);

ExperimentResult run_experiment(const ExperimentSetup& setup);
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace fedgs

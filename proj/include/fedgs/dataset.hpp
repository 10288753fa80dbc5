#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedgs/domain.hpp"

namespace fedgs {

struct Example {
  std::vector<double> x;
  int y = 0;

  bool operator==(const Example&) const = default;
};

struct ClientData {
  std::vector<Example> train;
  std::vector<Example> validation;

  std::int64_t size() const {
    return static_cast<std::int64_t>(train.size() + validation.size());
  }

  bool operator==(const ClientData&) const = default;
};

struct FederatedDataset {
  int num_classes = 0;
  int dim = 0;
  std::vector<ClientData> clients;
  // Held-out global examples (synthetic generator only; empty otherwise).
  std::vector<Example> test_set;
  // Per-client descriptor for the oracle similarity builder. The synthetic
  // generator stores each client's true (W_k, b_k); partitioned datasets
  // leave this empty and profiles fall back to label histograms.
  std::vector<std::vector<double>> oracle_features;
  // Clients whose validation split is empty (single-example clients).
  std::vector<int> empty_validation_clients;

  int n_clients() const { return static_cast<int>(clients.size()); }

  bool operator==(const FederatedDataset&) const = default;
};

// Synthetic classification data: each client k owns a private linear model
// (W_k, b_k) whose spread across clients is controlled by alpha, and a
// private input distribution whose spread is controlled by beta. Labels are
// argmax(W_k x + b_k). Client sizes are lognormal(4, 2), rounded up and
// clamped to >= 2. An extra 20% per client is pooled into test_set.
FederatedDataset generate_synthetic(double alpha, double beta, int n_clients,
                                    std::uint64_t data_seed);

// Splits a labeled pool so each client's label distribution is a draw from
// Dirichlet(dir_alpha * p_star), p_star being the pool's label distribution.
// Client sizes act as allocation weights; pass an empty vector to draw them
// from a mean-corrected lognormal. One client's draw at a time is replaced
// until the size-weighted mixture of the draws is close to p_star; after
// max_retries replacements the partition is declared infeasible.
FederatedDataset partition_dirichlet(const std::vector<Example>& examples,
                                     int n_clients, double dir_alpha,
                                     std::vector<std::int64_t> sizes,
                                     std::uint64_t data_seed,
                                     int max_retries = 10000);

// Sorts the pool by label, cuts it into 2N equally sized label-pure shards,
// and deals 2 shards to each client. Requires the pool size to be divisible
// by 2N and every label count to be divisible by the shard size, so each
// client ends up with equal size and at most 2 distinct labels.
FederatedDataset partition_two_label(const std::vector<Example>& examples,
                                     int n_clients, std::uint64_t data_seed);

// Moves each client's examples into train/validation at the given fraction.
// Both parts stay nonempty whenever a client has >= 2 examples; a client
// with a single example keeps it in train and is listed in
// empty_validation_clients.
void split_train_validation(FederatedDataset& data, double fraction,
                            std::uint64_t data_seed);

// Balanced Gaussian-blob pool used by the partitioners in tests and CLI
// runs: labels cycle 0..num_classes-1, class c's features are an isotropic
// normal around a class-specific center.
std::vector<Example> make_blob_examples(std::int64_t num_examples,
                                        int num_classes, int dim,
                                        std::uint64_t seed);

// Per-client profiles for the sampler/availability layers: n_k and label
// counts come from the train split; features are the dataset's oracle
// descriptors, or the label counts when none exist.
std::vector<ClientProfile> make_profiles(const FederatedDataset& data);

// Binary dump/load; round-trips bit-exactly. Format documented in README.
void save_dataset(const FederatedDataset& data, const std::string& path);
FederatedDataset load_dataset(const std::string& path);

}  // namespace fedgs

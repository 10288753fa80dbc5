#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedgs/common.hpp"

namespace fedgs {

// Static per-client facts the server is allowed to know.
struct ClientProfile {
  int id = 0;
  // Size of the client's local training split.
  std::int64_t num_examples = 0;
  // Per-class example counts over the local training split.
  std::vector<std::int64_t> label_counts;
  // Optional descriptor used by the oracle similarity builder (true model
  // parameters for synthetic data, label histograms for partitioned data).
  std::vector<double> features;

  // Class ids with at least one local example, ascending.
  std::vector<int> labels() const {
    std::vector<int> out;
    for (std::size_t c = 0; c < label_counts.size(); ++c) {
      if (label_counts[c] > 0) {
        out.push_back(static_cast<int>(c));
      }
    }
    return out;
  }
};

// Multinomial logistic regression parameters, stored flat:
// W (num_classes x dim, row-major) followed by b (num_classes).
struct ModelParams {
  int num_classes = 0;
  int dim = 0;
  std::vector<double> values;

  static ModelParams zeros(int num_classes, int dim) {
    ModelParams p;
    p.num_classes = num_classes;
    p.dim = dim;
    p.values.assign(static_cast<std::size_t>(num_classes) * (dim + 1), 0.0);
    return p;
  }

  double w(int c, int j) const {
    return values[static_cast<std::size_t>(c) * dim + j];
  }
  double& w(int c, int j) {
    return values[static_cast<std::size_t>(c) * dim + j];
  }
  double b(int c) const {
    return values[static_cast<std::size_t>(num_classes) * dim + c];
  }
  double& b(int c) {
    return values[static_cast<std::size_t>(num_classes) * dim + c];
  }

  bool same_shape(const ModelParams& o) const {
    return num_classes == o.num_classes && dim == o.dim &&
           values.size() == o.values.size();
  }

  bool operator==(const ModelParams&) const = default;
};

// Sampler bookkeeping carried across rounds.
struct SamplerState {
  // v[k]: number of rounds client k has been selected so far.
  std::vector<std::int64_t> counts;

  explicit SamplerState(int n_clients = 0)
      : counts(static_cast<std::size_t>(n_clients), 0) {}

  void record_selection(std::span<const int> selected) {
    for (int k : selected) {
      counts[static_cast<std::size_t>(k)] += 1;
    }
  }
};

// The three independent seed streams of an experiment. Data generation,
// local training, and client availability never share a generator, so e.g.
// changing the sampler cannot perturb which clients are active.
struct ExperimentSeeds {
  std::uint64_t data = 1;
  std::uint64_t train = 2;
  std::uint64_t availability = 3;

  bool operator==(const ExperimentSeeds&) const = default;
};

// Unbiased sample variance of the selection counts (zero for fewer than two
// clients).
double counts_variance(std::span<const std::int64_t> counts);

// Per-client penalty coefficients z_k = 2 (v_k - mean(v) - M/N) + 1 used by
// the graph sampler to even out cumulative selection counts; M is the
// nominal number of clients sampled per round and N the client count.
std::vector<double> z_vector(std::span<const std::int64_t> counts, int M);

}  // namespace fedgs

#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fedgs/domain.hpp"

namespace fedgs {

// Missing edge marker in adjacency matrices.
constexpr double kAbsent = std::numeric_limits<double>::infinity();

struct SimilarityMatrix {
  SquareMat V;
  // All off-diagonal raw similarities were equal; every entry forced to 0.5.
  bool degenerate = false;
  // Clients whose embedding/update had zero norm; their rows were zeroed.
  std::vector<int> zero_norm_clients;
};

struct Graph3DG {
  SquareMat R;  // kAbsent where no edge; 0 on the diagonal
  SquareMat H;  // shortest-path distances, capped to finite values
  double epsilon = 0.0;
  double sigma2 = 0.0;
  // Value substituted for unreachable pairs; 0 when the graph was connected.
  double cap = 0.0;
};

// Gaussian noise used to probe models functionally: per-coordinate mean and
// variance, typically estimated from a server-held validation pool.
struct NoiseSpec {
  std::vector<double> mean;
  std::vector<double> variance;
};

using SimilarityFn =
    std::function<double(std::span<const double>, std::span<const double>)>;

double dot_product(std::span<const double> a, std::span<const double> b);

// Min-max normalizes a symmetric raw-similarity matrix over its off-diagonal
// entries; when they are all equal the result is the flagged all-0.5 matrix.
SimilarityMatrix normalize_similarity(SquareMat raw);

// Pairwise sim_fn over profile features, then min-max normalized to [0,1]
// over the off-diagonal entries. If all raw off-diagonal values coincide the
// normalization is degenerate and every entry becomes 0.5 (flagged).
SimilarityMatrix build_similarity_oracle(std::span<const ClientProfile> profiles,
                                         const SimilarityFn& sim_fn = dot_product);

// V_ij = max(cos(theta_i - theta_global, theta_j - theta_global), 0).
SimilarityMatrix build_similarity_cosine_updates(
    std::span<const ModelParams> local_models, const ModelParams& global_model);

// Probes every model with one shared batch of Gaussian noise inputs and
// compares the mean output-layer logits: V_ij = max(cos(e_i, e_j), 0).
SimilarityMatrix build_similarity_functional(
    std::span<const ModelParams> local_models, const NoiseSpec& noise,
    int noise_batch, std::uint64_t train_seed);

NoiseSpec estimate_noise_spec(std::span<const std::vector<double>> features);

// R_ii = 0; R_ij = exp(-V_ij / sigma2) when V_ij >= epsilon, else absent.
Graph3DG adjacency_from_similarity(const SimilarityMatrix& sim, double epsilon,
                                   double sigma2);

// All-pairs shortest paths over the finite edges; unreachable pairs keep
// kAbsent.
SquareMat shortest_paths_raw(const SquareMat& R);

// Shortest paths with unreachable pairs replaced by twice the largest finite
// pairwise distance (1 when no finite pair exists). cap_out, if given,
// receives the substituted value (0 when nothing was capped).
SquareMat floyd_warshall(const SquareMat& R, double* cap_out = nullptr);

// Fills in H (and cap) for a graph whose R is already built.
void compute_distances(Graph3DG& graph);

Graph3DG build_3dg(const SimilarityMatrix& sim, double epsilon, double sigma2);

// Diversity score of a sampled set: sum of H over ordered pairs of distinct
// members of S, divided by N(N-1).
double avg_shortest_path_score(std::span<const int> S, const SquareMat& H, int N);

struct EdgeScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Treats finite off-diagonal entries of R as undirected edges (counted once)
// and scores the predicted edge set against the oracle's.
EdgeScores edge_prediction_scores(const Graph3DG& predicted, const Graph3DG& oracle);

// Edge-list text format; absent edges omitted, weights round-trip bit-exactly.
void save_graph(const Graph3DG& graph, const std::string& path);
Graph3DG load_graph(const std::string& path);

}  // namespace fedgs

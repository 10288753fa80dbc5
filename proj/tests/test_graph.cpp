#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "doctest.h"
#include "fedgs/common.hpp"
#include "fedgs/graph.hpp"
#include "oracles.hpp"

using namespace fedgs;

namespace {

ClientProfile profile_with_features(int id, std::vector<double> features) {
  ClientProfile p;
  p.id = id;
  p.num_examples = 1;
  p.features = std::move(features);
  return p;
}

ModelParams params_from_values(int num_classes, int dim,
                               std::vector<double> values) {
  ModelParams p = ModelParams::zeros(num_classes, dim);
  REQUIRE(p.values.size() == values.size());
  p.values = std::move(values);
  return p;
}

}  // namespace

TEST_CASE("oracle similarity normalizes dot products to [0,1]") {
  const std::vector<ClientProfile> profiles = {
      profile_with_features(0, {1.0, 0.0}),
      profile_with_features(1, {0.0, 1.0}),
      profile_with_features(2, {1.0, 0.0}),
  };
  const SimilarityMatrix sim = build_similarity_oracle(profiles);
  CHECK_FALSE(sim.degenerate);
  CHECK(sim.V(0, 2) == 1.0);
  CHECK(sim.V(0, 1) == 0.0);
  CHECK(sim.V(1, 2) == 0.0);
  CHECK(sim.V(2, 0) == 1.0);
}

TEST_CASE("all-equal similarities degenerate to a flat 0.5 matrix") {
  const std::vector<ClientProfile> profiles = {
      profile_with_features(0, {1.0, 0.0}),
      profile_with_features(1, {1.0, 0.0}),
      profile_with_features(2, {1.0, 0.0}),
  };
  const SimilarityMatrix sim = build_similarity_oracle(profiles);
  CHECK(sim.degenerate);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) CHECK(sim.V(i, j) == 0.5);
}

TEST_CASE("cosine-update similarity is the clipped cosine of the deltas") {
  // One class, one feature: parameter vectors are (w, b).
  const ModelParams global = ModelParams::zeros(1, 1);
  const std::vector<ModelParams> locals = {
      params_from_values(1, 1, {1.0, 0.0}),   // delta (1, 0)
      params_from_values(1, 1, {1.0, 1.0}),   // delta (1, 1)
      params_from_values(1, 1, {-1.0, 0.0}),  // delta (-1, 0)
  };
  const SimilarityMatrix sim = build_similarity_cosine_updates(locals, global);
  CHECK(sim.V(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(sim.V(0, 2) == 0.0);  // cosine -1, clipped
  CHECK(sim.V(1, 2) == 0.0);
}

TEST_CASE("zero-norm update rows are flagged and zeroed") {
  const ModelParams global = ModelParams::zeros(1, 1);
  const std::vector<ModelParams> locals = {
      params_from_values(1, 1, {0.0, 0.0}),
      params_from_values(1, 1, {1.0, 1.0}),
  };
  const SimilarityMatrix sim = build_similarity_cosine_updates(locals, global);
  CHECK(sim.zero_norm_clients == std::vector<int>{0});
  CHECK(sim.V(0, 1) == 0.0);
}

TEST_CASE("noise spec is the feature mean and population variance") {
  const std::vector<std::vector<double>> xs = {{1.0, 2.0}, {3.0, 6.0}};
  const NoiseSpec spec = estimate_noise_spec(xs);
  CHECK(spec.mean == std::vector<double>{2.0, 4.0});
  CHECK(spec.variance == std::vector<double>{1.0, 4.0});
}

TEST_CASE("functional similarity separates sign-flipped models") {
  // logits_B(x) = -logits_A(x) for every probe, so embeddings oppose.
  const std::vector<ModelParams> locals = {
      params_from_values(2, 1, {1.0, -1.0, 0.3, -0.3}),
      params_from_values(2, 1, {-1.0, 1.0, -0.3, 0.3}),
      params_from_values(2, 1, {1.0, -1.0, 0.3, -0.3}),
  };
  NoiseSpec noise;
  noise.mean = {0.0};
  noise.variance = {1.0};
  const SimilarityMatrix sim = build_similarity_functional(locals, noise, 16, 7);
  CHECK(sim.V(0, 2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sim.V(0, 1) == 0.0);
  CHECK(sim.V(1, 2) == 0.0);
}

TEST_CASE("functional similarity is deterministic in the seed") {
  // Mean logits are (m, 1) and (1, m) for probe mean m, so the cosine
  // 2m/(1+m^2) moves with the sampled probe batch.
  const std::vector<ModelParams> locals = {
      params_from_values(2, 1, {1.0, 0.0, 0.0, 1.0}),
      params_from_values(2, 1, {0.0, 1.0, 1.0, 0.0}),
  };
  NoiseSpec noise;
  noise.mean = {2.0};
  noise.variance = {0.25};
  const SimilarityMatrix a = build_similarity_functional(locals, noise, 64, 9);
  const SimilarityMatrix b = build_similarity_functional(locals, noise, 64, 9);
  const SimilarityMatrix c = build_similarity_functional(locals, noise, 64, 10);
  CHECK(a.V == b.V);
  CHECK(a.V(0, 1) > 0.0);
  CHECK(a.V != c.V);
}

TEST_CASE("adjacency applies the similarity kernel and the threshold") {
  SimilarityMatrix sim;
  sim.V = SquareMat(2, 0.5);
  const Graph3DG g = adjacency_from_similarity(sim, 0.1, 0.01);
  CHECK(g.R(0, 0) == 0.0);
  CHECK(g.R(1, 1) == 0.0);
  CHECK(g.R(0, 1) == doctest::Approx(std::exp(-50.0)).epsilon(1e-12));

  const Graph3DG cut = adjacency_from_similarity(sim, 0.6, 0.01);
  CHECK(cut.R(0, 1) == kAbsent);
}

TEST_CASE("shortest paths: two hops beat an absent direct edge") {
  SquareMat R(3, kAbsent);
  for (int i = 0; i < 3; ++i) R(i, i) = 0.0;
  R(0, 1) = R(1, 0) = 1.0;
  R(1, 2) = R(2, 1) = 1.0;
  double cap = -1.0;
  const SquareMat H = floyd_warshall(R, &cap);
  CHECK(H(0, 1) == 1.0);
  CHECK(H(0, 2) == 2.0);
  CHECK(H(2, 0) == 2.0);
  CHECK(cap == 0.0);  // fully connected, nothing capped
}

TEST_CASE("shortest paths take the cheaper multi-hop route") {
  SquareMat R(3, kAbsent);
  for (int i = 0; i < 3; ++i) R(i, i) = 0.0;
  R(0, 2) = R(2, 0) = 10.0;
  R(0, 1) = R(1, 0) = 1.0;
  R(1, 2) = R(2, 1) = 2.0;
  const SquareMat H = floyd_warshall(R);
  CHECK(H(0, 2) == 3.0);
}

TEST_CASE("unreachable pairs are capped at twice the largest finite distance") {
  SquareMat R(4, kAbsent);
  for (int i = 0; i < 4; ++i) R(i, i) = 0.0;
  R(0, 1) = R(1, 0) = 3.0;
  R(2, 3) = R(3, 2) = 5.0;
  double cap = 0.0;
  const SquareMat H = floyd_warshall(R, &cap);
  CHECK(cap == 10.0);
  CHECK(H(0, 2) == 10.0);
  CHECK(H(1, 3) == 10.0);
  CHECK(H(0, 1) == 3.0);
}

TEST_CASE("cap falls back to 1 when no pair is reachable") {
  SquareMat R(2, kAbsent);
  R(0, 0) = R(1, 1) = 0.0;
  double cap = 0.0;
  const SquareMat H = floyd_warshall(R, &cap);
  CHECK(cap == 1.0);
  CHECK(H(0, 1) == 1.0);
}

TEST_CASE("distances match brute-force simple-path enumeration") {
  Rng rng(31);
  for (int rep = 0; rep < 30; ++rep) {
    const int n = 3 + static_cast<int>(rng.below(5));  // 3..7
    SquareMat R(n, kAbsent);
    for (int i = 0; i < n; ++i) R(i, i) = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (rng.uniform01() < 0.55) {
          const double w = rng.uniform(0.1, 4.0);
          R(i, j) = w;
          R(j, i) = w;
        }
      }
    }
    const SquareMat expected = test_oracle::brute_force_shortest_paths(R);
    const SquareMat raw = shortest_paths_raw(R);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (std::isinf(expected(i, j))) {
          CHECK(raw(i, j) == kAbsent);
        } else {
          CHECK(raw(i, j) == doctest::Approx(expected(i, j)).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("triangle inequality holds on non-capped distances") {
  Rng rng(37);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 4 + static_cast<int>(rng.below(4));
    SquareMat R(n, kAbsent);
    for (int i = 0; i < n; ++i) R(i, i) = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng.uniform01() < 0.6) {
          const double w = rng.uniform(0.05, 2.0);
          R(i, j) = w;
          R(j, i) = w;
        }
    const SquareMat raw = shortest_paths_raw(R);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          if (raw(i, j) == kAbsent || raw(i, k) == kAbsent ||
              raw(k, j) == kAbsent)
            continue;
          CHECK(raw(i, j) <= raw(i, k) + raw(k, j) + 1e-12);
        }
  }
}

TEST_CASE("direct edges equal shortest paths when weights are uniform") {
  // A complete graph with a constant weight is already metric, so the
  // adjacency and distance matrices coincide.
  SquareMat R(5, kAbsent);
  for (int i = 0; i < 5; ++i) R(i, i) = 0.0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      if (i != j) R(i, j) = 0.7;
  const SquareMat H = floyd_warshall(R);
  CHECK(H == R);
}

TEST_CASE("diversity score averages ordered pair distances over N(N-1)") {
  SquareMat H(3, 0.0);
  H(0, 1) = H(1, 0) = 1.0;
  H(1, 2) = H(2, 1) = 1.0;
  H(0, 2) = H(2, 0) = 2.0;
  const std::vector<int> s = {0, 2};
  CHECK(avg_shortest_path_score(s, H, 3) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(avg_shortest_path_score(std::vector<int>{1}, H, 3) == 0.0);
  CHECK(avg_shortest_path_score(std::vector<int>{}, H, 3) == 0.0);
}

TEST_CASE("edge prediction scores match the hand example") {
  SimilarityMatrix oracle_sim;
  oracle_sim.V = SquareMat(3, 0.0);
  oracle_sim.V(0, 1) = oracle_sim.V(1, 0) = 1.0;
  oracle_sim.V(1, 2) = oracle_sim.V(2, 1) = 1.0;
  const Graph3DG oracle = build_3dg(oracle_sim, 0.5, 1.0);

  SimilarityMatrix predicted_sim;
  predicted_sim.V = SquareMat(3, 0.0);
  predicted_sim.V(0, 1) = predicted_sim.V(1, 0) = 1.0;
  const Graph3DG predicted = build_3dg(predicted_sim, 0.5, 1.0);

  const EdgeScores s = edge_prediction_scores(predicted, oracle);
  CHECK(s.precision == 1.0);
  CHECK(s.recall == 0.5);
  CHECK(s.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("edge scores degrade gracefully with no predicted edges") {
  SimilarityMatrix none;
  none.V = SquareMat(3, 0.0);
  SimilarityMatrix some;
  some.V = SquareMat(3, 0.0);
  some.V(0, 1) = some.V(1, 0) = 1.0;
  const EdgeScores s =
      edge_prediction_scores(build_3dg(none, 0.5, 1.0), build_3dg(some, 0.5, 1.0));
  CHECK(s.precision == 0.0);
  CHECK(s.recall == 0.0);
  CHECK(s.f1 == 0.0);
}

TEST_CASE("graph save/load round-trips bit-exactly") {
  Rng rng(41);
  SquareMat raw(6, 0.0);
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) {
      const double v = rng.uniform01();
      raw(i, j) = v;
      raw(j, i) = v;
    }
  const SimilarityMatrix sim = normalize_similarity(raw);
  const Graph3DG g = build_3dg(sim, 0.37, 0.8);
  const std::string path = "roundtrip_graph.txt";
  save_graph(g, path);
  const Graph3DG loaded = load_graph(path);
  CHECK(loaded.R == g.R);
  CHECK(loaded.H == g.H);
  CHECK(loaded.cap == g.cap);
  CHECK(loaded.epsilon == g.epsilon);
  CHECK(loaded.sigma2 == g.sigma2);
  std::remove(path.c_str());
}

TEST_CASE("build_3dg pipes similarity through kernel and shortest paths") {
  const std::vector<ClientProfile> profiles = {
      profile_with_features(0, {1.0, 0.0}),
      profile_with_features(1, {0.0, 1.0}),
      profile_with_features(2, {1.0, 0.0}),
  };
  const SimilarityMatrix sim = build_similarity_oracle(profiles);
  const Graph3DG g = build_3dg(sim, 0.5, 1.0);
  // Only the (0,2) pair clears the threshold.
  CHECK(g.R(0, 2) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(g.R(0, 1) == kAbsent);
  CHECK(g.cap == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-15));
  CHECK(g.H(0, 1) == g.cap);
}

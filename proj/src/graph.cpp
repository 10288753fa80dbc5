#include "fedgs/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fedgs/model.hpp"

namespace fedgs {

double dot_product(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvalidInputError("dot_product: dimension mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += a[i] * b[i];
  }
  return acc;
}

// Min-max normalization over the off-diagonal entries; the diagonal is set
// to 1 (never consumed: adjacency forces R_ii = 0).
SimilarityMatrix normalize_similarity(SquareMat raw) {
  const int n = raw.size();
  SimilarityMatrix sim;
  double lo = 0.0;
  double hi = 0.0;
  bool first = true;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double v = raw(i, j);
      if (first) {
        lo = hi = v;
        first = false;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (!(hi > lo)) {
    sim.degenerate = true;
    sim.V = SquareMat(n, 0.5);
    return sim;
  }
  sim.V = SquareMat(n, 1.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) {
        sim.V(i, j) = (raw(i, j) - lo) / (hi - lo);
      }
    }
  }
  return sim;
}

namespace {

double cosine_clipped(std::span<const double> a, std::span<const double> b) {
  const double na = std::sqrt(dot_product(a, a));
  const double nb = std::sqrt(dot_product(b, b));
  if (na == 0.0 || nb == 0.0) {
    return 0.0;
  }
  return std::max(dot_product(a, b) / (na * nb), 0.0);
}

// Shared by the cosine-update and functional builders: clipped cosine over
// per-client embedding vectors, zero-norm rows zeroed and flagged.
SimilarityMatrix cosine_similarity_matrix(
    const std::vector<std::vector<double>>& embeddings) {
  const int n = static_cast<int>(embeddings.size());
  SimilarityMatrix sim;
  sim.V = SquareMat(n, 1.0);
  for (int i = 0; i < n; ++i) {
    if (dot_product(embeddings[static_cast<std::size_t>(i)],
                    embeddings[static_cast<std::size_t>(i)]) == 0.0) {
      sim.zero_norm_clients.push_back(i);
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double v = cosine_clipped(embeddings[static_cast<std::size_t>(i)],
                                      embeddings[static_cast<std::size_t>(j)]);
      sim.V(i, j) = v;
      sim.V(j, i) = v;
    }
  }
  for (int i : sim.zero_norm_clients) {
    for (int j = 0; j < n; ++j) {
      if (j != i) {
        sim.V(i, j) = 0.0;
        sim.V(j, i) = 0.0;
      }
    }
  }
  return sim;
}

}  // namespace

SimilarityMatrix build_similarity_oracle(std::span<const ClientProfile> profiles,
                                         const SimilarityFn& sim_fn) {
  const int n = static_cast<int>(profiles.size());
  if (n < 2) {
    throw InvalidInputError("build_similarity_oracle: need at least 2 profiles");
  }
  const std::size_t d = profiles[0].features.size();
  if (d == 0) {
    throw InvalidInputError("build_similarity_oracle: profiles carry no features");
  }
  for (const ClientProfile& p : profiles) {
    if (p.features.size() != d) {
      throw InvalidInputError(
          "build_similarity_oracle: feature dimension mismatch");
    }
  }
  SquareMat raw(n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double v = sim_fn(profiles[static_cast<std::size_t>(i)].features,
                              profiles[static_cast<std::size_t>(j)].features);
      raw(i, j) = v;
      raw(j, i) = v;
    }
  }
  return normalize_similarity(std::move(raw));
}

SimilarityMatrix build_similarity_cosine_updates(
    std::span<const ModelParams> local_models, const ModelParams& global_model) {
  const int n = static_cast<int>(local_models.size());
  if (n < 2) {
    throw InvalidInputError(
        "build_similarity_cosine_updates: need at least 2 models");
  }
  std::vector<std::vector<double>> updates(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const ModelParams& m = local_models[static_cast<std::size_t>(i)];
    if (!m.same_shape(global_model)) {
      throw InvalidInputError(
          "build_similarity_cosine_updates: model shape mismatch");
    }
    auto& u = updates[static_cast<std::size_t>(i)];
    u.resize(m.values.size());
    for (std::size_t p = 0; p < m.values.size(); ++p) {
      u[p] = m.values[p] - global_model.values[p];
    }
  }
  return cosine_similarity_matrix(updates);
}

NoiseSpec estimate_noise_spec(std::span<const std::vector<double>> features) {
  if (features.empty()) {
    throw InvalidInputError("estimate_noise_spec: no feature vectors");
  }
  const std::size_t d = features[0].size();
  NoiseSpec spec;
  spec.mean.assign(d, 0.0);
  spec.variance.assign(d, 0.0);
  for (const auto& x : features) {
    if (x.size() != d) {
      throw InvalidInputError("estimate_noise_spec: dimension mismatch");
    }
    for (std::size_t j = 0; j < d; ++j) {
      spec.mean[j] += x[j];
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    spec.mean[j] /= static_cast<double>(features.size());
  }
  for (const auto& x : features) {
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = x[j] - spec.mean[j];
      spec.variance[j] += dev * dev;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    spec.variance[j] /= static_cast<double>(features.size());
  }
  return spec;
}

SimilarityMatrix build_similarity_functional(
    std::span<const ModelParams> local_models, const NoiseSpec& noise,
    int noise_batch, std::uint64_t train_seed) {
  const int n = static_cast<int>(local_models.size());
  if (n < 2) {
    throw InvalidInputError(
        "build_similarity_functional: need at least 2 models");
  }
  if (noise_batch < 1) {
    throw InvalidInputError("build_similarity_functional: noise_batch < 1");
  }
  const ModelParams& first = local_models[0];
  if (noise.mean.size() != static_cast<std::size_t>(first.dim) ||
      noise.variance.size() != static_cast<std::size_t>(first.dim)) {
    throw InvalidInputError(
        "build_similarity_functional: noise spec dimension mismatch");
  }
  for (const ModelParams& m : local_models) {
    if (!m.same_shape(first)) {
      throw InvalidInputError(
          "build_similarity_functional: model shape mismatch");
    }
  }

  Rng rng(derive_seed(train_seed, tag("noise")));
  std::vector<std::vector<double>> batch(static_cast<std::size_t>(noise_batch));
  for (auto& x : batch) {
    x.resize(static_cast<std::size_t>(first.dim));
    for (int j = 0; j < first.dim; ++j) {
      x[static_cast<std::size_t>(j)] =
          rng.normal(noise.mean[static_cast<std::size_t>(j)],
                     std::sqrt(noise.variance[static_cast<std::size_t>(j)]));
    }
  }

  std::vector<std::vector<double>> embeddings(static_cast<std::size_t>(n));
  std::vector<double> scores(static_cast<std::size_t>(first.num_classes));
  for (int i = 0; i < n; ++i) {
    auto& e = embeddings[static_cast<std::size_t>(i)];
    e.assign(static_cast<std::size_t>(first.num_classes), 0.0);
    for (const auto& x : batch) {
      logits(local_models[static_cast<std::size_t>(i)], x, scores);
      for (int c = 0; c < first.num_classes; ++c) {
        e[static_cast<std::size_t>(c)] += scores[static_cast<std::size_t>(c)];
      }
    }
    for (double& v : e) {
      v /= static_cast<double>(noise_batch);
    }
  }
  return cosine_similarity_matrix(embeddings);
}

Graph3DG adjacency_from_similarity(const SimilarityMatrix& sim, double epsilon,
                                   double sigma2) {
  if (!(epsilon > 0.0)) {
    throw InvalidInputError("adjacency_from_similarity: epsilon must be > 0");
  }
  if (!(sigma2 > 0.0)) {
    throw InvalidInputError("adjacency_from_similarity: sigma2 must be > 0");
  }
  const int n = sim.V.size();
  Graph3DG graph;
  graph.epsilon = epsilon;
  graph.sigma2 = sigma2;
  graph.R = SquareMat(n, kAbsent);
  for (int i = 0; i < n; ++i) {
    graph.R(i, i) = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double v = sim.V(i, j);
      if (v >= epsilon) {
        // Clamp against underflow to keep edge weights strictly positive.
        graph.R(i, j) =
            std::max(std::exp(-v / sigma2), std::numeric_limits<double>::min());
      }
    }
  }
  return graph;
}

SquareMat shortest_paths_raw(const SquareMat& R) {
  const int n = R.size();
  SquareMat H = R;
  for (int i = 0; i < n; ++i) {
    H(i, i) = 0.0;
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      const double hik = H(i, k);
      if (hik == kAbsent) continue;
      for (int j = 0; j < n; ++j) {
        const double through = hik + H(k, j);
        if (through < H(i, j)) {
          H(i, j) = through;
        }
      }
    }
  }
  return H;
}

SquareMat floyd_warshall(const SquareMat& R, double* cap_out) {
  SquareMat H = shortest_paths_raw(R);
  const int n = H.size();
  double max_finite = 0.0;
  bool any_finite = false;
  bool any_absent = false;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (H(i, j) == kAbsent) {
        any_absent = true;
      } else {
        max_finite = std::max(max_finite, H(i, j));
        any_finite = true;
      }
    }
  }
  double cap = 0.0;
  if (any_absent) {
    cap = any_finite ? 2.0 * max_finite : 1.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (H(i, j) == kAbsent) {
          H(i, j) = cap;
        }
      }
    }
  }
  if (cap_out != nullptr) {
    *cap_out = cap;
  }
  return H;
}

void compute_distances(Graph3DG& graph) {
  graph.H = floyd_warshall(graph.R, &graph.cap);
}

Graph3DG build_3dg(const SimilarityMatrix& sim, double epsilon, double sigma2) {
  Graph3DG graph = adjacency_from_similarity(sim, epsilon, sigma2);
  compute_distances(graph);
  return graph;
}

double avg_shortest_path_score(std::span<const int> S, const SquareMat& H, int N) {
  if (N < 2) {
    throw InvalidInputError("avg_shortest_path_score: N must be >= 2");
  }
  for (int i : S) {
    if (i < 0 || i >= H.size()) {
      throw InvalidInputError("avg_shortest_path_score: client id out of range");
    }
  }
  double sum = 0.0;
  for (int i : S) {
    for (int j : S) {
      if (i != j) {
        sum += H(i, j);
      }
    }
  }
  return sum / (static_cast<double>(N) * static_cast<double>(N - 1));
}

EdgeScores edge_prediction_scores(const Graph3DG& predicted, const Graph3DG& oracle) {
  const int n = oracle.R.size();
  if (predicted.R.size() != n) {
    throw InvalidInputError("edge_prediction_scores: size mismatch");
  }
  std::int64_t tp = 0;
  std::int64_t n_pred = 0;
  std::int64_t n_orac = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const bool p = predicted.R(i, j) != kAbsent;
      const bool o = oracle.R(i, j) != kAbsent;
      n_pred += p ? 1 : 0;
      n_orac += o ? 1 : 0;
      tp += (p && o) ? 1 : 0;
    }
  }
  EdgeScores s;
  s.precision = n_pred > 0 ? static_cast<double>(tp) / static_cast<double>(n_pred) : 0.0;
  s.recall = n_orac > 0 ? static_cast<double>(tp) / static_cast<double>(n_orac) : 0.0;
  s.f1 = (s.precision + s.recall) > 0.0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw IoError("graph file: bad number '" + s + "'");
  }
  return v;
}

}  // namespace

void save_graph(const Graph3DG& graph, const std::string& path) {
  std::ofstream os(path);
  if (!os) {
    throw IoError("cannot open for writing: " + path);
  }
  os << "# 3dg-edges v1\n";
  os << "n " << graph.R.size() << " epsilon " << format_double(graph.epsilon)
     << " sigma2 " << format_double(graph.sigma2) << "\n";
  for (int i = 0; i < graph.R.size(); ++i) {
    for (int j = i + 1; j < graph.R.size(); ++j) {
      if (graph.R(i, j) != kAbsent) {
        os << i << " " << j << " " << format_double(graph.R(i, j)) << "\n";
      }
    }
  }
  if (!os) {
    throw IoError("write failed: " + path);
  }
}

Graph3DG load_graph(const std::string& path) {
  std::ifstream is(path);
  if (!is) {
    throw IoError("cannot open for reading: " + path);
  }
  std::string line;
  if (!std::getline(is, line) || line.rfind("# 3dg-edges", 0) != 0) {
    throw IoError("not a 3dg edge-list file: " + path);
  }
  if (!std::getline(is, line)) {
    throw IoError("missing header line: " + path);
  }
  std::istringstream header(line);
  std::string kw_n, kw_eps, kw_sig, eps_text, sig_text;
  int n = 0;
  if (!(header >> kw_n >> n >> kw_eps >> eps_text >> kw_sig >> sig_text) ||
      kw_n != "n" || kw_eps != "epsilon" || kw_sig != "sigma2" || n < 0) {
    throw IoError("malformed header: " + path);
  }
  Graph3DG graph;
  graph.epsilon = parse_double(eps_text);
  graph.sigma2 = parse_double(sig_text);
  graph.R = SquareMat(n, kAbsent);
  for (int i = 0; i < n; ++i) {
    graph.R(i, i) = 0.0;
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    int i = 0;
    int j = 0;
    std::string w_text;
    if (!(row >> i >> j >> w_text) || i < 0 || j < 0 || i >= n || j >= n || i == j) {
      throw IoError("malformed edge line '" + line + "': " + path);
    }
    const double w = parse_double(w_text);
    graph.R(i, j) = w;
    graph.R(j, i) = w;
  }
  compute_distances(graph);
  return graph;
}

}  // namespace fedgs

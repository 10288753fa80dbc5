#include "fedgs/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace fedgs {

namespace {

constexpr int kSyntheticClasses = 10;
constexpr int kSyntheticDim = 60;

Example draw_synthetic_example(Rng& rng, const std::vector<double>& wk,
                               const std::vector<double>& bk,
                               const std::vector<double>& vk,
                               const std::vector<double>& coord_std) {
  Example ex;
  ex.x.resize(kSyntheticDim);
  for (int j = 0; j < kSyntheticDim; ++j) {
    ex.x[j] = vk[j] + coord_std[j] * rng.normal();
  }
  int best = 0;
  double best_logit = 0.0;
  for (int c = 0; c < kSyntheticClasses; ++c) {
    double logit = bk[c];
    for (int j = 0; j < kSyntheticDim; ++j) {
      logit += wk[static_cast<std::size_t>(c) * kSyntheticDim + j] * ex.x[j];
    }
    if (c == 0 || logit > best_logit) {
      best_logit = logit;
      best = c;
    }
  }
  ex.y = best;
  return ex;
}

}  // namespace

FederatedDataset generate_synthetic(double alpha, double beta, int n_clients,
                                    std::uint64_t data_seed) {
  if (n_clients < 2) {
    throw InvalidInputError("generate_synthetic: need at least 2 clients");
  }
  if (alpha < 0.0 || beta < 0.0) {
    throw InvalidInputError("generate_synthetic: alpha and beta must be >= 0");
  }

  // Per-coordinate stds of the fixed diagonal input covariance diag(i^-1.2).
  std::vector<double> coord_std(kSyntheticDim);
  for (int j = 0; j < kSyntheticDim; ++j) {
    coord_std[j] = std::pow(static_cast<double>(j + 1), -0.6);
  }

  FederatedDataset data;
  data.num_classes = kSyntheticClasses;
  data.dim = kSyntheticDim;
  data.clients.resize(n_clients);
  data.oracle_features.resize(n_clients);

  for (int k = 0; k < n_clients; ++k) {
    Rng rng(derive_seed(data_seed, tag("synthetic"), static_cast<std::uint64_t>(k)));

    const double mu_k = rng.normal(0.0, alpha);
    std::vector<double> wk(static_cast<std::size_t>(kSyntheticClasses) * kSyntheticDim);
    for (double& w : wk) {
      w = rng.normal(mu_k, 1.0);
    }
    std::vector<double> bk(kSyntheticClasses);
    for (double& b : bk) {
      b = rng.normal(mu_k, 1.0);
    }

    const double big_b = rng.normal(0.0, beta);
    std::vector<double> vk(kSyntheticDim);
    for (double& v : vk) {
      v = rng.normal(big_b, 1.0);
    }

    const double raw_size = rng.lognormal(4.0, 2.0);
    std::int64_t n_k = static_cast<std::int64_t>(std::ceil(raw_size));
    n_k = std::max<std::int64_t>(n_k, 2);

    auto& client = data.clients[static_cast<std::size_t>(k)];
    client.train.reserve(static_cast<std::size_t>(n_k));
    for (std::int64_t i = 0; i < n_k; ++i) {
      client.train.push_back(draw_synthetic_example(rng, wk, bk, vk, coord_std));
    }

    // Held-out examples from the same local distribution, pooled globally.
    const std::int64_t n_test =
        static_cast<std::int64_t>(std::ceil(0.2 * static_cast<double>(n_k)));
    for (std::int64_t i = 0; i < n_test; ++i) {
      data.test_set.push_back(draw_synthetic_example(rng, wk, bk, vk, coord_std));
    }

    auto& feat = data.oracle_features[static_cast<std::size_t>(k)];
    feat = wk;
    feat.insert(feat.end(), bk.begin(), bk.end());
  }
  return data;
}

namespace {

struct LabelPools {
  int num_classes = 0;
  // Example indices into the source vector, grouped by label.
  std::vector<std::vector<std::size_t>> by_label;
};

LabelPools group_by_label(const std::vector<Example>& examples) {
  LabelPools pools;
  for (const Example& ex : examples) {
    if (ex.y < 0) {
      throw InvalidInputError("partition: negative class id");
    }
    pools.num_classes = std::max(pools.num_classes, ex.y + 1);
  }
  pools.by_label.resize(pools.num_classes);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    pools.by_label[static_cast<std::size_t>(examples[i].y)].push_back(i);
  }
  return pools;
}

// Largest-remainder apportionment of `total` items by nonnegative weights;
// ties go to the lower index.
std::vector<std::int64_t> apportion(const std::vector<double>& weights,
                                    std::int64_t total) {
  const std::size_t n = weights.size();
  double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<double> quota(n, 0.0);
  if (wsum > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      quota[i] = weights[i] / wsum * static_cast<double>(total);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      quota[i] = static_cast<double>(total) / static_cast<double>(n);
    }
  }
  std::vector<std::int64_t> out(n);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<std::int64_t>(std::floor(quota[i]));
    assigned += out[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return quota[a] - std::floor(quota[a]) > quota[b] - std::floor(quota[b]);
  });
  for (std::size_t r = 0; assigned < total; ++r) {
    out[order[r % n]] += 1;
    ++assigned;
  }
  return out;
}

double mixture_error(const std::vector<std::vector<double>>& p,
                     const std::vector<std::int64_t>& sizes,
                     const std::vector<double>& p_star) {
  const std::size_t classes = p_star.size();
  double total = 0.0;
  for (std::int64_t s : sizes) total += static_cast<double>(s);
  double err = 0.0;
  for (std::size_t l = 0; l < classes; ++l) {
    double mix = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      mix += static_cast<double>(sizes[k]) / total * p[k][l];
    }
    const double d = mix - p_star[l];
    err += d * d;
  }
  return err;
}

}  // namespace

FederatedDataset partition_dirichlet(const std::vector<Example>& examples,
                                     int n_clients, double dir_alpha,
                                     std::vector<std::int64_t> sizes,
                                     std::uint64_t data_seed,
                                     int max_retries) {
  if (examples.empty()) {
    throw InvalidInputError("partition_dirichlet: empty example pool");
  }
  if (n_clients < 1) {
    throw InvalidInputError("partition_dirichlet: need at least 1 client");
  }
  if (!(dir_alpha > 0.0)) {
    throw InvalidInputError("partition_dirichlet: dir_alpha must be > 0");
  }
  const std::int64_t total = static_cast<std::int64_t>(examples.size());
  if (!sizes.empty()) {
    if (static_cast<int>(sizes.size()) != n_clients) {
      throw InvalidInputError("partition_dirichlet: sizes length != n_clients");
    }
    std::int64_t sum = 0;
    for (std::int64_t s : sizes) {
      if (s < 1) {
        throw InvalidInputError("partition_dirichlet: client size < 1");
      }
      sum += s;
    }
    if (sum != total) {
      throw InvalidInputError("partition_dirichlet: sizes must sum to the pool size");
    }
  }

  Rng rng(derive_seed(data_seed, tag("dirichlet")));

  if (sizes.empty()) {
    // Mean-corrected lognormal weights, apportioned to sum to the pool size.
    const double mu = std::log(static_cast<double>(total) / n_clients) - 0.5;
    std::vector<double> w(static_cast<std::size_t>(n_clients));
    for (double& v : w) {
      v = rng.lognormal(mu, 1.0);
    }
    sizes = apportion(w, total);
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      while (sizes[k] < 1) {
        const std::size_t big = static_cast<std::size_t>(
            std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
        sizes[big] -= 1;
        sizes[k] += 1;
      }
    }
  }

  LabelPools pools = group_by_label(examples);
  std::vector<double> p_star(static_cast<std::size_t>(pools.num_classes));
  std::vector<double> concentration(p_star.size());
  for (int l = 0; l < pools.num_classes; ++l) {
    p_star[static_cast<std::size_t>(l)] =
        static_cast<double>(pools.by_label[static_cast<std::size_t>(l)].size()) /
        static_cast<double>(total);
    concentration[static_cast<std::size_t>(l)] =
        dir_alpha * p_star[static_cast<std::size_t>(l)];
  }
  // Dirichlet components with zero concentration (absent labels) are fixed
  // at zero; draw over the support only.
  std::vector<std::size_t> support;
  for (std::size_t l = 0; l < concentration.size(); ++l) {
    if (concentration[l] > 0.0) support.push_back(l);
  }
  std::vector<double> support_conc(support.size());
  for (std::size_t i = 0; i < support.size(); ++i) {
    support_conc[i] = concentration[support[i]];
  }
  auto draw_distribution = [&]() {
    std::vector<double> p(concentration.size(), 0.0);
    std::vector<double> d = rng.dirichlet(support_conc);
    for (std::size_t i = 0; i < support.size(); ++i) {
      p[support[i]] = d[i];
    }
    return p;
  };

  std::vector<std::vector<double>> p(static_cast<std::size_t>(n_clients));
  for (auto& pk : p) {
    pk = draw_distribution();
  }
  if (n_clients == 1) {
    // Degenerate case: the single client must hold the pool exactly.
    p[0] = p_star;
  }

  // Replace one client's draw at a time until the size-weighted mixture of
  // the local distributions matches the pool distribution. The tolerance is
  // relaxed periodically so coarse instances (tiny pools, few clients)
  // still terminate; genuinely stuck instances hit max_retries.
  double bar = 1e-4;
  double err = mixture_error(p, sizes, p_star);
  int retries = 0;
  while (err > bar) {
    if (retries >= max_retries) {
      throw PartitionInfeasibleError(
          "partition_dirichlet: retry budget exhausted (" +
          std::to_string(max_retries) + " redraws)");
    }
    const std::size_t k = static_cast<std::size_t>(retries % n_clients);
    std::vector<double> old = p[k];
    p[k] = draw_distribution();
    const double new_err = mixture_error(p, sizes, p_star);
    if (new_err <= err) {
      err = new_err;
    } else {
      p[k] = std::move(old);
    }
    ++retries;
    if (retries % 500 == 0) {
      bar *= 10.0;
    }
  }

  // Deal each label pool out proportionally to p_k[l] * n_k.
  FederatedDataset data;
  data.num_classes = pools.num_classes;
  data.dim = examples.empty() ? 0 : static_cast<int>(examples[0].x.size());
  data.clients.resize(static_cast<std::size_t>(n_clients));
  for (int l = 0; l < pools.num_classes; ++l) {
    auto& pool = pools.by_label[static_cast<std::size_t>(l)];
    if (pool.empty()) continue;
    rng.shuffle(pool);
    std::vector<double> w(static_cast<std::size_t>(n_clients));
    for (int k = 0; k < n_clients; ++k) {
      w[static_cast<std::size_t>(k)] =
          p[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] *
          static_cast<double>(sizes[static_cast<std::size_t>(k)]);
    }
    const std::vector<std::int64_t> share =
        apportion(w, static_cast<std::int64_t>(pool.size()));
    std::size_t cursor = 0;
    for (int k = 0; k < n_clients; ++k) {
      for (std::int64_t i = 0; i < share[static_cast<std::size_t>(k)]; ++i) {
        data.clients[static_cast<std::size_t>(k)].train.push_back(
            examples[pool[cursor++]]);
      }
    }
  }

  // No client may end up empty; take an example from the largest client.
  for (auto& client : data.clients) {
    while (client.train.empty()) {
      auto big = std::max_element(
          data.clients.begin(), data.clients.end(),
          [](const ClientData& a, const ClientData& b) {
            return a.train.size() < b.train.size();
          });
      if (big->train.size() <= 1) {
        throw PartitionInfeasibleError(
            "partition_dirichlet: fewer examples than clients");
      }
      client.train.push_back(big->train.back());
      big->train.pop_back();
    }
  }
  return data;
}

FederatedDataset partition_two_label(const std::vector<Example>& examples,
                                     int n_clients, std::uint64_t data_seed) {
  if (n_clients < 1) {
    throw InvalidInputError("partition_two_label: need at least 1 client");
  }
  const std::int64_t total = static_cast<std::int64_t>(examples.size());
  const std::int64_t n_shards = 2 * static_cast<std::int64_t>(n_clients);
  if (total == 0 || total % n_shards != 0) {
    throw InvalidInputError(
        "partition_two_label: pool size must be divisible by 2*n_clients");
  }
  const std::int64_t shard_size = total / n_shards;

  LabelPools pools = group_by_label(examples);
  for (int l = 0; l < pools.num_classes; ++l) {
    const std::int64_t count = static_cast<std::int64_t>(
        pools.by_label[static_cast<std::size_t>(l)].size());
    if (count % shard_size != 0) {
      throw InvalidInputError(
          "partition_two_label: label " + std::to_string(l) + " count " +
          std::to_string(count) + " is not divisible by the shard size " +
          std::to_string(shard_size) +
          " (shards would mix labels or leave data unassigned)");
    }
  }

  // Label-sorted order; shard i covers [i*shard_size, (i+1)*shard_size).
  std::vector<std::size_t> sorted;
  sorted.reserve(static_cast<std::size_t>(total));
  for (int l = 0; l < pools.num_classes; ++l) {
    const auto& pool = pools.by_label[static_cast<std::size_t>(l)];
    sorted.insert(sorted.end(), pool.begin(), pool.end());
  }

  std::vector<std::int64_t> shard_order(static_cast<std::size_t>(n_shards));
  std::iota(shard_order.begin(), shard_order.end(), 0);
  Rng rng(derive_seed(data_seed, tag("two_label")));
  rng.shuffle(shard_order);

  FederatedDataset data;
  data.num_classes = pools.num_classes;
  data.dim = static_cast<int>(examples[0].x.size());
  data.clients.resize(static_cast<std::size_t>(n_clients));
  for (int k = 0; k < n_clients; ++k) {
    auto& client = data.clients[static_cast<std::size_t>(k)];
    for (int s = 0; s < 2; ++s) {
      const std::int64_t shard = shard_order[static_cast<std::size_t>(2 * k + s)];
      for (std::int64_t i = shard * shard_size; i < (shard + 1) * shard_size; ++i) {
        client.train.push_back(examples[sorted[static_cast<std::size_t>(i)]]);
      }
    }
  }
  return data;
}

void split_train_validation(FederatedDataset& data, double fraction,
                            std::uint64_t data_seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw InvalidInputError("split_train_validation: fraction must be in (0,1)");
  }
  data.empty_validation_clients.clear();
  for (int k = 0; k < data.n_clients(); ++k) {
    auto& client = data.clients[static_cast<std::size_t>(k)];
    std::vector<Example> all = std::move(client.train);
    all.insert(all.end(), client.validation.begin(), client.validation.end());
    client.validation.clear();

    const std::int64_t n = static_cast<std::int64_t>(all.size());
    if (n == 0) {
      throw InvalidInputError("split_train_validation: client " +
                              std::to_string(k) + " has no examples");
    }
    if (n == 1) {
      client.train = std::move(all);
      data.empty_validation_clients.push_back(k);
      continue;
    }
    std::int64_t n_train =
        static_cast<std::int64_t>(std::floor(fraction * static_cast<double>(n)));
    n_train = std::clamp<std::int64_t>(n_train, 1, n - 1);

    std::vector<std::size_t> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(data_seed, tag("split"), static_cast<std::uint64_t>(k)));
    rng.shuffle(idx);

    client.train.clear();
    for (std::int64_t i = 0; i < n; ++i) {
      Example& ex = all[idx[static_cast<std::size_t>(i)]];
      if (i < n_train) {
        client.train.push_back(std::move(ex));
      } else {
        client.validation.push_back(std::move(ex));
      }
    }
  }
}

std::vector<Example> make_blob_examples(std::int64_t num_examples,
                                        int num_classes, int dim,
                                        std::uint64_t seed) {
  if (num_examples < 1 || num_classes < 1 || dim < 1) {
    throw InvalidInputError("make_blob_examples: sizes must be positive");
  }
  Rng rng(derive_seed(seed, tag("blobs")));
  std::vector<std::vector<double>> centers(static_cast<std::size_t>(num_classes));
  for (auto& c : centers) {
    c.resize(static_cast<std::size_t>(dim));
    for (double& v : c) {
      v = rng.normal(0.0, 2.0);
    }
  }
  std::vector<Example> out;
  out.reserve(static_cast<std::size_t>(num_examples));
  for (std::int64_t i = 0; i < num_examples; ++i) {
    Example ex;
    ex.y = static_cast<int>(i % num_classes);
    ex.x.resize(static_cast<std::size_t>(dim));
    const auto& c = centers[static_cast<std::size_t>(ex.y)];
    for (int j = 0; j < dim; ++j) {
      ex.x[static_cast<std::size_t>(j)] =
          c[static_cast<std::size_t>(j)] + rng.normal();
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<ClientProfile> make_profiles(const FederatedDataset& data) {
  std::vector<ClientProfile> profiles;
  profiles.reserve(static_cast<std::size_t>(data.n_clients()));
  for (int k = 0; k < data.n_clients(); ++k) {
    const auto& client = data.clients[static_cast<std::size_t>(k)];
    ClientProfile p;
    p.id = k;
    p.num_examples = static_cast<std::int64_t>(client.train.size());
    if (p.num_examples == 0) {
      throw InvalidInputError("make_profiles: client " + std::to_string(k) +
                              " has an empty train split");
    }
    p.label_counts.assign(static_cast<std::size_t>(data.num_classes), 0);
    for (const Example& ex : client.train) {
      p.label_counts[static_cast<std::size_t>(ex.y)] += 1;
    }
    if (!data.oracle_features.empty()) {
      p.features = data.oracle_features[static_cast<std::size_t>(k)];
    } else {
      p.features.assign(p.label_counts.begin(), p.label_counts.end());
    }
    profiles.push_back(std::move(p));
  }
  return profiles;
}

namespace {

constexpr std::uint32_t kDatasetMagic = 0x46474453;  // "FGDS"
constexpr std::uint32_t kDatasetVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) {
    throw IoError("dataset file truncated");
  }
  return v;
}

void put_examples(std::ostream& os, const std::vector<Example>& v) {
  put<std::int64_t>(os, static_cast<std::int64_t>(v.size()));
  for (const Example& ex : v) {
    put<std::int32_t>(os, ex.y);
    put<std::int64_t>(os, static_cast<std::int64_t>(ex.x.size()));
    os.write(reinterpret_cast<const char*>(ex.x.data()),
             static_cast<std::streamsize>(ex.x.size() * sizeof(double)));
  }
}

std::vector<Example> get_examples(std::istream& is) {
  const std::int64_t n = get<std::int64_t>(is);
  if (n < 0) {
    throw IoError("dataset file corrupt: negative count");
  }
  std::vector<Example> v(static_cast<std::size_t>(n));
  for (Example& ex : v) {
    ex.y = get<std::int32_t>(is);
    const std::int64_t d = get<std::int64_t>(is);
    if (d < 0) {
      throw IoError("dataset file corrupt: negative dimension");
    }
    ex.x.resize(static_cast<std::size_t>(d));
    is.read(reinterpret_cast<char*>(ex.x.data()),
            static_cast<std::streamsize>(ex.x.size() * sizeof(double)));
    if (!is) {
      throw IoError("dataset file truncated");
    }
  }
  return v;
}

}  // namespace

void save_dataset(const FederatedDataset& data, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw IoError("cannot open for writing: " + path);
  }
  put<std::uint32_t>(os, kDatasetMagic);
  put<std::uint32_t>(os, kDatasetVersion);
  put<std::int32_t>(os, data.num_classes);
  put<std::int32_t>(os, data.dim);
  put<std::int32_t>(os, data.n_clients());
  for (const ClientData& c : data.clients) {
    put_examples(os, c.train);
    put_examples(os, c.validation);
  }
  put_examples(os, data.test_set);
  put<std::int64_t>(os, static_cast<std::int64_t>(data.oracle_features.size()));
  for (const auto& f : data.oracle_features) {
    put<std::int64_t>(os, static_cast<std::int64_t>(f.size()));
    os.write(reinterpret_cast<const char*>(f.data()),
             static_cast<std::streamsize>(f.size() * sizeof(double)));
  }
  put<std::int64_t>(os,
                    static_cast<std::int64_t>(data.empty_validation_clients.size()));
  for (int k : data.empty_validation_clients) {
    put<std::int32_t>(os, k);
  }
  if (!os) {
    throw IoError("write failed: " + path);
  }
}

FederatedDataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw IoError("cannot open for reading: " + path);
  }
  if (get<std::uint32_t>(is) != kDatasetMagic) {
    throw IoError("not a dataset file: " + path);
  }
  if (get<std::uint32_t>(is) != kDatasetVersion) {
    throw IoError("unsupported dataset file version: " + path);
  }
  FederatedDataset data;
  data.num_classes = get<std::int32_t>(is);
  data.dim = get<std::int32_t>(is);
  const std::int32_t n = get<std::int32_t>(is);
  if (n < 0) {
    throw IoError("dataset file corrupt: negative client count");
  }
  data.clients.resize(static_cast<std::size_t>(n));
  for (ClientData& c : data.clients) {
    c.train = get_examples(is);
    c.validation = get_examples(is);
  }
  data.test_set = get_examples(is);
  const std::int64_t nf = get<std::int64_t>(is);
  data.oracle_features.resize(static_cast<std::size_t>(nf));
  for (auto& f : data.oracle_features) {
    const std::int64_t d = get<std::int64_t>(is);
    f.resize(static_cast<std::size_t>(d));
    is.read(reinterpret_cast<char*>(f.data()),
            static_cast<std::streamsize>(f.size() * sizeof(double)));
    if (!is) {
      throw IoError("dataset file truncated");
    }
  }
  const std::int64_t nev = get<std::int64_t>(is);
  data.empty_validation_clients.resize(static_cast<std::size_t>(nev));
  for (int& k : data.empty_validation_clients) {
    k = get<std::int32_t>(is);
  }
  return data;
}

}  // namespace fedgs

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fedgs {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidInputError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct PartitionInfeasibleError : Error {
  using Error::Error;
};

struct TooLargeError : Error {
  using Error::Error;
};

struct DivergenceError : Error {
  explicit DivergenceError(int client, const std::string& what)
      : Error(what), client_id(client) {}
  int client_id;
};

struct IoError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Seed derivation
//
// Every random draw site owns an independent generator seeded by mixing the
// experiment seed with a domain tag and integer coordinates (round, client,
// ...). Results are therefore invariant to evaluation order and worker count.
// ---------------------------------------------------------------------------

constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a, used to turn domain-tag strings into mixable integers.
constexpr std::uint64_t tag(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t base) { return mix64(base); }

template <class... Rest>
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t part,
                                    Rest... rest) {
  return derive_seed(mix64(base ^ mix64(part)), rest...);
}

// ---------------------------------------------------------------------------
// Rng
//
// mt19937_64 is fully specified by the standard; the distribution transforms
// here are written out explicitly because the std::*_distribution sequences
// are implementation-defined and would break the reproducibility contract.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1).
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller, cosine branch only (one value per call, no cached state).
  double normal(double mean = 0.0, double stddev = 1.0) {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double two_pi = 6.283185307179586476925286766559;
    return mean + stddev * r * std::cos(two_pi * u2);
  }

  // exp(N(mu, sigma^2)); sigma is the standard deviation of the underlying
  // normal.
  double lognormal(double mu, double sigma) {
    return std::exp(normal(mu, sigma));
  }

  double gamma(double shape);

  std::vector<double> dirichlet(std::span<const double> alpha);

  // Uniform integer in [0, n), n >= 1.
  std::uint64_t below(std::uint64_t n) {
    // Multiply-shift; bias is O(n / 2^64), negligible for simulation use.
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Fisher-Yates with an explicit index transform, for cross-platform
  // determinism (std::shuffle's draw sequence is unspecified).
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

// ---------------------------------------------------------------------------
// Dense square matrix of doubles (row-major). Small N; no BLAS needed.
// ---------------------------------------------------------------------------

class SquareMat {
 public:
  SquareMat() = default;
  explicit SquareMat(int n, double fill = 0.0)
      : n_(n), a_(static_cast<std::size_t>(n) * n, fill) {}

  int size() const { return n_; }
  double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * n_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }
  std::span<const double> data() const { return a_; }
  std::span<double> data() { return a_; }

  bool operator==(const SquareMat&) const = default;

 private:
  int n_ = 0;
  std::vector<double> a_;
};

}  // namespace fedgs

#include "fedgs/domain.hpp"

namespace fedgs {

double counts_variance(std::span<const std::int64_t> counts) {
  const std::size_t n = counts.size();
  if (n < 2) {
    throw InvalidInputError("counts_variance: need at least 2 clients");
  }
  double mean = 0.0;
  for (std::int64_t v : counts) {
    mean += static_cast<double>(v);
  }
  mean /= static_cast<double>(n);
  double acc = 0.0;
  for (std::int64_t v : counts) {
    const double d = static_cast<double>(v) - mean;
    acc += d * d;
  }
  return acc / static_cast<double>(n - 1);
}

std::vector<double> z_vector(std::span<const std::int64_t> counts, int M) {
  const std::size_t n = counts.size();
  if (n == 0) {
    throw InvalidInputError("z_vector: empty counts");
  }
  if (M < 1) {
    throw InvalidInputError("z_vector: M must be at least 1");
  }
  double mean = 0.0;
  for (std::int64_t v : counts) {
    mean += static_cast<double>(v);
  }
  mean /= static_cast<double>(n);
  const double target = static_cast<double>(M) / static_cast<double>(n);
  std::vector<double> z(n);
  for (std::size_t k = 0; k < n; ++k) {
    z[k] = 2.0 * (static_cast<double>(counts[k]) - mean - target) + 1.0;
  }
  return z;
}

}  // namespace fedgs

#include "fedgs/common.hpp"

#include <cmath>

namespace fedgs {

// Marsaglia-Tsang squeeze method; shape < 1 handled by boosting.
double Rng::gamma(double shape) {
  if (!(shape > 0.0)) {
    throw InvalidInputError("gamma: shape must be positive");
  }
  if (shape < 1.0) {
    const double u = uniform01();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01();
    if (u < 1.0 - 0.0331 * x * x * x * x) {
      return d * v;
    }
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return d * v;
    }
  }
}

std::vector<double> Rng::dirichlet(std::span<const double> alpha) {
  if (alpha.empty()) {
    throw InvalidInputError("dirichlet: empty concentration vector");
  }
  std::vector<double> out(alpha.size());
  // With very small concentrations each gamma draw can underflow to zero;
  // redraw the whole vector until at least one component is positive.
  for (;;) {
    double sum = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      out[i] = gamma(alpha[i]);
      sum += out[i];
    }
    if (sum > 0.0 && std::isfinite(sum)) {
      for (double& x : out) x /= sum;
      return out;
    }
  }
}

}  // namespace fedgs

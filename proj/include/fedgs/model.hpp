#pragma once

#include <span>
#include <vector>

#include "fedgs/dataset.hpp"
#include "fedgs/domain.hpp"

namespace fedgs {

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  std::int64_t count = 0;
};

// Pre-softmax scores W x + b; out must have num_classes entries.
void logits(const ModelParams& params, std::span<const double> x,
            std::span<double> out);

// Cross-entropy of a single example (numerically stable log-softmax).
double example_loss(const ModelParams& params, const Example& ex);

// Adds the cross-entropy gradient of one example into grad (same layout as
// ModelParams::values). Returns the example's loss so callers can detect
// divergence without a second pass.
double add_gradient(const ModelParams& params, const Example& ex,
                    std::span<double> grad);

// Mean cross-entropy and top-1 accuracy (argmax ties -> lowest class id).
EvalResult evaluate(const ModelParams& params, std::span<const Example> examples);

}  // namespace fedgs

#include "fedgs/model.hpp"

#include <algorithm>
#include <cmath>

namespace fedgs {

void logits(const ModelParams& params, std::span<const double> x,
            std::span<double> out) {
  if (static_cast<int>(x.size()) != params.dim ||
      static_cast<int>(out.size()) != params.num_classes) {
    throw InvalidInputError("logits: dimension mismatch");
  }
  for (int c = 0; c < params.num_classes; ++c) {
    double acc = params.b(c);
    const double* row = &params.values[static_cast<std::size_t>(c) * params.dim];
    for (int j = 0; j < params.dim; ++j) {
      acc += row[j] * x[static_cast<std::size_t>(j)];
    }
    out[static_cast<std::size_t>(c)] = acc;
  }
}

namespace {

// Fills probs with softmax(logits) and returns the cross-entropy at label y.
double softmax_and_loss(std::span<double> scores, int y) {
  double max_score = scores[0];
  for (double s : scores) {
    max_score = std::max(max_score, s);
  }
  double sum = 0.0;
  for (double& s : scores) {
    s = std::exp(s - max_score);
    sum += s;
  }
  const double log_sum = std::log(sum);
  const double loss = log_sum - std::log(scores[static_cast<std::size_t>(y)]);
  for (double& s : scores) {
    s /= sum;
  }
  return loss;
}

}  // namespace

double example_loss(const ModelParams& params, const Example& ex) {
  if (ex.y < 0 || ex.y >= params.num_classes) {
    throw InvalidInputError("example_loss: class id out of range");
  }
  std::vector<double> scores(static_cast<std::size_t>(params.num_classes));
  logits(params, ex.x, scores);
  return softmax_and_loss(scores, ex.y);
}

double add_gradient(const ModelParams& params, const Example& ex,
                    std::span<double> grad) {
  if (grad.size() != params.values.size()) {
    throw InvalidInputError("add_gradient: gradient buffer size mismatch");
  }
  if (ex.y < 0 || ex.y >= params.num_classes) {
    throw InvalidInputError("add_gradient: class id out of range");
  }
  std::vector<double> probs(static_cast<std::size_t>(params.num_classes));
  logits(params, ex.x, probs);
  const double loss = softmax_and_loss(probs, ex.y);
  for (int c = 0; c < params.num_classes; ++c) {
    const double delta =
        probs[static_cast<std::size_t>(c)] - (c == ex.y ? 1.0 : 0.0);
    double* row = &grad[static_cast<std::size_t>(c) * params.dim];
    for (int j = 0; j < params.dim; ++j) {
      row[j] += delta * ex.x[static_cast<std::size_t>(j)];
    }
    grad[static_cast<std::size_t>(params.num_classes) * params.dim +
         static_cast<std::size_t>(c)] += delta;
  }
  return loss;
}

EvalResult evaluate(const ModelParams& params, std::span<const Example> examples) {
  EvalResult res;
  res.count = static_cast<std::int64_t>(examples.size());
  if (examples.empty()) {
    return res;
  }
  std::vector<double> scores(static_cast<std::size_t>(params.num_classes));
  double loss_sum = 0.0;
  std::int64_t correct = 0;
  for (const Example& ex : examples) {
    if (ex.y < 0 || ex.y >= params.num_classes) {
      throw InvalidInputError("evaluate: class id out of range");
    }
    logits(params, ex.x, scores);
    int best = 0;
    for (int c = 1; c < params.num_classes; ++c) {
      if (scores[static_cast<std::size_t>(c)] >
          scores[static_cast<std::size_t>(best)]) {
        best = c;
      }
    }
    if (best == ex.y) {
      ++correct;
    }
    loss_sum += softmax_and_loss(scores, ex.y);
  }
  res.loss = loss_sum / static_cast<double>(res.count);
  res.accuracy = static_cast<double>(correct) / static_cast<double>(res.count);
  return res;
}

}  // namespace fedgs

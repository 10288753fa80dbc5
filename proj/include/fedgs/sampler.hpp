#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedgs/domain.hpp"

namespace fedgs {

struct SolverBudget {
  // Wall-clock limit for the local search; <= 0 disables the limit.
  double max_seconds = 1.0;
  // Accepted-swap limit, for deterministic tests; -1 unlimited, 0 = greedy only.
  std::int64_t max_swaps = -1;
};

// One round's selection instance. H and z are indexed by *position* in
// `available` (which is ascending by global client id).
struct SelectionProblem {
  std::vector<int> available;
  SquareMat H;
  std::vector<double> z;
  double alpha = 1.0;
  int N = 0;
  int M = 1;
  SolverBudget budget;

  int target_size() const {
    const int n = static_cast<int>(available.size());
    return M < n ? M : n;
  }
};

struct SelectionResult {
  std::vector<int> selected;  // ascending global ids, no duplicates
  // Data-size-proportional sampling draws with multiplicity (ascending);
  // equal to `selected` for every other strategy.
  std::vector<int> draws;
  double objective = 0.0;
  std::string solver;
  std::int64_t iterations = 0;  // accepted local-search swaps
  double elapsed_seconds = 0.0;
};

// Extracts the per-round subproblem (distance submatrix and penalty vector
// restricted to the available clients) from full-experiment state.
SelectionProblem make_selection_problem(std::span<const int> available,
                                        const SquareMat& H_full,
                                        std::span<const double> z_full,
                                        double alpha, int N, int M,
                                        SolverBudget budget);

// (alpha/N) * s^T H s - sum_k z_k s_k over a binary vector s (both ordered
// pairs of the symmetric H count).
double fedgs_objective(std::span<const int> s, const SquareMat& H,
                       std::span<const double> z, double alpha, int N);

// Brute-force enumeration of all size-m subsets; ties keep the
// lexicographically smallest id set. Guarded: C(|A|, m) must stay <= 1e6.
SelectionResult select_fedgs_exact(const SelectionProblem& problem);

// Greedy construction (largest objective increase, ties lowest id) followed
// by first-improvement 1-swap local search in id order, restricted by the
// budget.
SelectionResult select_fedgs_heuristic(const SelectionProblem& problem);

SelectionResult select_uniform(std::span<const int> available, int M,
                               std::uint64_t round_seed);

// m i.i.d. draws with probability proportional to local data size; the draw
// list keeps multiplicity for aggregation, `selected` collapses duplicates.
SelectionResult select_md(std::span<const int> available,
                          std::span<const ClientProfile> profiles, int M,
                          std::uint64_t round_seed);

// Top-m available clients by current local loss; ties lowest id.
// local_losses is indexed by global client id.
SelectionResult select_power_of_choice(std::span<const int> available, int M,
                                       std::span<const double> local_losses);

}  // namespace fedgs

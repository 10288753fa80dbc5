#include "fedgs/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace fedgs {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_problem(const SelectionProblem& p) {
  const int n = static_cast<int>(p.available.size());
  if (n == 0) {
    throw InvalidInputError("selection: empty available set");
  }
  if (p.H.size() != n || static_cast<int>(p.z.size()) != n) {
    throw InvalidInputError("selection: H/z size mismatch with available set");
  }
  if (p.N < 1 || p.M < 1) {
    throw InvalidInputError("selection: N and M must be >= 1");
  }
  if (p.alpha < 0.0) {
    throw InvalidInputError("selection: alpha must be >= 0");
  }
  if (!std::is_sorted(p.available.begin(), p.available.end())) {
    throw InvalidInputError("selection: available ids must be ascending");
  }
}

// Objective over a subset given as positions into the problem's arrays.
double objective_of(std::span<const int> positions, const SelectionProblem& p) {
  double pairs = 0.0;
  double penalty = 0.0;
  for (std::size_t a = 0; a < positions.size(); ++a) {
    penalty += p.z[static_cast<std::size_t>(positions[a])];
    for (std::size_t b = a + 1; b < positions.size(); ++b) {
      pairs += p.H(positions[a], positions[b]);
    }
  }
  // Both ordered pairs of the symmetric matrix contribute.
  return p.alpha / static_cast<double>(p.N) * 2.0 * pairs - penalty;
}

SelectionResult finish(const SelectionProblem& p, std::vector<int> positions,
                       std::string solver, std::int64_t iterations,
                       Clock::time_point start) {
  std::sort(positions.begin(), positions.end());
  SelectionResult res;
  res.objective = objective_of(positions, p);
  res.selected.reserve(positions.size());
  for (int pos : positions) {
    res.selected.push_back(p.available[static_cast<std::size_t>(pos)]);
  }
  res.draws = res.selected;
  res.solver = std::move(solver);
  res.iterations = iterations;
  res.elapsed_seconds = seconds_since(start);
  return res;
}

}  // namespace

SelectionProblem make_selection_problem(std::span<const int> available,
                                        const SquareMat& H_full,
                                        std::span<const double> z_full,
                                        double alpha, int N, int M,
                                        SolverBudget budget) {
  if (static_cast<int>(z_full.size()) != H_full.size()) {
    throw InvalidInputError("make_selection_problem: z length != distance size");
  }
  SelectionProblem p;
  p.available.assign(available.begin(), available.end());
  std::sort(p.available.begin(), p.available.end());
  const int n = static_cast<int>(p.available.size());
  for (int a = 0; a < n; ++a) {
    const int id = p.available[static_cast<std::size_t>(a)];
    if (id < 0 || id >= H_full.size()) {
      throw InvalidInputError("make_selection_problem: client id out of range");
    }
    if (a > 0 && id == p.available[static_cast<std::size_t>(a - 1)]) {
      throw InvalidInputError("make_selection_problem: duplicate client id");
    }
  }
  p.H = SquareMat(n, 0.0);
  p.z.resize(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    p.z[static_cast<std::size_t>(a)] =
        z_full[static_cast<std::size_t>(p.available[static_cast<std::size_t>(a)])];
    for (int b = 0; b < n; ++b) {
      p.H(a, b) = H_full(p.available[static_cast<std::size_t>(a)],
                         p.available[static_cast<std::size_t>(b)]);
    }
  }
  p.alpha = alpha;
  p.N = N;
  p.M = M;
  p.budget = budget;
  return p;
}

double fedgs_objective(std::span<const int> s, const SquareMat& H,
                       std::span<const double> z, double alpha, int N) {
  const int n = H.size();
  if (static_cast<int>(s.size()) != n || static_cast<int>(z.size()) != n) {
    throw InvalidInputError("fedgs_objective: size mismatch");
  }
  if (N < 1) {
    throw InvalidInputError("fedgs_objective: N must be >= 1");
  }
  double quad = 0.0;
  double penalty = 0.0;
  for (int i = 0; i < n; ++i) {
    if (s[static_cast<std::size_t>(i)] == 0) continue;
    penalty += z[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) {
      if (j != i && s[static_cast<std::size_t>(j)] != 0) {
        quad += H(i, j);
      }
    }
  }
  return alpha / static_cast<double>(N) * quad - penalty;
}

SelectionResult select_fedgs_exact(const SelectionProblem& p) {
  const auto start = Clock::now();
  check_problem(p);
  const int n = static_cast<int>(p.available.size());
  const int m = p.target_size();

  // C(n, m) with early cutoff at the enumeration guard.
  constexpr double kGuard = 1e6;
  double combos = 1.0;
  for (int i = 0; i < m; ++i) {
    combos *= static_cast<double>(n - i) / static_cast<double>(i + 1);
    if (combos > kGuard) {
      throw TooLargeError("select_fedgs_exact: C(|A|,m) exceeds 1e6");
    }
  }

  std::vector<int> idx(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    idx[static_cast<std::size_t>(i)] = i;
  }
  std::vector<int> best = idx;
  // Lexicographic enumeration + strict improvement keeps the smallest id set
  // among ties.
  double best_obj = objective_of(idx, p);
  std::int64_t evaluated = 1;
  for (;;) {
    int pos = m - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - m + pos) {
      --pos;
    }
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
    for (int i = pos + 1; i < m; ++i) {
      idx[static_cast<std::size_t>(i)] = idx[static_cast<std::size_t>(i - 1)] + 1;
    }
    const double obj = objective_of(idx, p);
    ++evaluated;
    if (obj > best_obj) {
      best_obj = obj;
      best = idx;
    }
  }
  return finish(p, std::move(best), "exact", evaluated, start);
}

SelectionResult select_fedgs_heuristic(const SelectionProblem& p) {
  const auto start = Clock::now();
  check_problem(p);
  const int n = static_cast<int>(p.available.size());
  const int m = p.target_size();

  std::vector<char> in_set(static_cast<std::size_t>(n), 0);
  std::vector<int> sel;
  sel.reserve(static_cast<std::size_t>(m));

  // Greedy: add the candidate with the largest exact objective increase.
  double obj = 0.0;
  for (int step = 0; step < m; ++step) {
    int best = -1;
    double best_obj = 0.0;
    for (int c = 0; c < n; ++c) {
      if (in_set[static_cast<std::size_t>(c)]) continue;
      sel.push_back(c);
      const double cand = objective_of(sel, p);
      sel.pop_back();
      if (best < 0 || cand > best_obj) {
        best = c;
        best_obj = cand;
      }
    }
    sel.push_back(best);
    in_set[static_cast<std::size_t>(best)] = 1;
    obj = best_obj;
  }
  std::sort(sel.begin(), sel.end());

  // First-improvement 1-swap local search; every accepted swap restarts the
  // id-ordered scan.
  std::int64_t swaps = 0;
  const SolverBudget& budget = p.budget;
  bool out_of_budget = (budget.max_swaps == 0);
  while (!out_of_budget && m < n) {
    bool accepted = false;
    for (std::size_t si = 0; si < sel.size() && !accepted; ++si) {
      for (int c = 0; c < n && !accepted; ++c) {
        if (in_set[static_cast<std::size_t>(c)]) continue;
        const int out = sel[si];
        sel[si] = c;
        const double cand = objective_of(sel, p);
        if (cand > obj) {
          obj = cand;
          in_set[static_cast<std::size_t>(out)] = 0;
          in_set[static_cast<std::size_t>(c)] = 1;
          std::sort(sel.begin(), sel.end());
          ++swaps;
          accepted = true;
          if (budget.max_swaps >= 0 && swaps >= budget.max_swaps) {
            out_of_budget = true;
          }
          if (budget.max_seconds > 0.0 &&
              seconds_since(start) >= budget.max_seconds) {
            out_of_budget = true;
          }
        } else {
          sel[si] = out;
        }
      }
    }
    if (!accepted) break;  // 1-swap local optimum
  }
  return finish(p, std::move(sel), "heuristic", swaps, start);
}

SelectionResult select_uniform(std::span<const int> available, int M,
                               std::uint64_t round_seed) {
  const auto start = Clock::now();
  if (available.empty() || M < 1) {
    throw InvalidInputError("select_uniform: empty set or M < 1");
  }
  std::vector<int> pool(available.begin(), available.end());
  std::sort(pool.begin(), pool.end());
  const std::size_t m = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(M));
  Rng rng(round_seed);
  rng.shuffle(pool);
  pool.resize(m);
  std::sort(pool.begin(), pool.end());

  SelectionResult res;
  res.selected = pool;
  res.draws = std::move(pool);
  res.solver = "uniform";
  res.elapsed_seconds = seconds_since(start);
  return res;
}

SelectionResult select_md(std::span<const int> available,
                          std::span<const ClientProfile> profiles, int M,
                          std::uint64_t round_seed) {
  const auto start = Clock::now();
  if (available.empty() || M < 1) {
    throw InvalidInputError("select_md: empty set or M < 1");
  }
  std::vector<int> pool(available.begin(), available.end());
  std::sort(pool.begin(), pool.end());
  std::vector<double> cumulative;
  cumulative.reserve(pool.size());
  double total = 0.0;
  for (int id : pool) {
    if (id < 0 || id >= static_cast<int>(profiles.size()) ||
        profiles[static_cast<std::size_t>(id)].id != id) {
      throw InvalidInputError("select_md: profiles must be indexed by id");
    }
    total += static_cast<double>(profiles[static_cast<std::size_t>(id)].num_examples);
    cumulative.push_back(total);
  }
  if (!(total > 0.0)) {
    throw InvalidInputError("select_md: nonpositive total data size");
  }

  const int m = std::min<int>(static_cast<int>(pool.size()), M);
  Rng rng(round_seed);
  std::vector<int> draws;
  draws.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const double u = rng.uniform01() * total;
    const std::size_t pick = static_cast<std::size_t>(
        std::lower_bound(cumulative.begin(), cumulative.end(), u) -
        cumulative.begin());
    draws.push_back(pool[std::min(pick, pool.size() - 1)]);
  }
  std::sort(draws.begin(), draws.end());

  SelectionResult res;
  res.draws = draws;
  draws.erase(std::unique(draws.begin(), draws.end()), draws.end());
  res.selected = std::move(draws);
  res.solver = "md";
  res.elapsed_seconds = seconds_since(start);
  return res;
}

SelectionResult select_power_of_choice(std::span<const int> available, int M,
                                       std::span<const double> local_losses) {
  const auto start = Clock::now();
  if (available.empty() || M < 1) {
    throw InvalidInputError("select_power_of_choice: empty set or M < 1");
  }
  std::vector<int> pool(available.begin(), available.end());
  for (int id : pool) {
    if (id < 0 || id >= static_cast<int>(local_losses.size())) {
      throw InvalidInputError("select_power_of_choice: loss missing for client " +
                              std::to_string(id));
    }
  }
  std::stable_sort(pool.begin(), pool.end(), [&](int a, int b) {
    const double la = local_losses[static_cast<std::size_t>(a)];
    const double lb = local_losses[static_cast<std::size_t>(b)];
    if (la != lb) return la > lb;
    return a < b;
  });
  pool.resize(std::min<std::size_t>(pool.size(), static_cast<std::size_t>(M)));
  std::sort(pool.begin(), pool.end());

  SelectionResult res;
  res.selected = pool;
  res.draws = std::move(pool);
  res.solver = "poc";
  res.elapsed_seconds = seconds_since(start);
  return res;
}

}  // namespace fedgs

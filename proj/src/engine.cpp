#include "fedgs/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <numeric>
#include <thread>
#include <utility>

#include "fedgs/common.hpp"
#include "fedgs/sspp.hpp"

namespace fedgs {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// Runs fn(i) for i in [0, count) on up to `workers` threads. Tasks write
// only to their own index, so the result is independent of scheduling; the
// first failure by lowest index is rethrown on the calling thread.
void parallel_for(int workers, std::size_t count,
                  const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  std::size_t threads = workers < 1 ? 1 : static_cast<std::size_t>(workers);
  threads = std::min(threads, count);
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

// Local models after one round of training from the zero model; used to
// build update-based dependency graphs before the experiment starts. The
// pass is probe-only: nothing is aggregated.
std::vector<ModelParams> warmup_local_models(const FederatedDataset& data,
                                             const ExperimentConfig& config) {
  const ModelParams theta0 = ModelParams::zeros(data.num_classes, data.dim);
  std::vector<ModelParams> out(data.clients.size(), theta0);
  parallel_for(config.workers, out.size(), [&](std::size_t k) {
    out[k] = local_sgd(theta0, data.clients[k].train, config.trainer,
                       config.trainer.learning_rate, config.seeds.train,
                       /*t=*/-1, static_cast<int>(k));
  });
  return out;
}

std::vector<std::vector<double>> pooled_validation_features(
    const FederatedDataset& data) {
  std::vector<std::vector<double>> xs;
  for (const auto& client : data.clients)
    for (const auto& ex : client.validation) xs.push_back(ex.x);
  return xs;
}

// Mean cross-entropy over the union of all train splits (clients weighted
// by example count). Per-client evaluations run in parallel; the weighted
// sum is accumulated in ascending id order.
double pooled_train_loss(const ModelParams& theta, const FederatedDataset& data,
                         int workers) {
  const std::size_t n = data.clients.size();
  std::vector<double> loss(n, 0.0);
  std::vector<double> count(n, 0.0);
  parallel_for(workers, n, [&](std::size_t k) {
    const EvalResult ev = evaluate(theta, data.clients[k].train);
    loss[k] = ev.loss;
    count[k] = static_cast<double>(ev.count);
  });
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    num += loss[k] * count[k];
    den += count[k];
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace

ModelParams local_sgd(const ModelParams& theta_global,
                      std::span<const Example> train, const TrainerConfig& config,
                      double eta_t, std::uint64_t train_seed, std::int64_t t,
                      int client_id) {
  if (train.empty())
    throw InvalidInputError("local_sgd: client " + std::to_string(client_id) +
                            " has no training examples");
  ModelParams theta = theta_global;
  if (config.steps <= 0 || eta_t == 0.0) return theta;

  Rng rng(derive_seed(train_seed, tag("sgd"), static_cast<std::uint64_t>(t),
                      static_cast<std::uint64_t>(client_id)));
  const std::size_t n = train.size();
  const std::size_t batch =
      std::min(static_cast<std::size_t>(config.batch_size), n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  std::size_t pos = 0;

  std::vector<double> grad(theta.values.size());
  for (int step = 0; step < config.steps; ++step) {
    if (pos + batch > n) {
      rng.shuffle(order);
      pos = 0;
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss_sum = 0.0;
    for (std::size_t i = pos; i < pos + batch; ++i)
      loss_sum += add_gradient(theta, train[order[i]], grad);
    pos += batch;
    if (!std::isfinite(loss_sum))
      throw DivergenceError(client_id,
                            "training diverged: non-finite loss on client " +
                                std::to_string(client_id) + " at round " +
                                std::to_string(t));
    const double inv_batch = 1.0 / static_cast<double>(batch);
    for (std::size_t p = 0; p < grad.size(); ++p) {
      double g = grad[p] * inv_batch;
      if (config.prox_mu > 0.0)
        g += config.prox_mu * (theta.values[p] - theta_global.values[p]);
      theta.values[p] -= eta_t * g;
    }
  }
  for (double v : theta.values)
    if (!std::isfinite(v))
      throw DivergenceError(client_id,
                            "training diverged: non-finite parameter on client " +
                                std::to_string(client_id) + " at round " +
                                std::to_string(t));
  return theta;
}

ModelParams aggregate_fedgs(std::span<const ModelParams> models,
                            std::span<const std::int64_t> sizes) {
  if (models.empty()) throw InvalidInputError("aggregate_fedgs: no models");
  if (models.size() != sizes.size())
    throw InvalidInputError("aggregate_fedgs: models/sizes length mismatch");
  double total = 0.0;
  for (std::int64_t s : sizes) {
    if (s <= 0)
      throw InvalidInputError("aggregate_fedgs: non-positive client size");
    total += static_cast<double>(s);
  }
  ModelParams out = ModelParams::zeros(models[0].num_classes, models[0].dim);
  for (std::size_t k = 0; k < models.size(); ++k) {
    if (!models[k].same_shape(out))
      throw InvalidInputError("aggregate_fedgs: model shape mismatch");
    const double w = static_cast<double>(sizes[k]) / total;
    for (std::size_t p = 0; p < out.values.size(); ++p)
      out.values[p] += w * models[k].values[p];
  }
  return out;
}

ModelParams aggregate_uniform(std::span<const ModelParams> models) {
  if (models.empty()) throw InvalidInputError("aggregate_uniform: no models");
  ModelParams out = ModelParams::zeros(models[0].num_classes, models[0].dim);
  const double w = 1.0 / static_cast<double>(models.size());
  for (const auto& m : models) {
    if (!m.same_shape(out))
      throw InvalidInputError("aggregate_uniform: model shape mismatch");
    for (std::size_t p = 0; p < out.values.size(); ++p)
      out.values[p] += w * m.values[p];
  }
  return out;
}

ExperimentSetup prepare_experiment(const ExperimentConfig& config) {
  ExperimentSetup setup;
  setup.config = config;

  const DatasetConfig& ds = config.dataset;
  if (ds.scheme == "synthetic") {
    setup.data = generate_synthetic(ds.alpha, ds.beta, ds.n_clients,
                                    config.seeds.data);
  } else if (ds.scheme == "dirichlet") {
    const auto pool =
        make_blob_examples(ds.source_examples, ds.source_classes, ds.source_dim,
                           derive_seed(config.seeds.data, tag("pool")));
    setup.data = partition_dirichlet(pool, ds.n_clients, ds.dirichlet_alpha, {},
                                     config.seeds.data);
  } else if (ds.scheme == "two_label") {
    const auto pool =
        make_blob_examples(ds.source_examples, ds.source_classes, ds.source_dim,
                           derive_seed(config.seeds.data, tag("pool")));
    setup.data = partition_two_label(pool, ds.n_clients, config.seeds.data);
  } else {
    throw ConfigError("dataset.scheme: unknown scheme '" + ds.scheme + "'");
  }
  split_train_validation(setup.data, ds.train_fraction, config.seeds.data);
  setup.profiles = make_profiles(setup.data);

  setup.eval_on_global_test = !setup.data.test_set.empty();
  if (setup.eval_on_global_test) {
    setup.eval_examples = setup.data.test_set;
  } else {
    for (const auto& client : setup.data.clients)
      for (const auto& ex : client.validation) setup.eval_examples.push_back(ex);
    if (setup.eval_examples.empty())
      throw InvalidInputError(
          "no held-out examples to evaluate on: every client kept a single "
          "example");
  }

  const AvailabilityConfig& av = config.availability;
  setup.availability = make_availability_model(
      parse_availability_mode(av.mode), av.beta, av.period, av.num_y,
      setup.profiles, config.seeds.availability);

  const GraphConfig& gc = config.graph;
  if (gc.method == "oracle") {
    setup.similarity = build_similarity_oracle(setup.profiles);
  } else if (gc.method == "sspp") {
    setup.similarity = build_similarity_via_sspp(
        setup.profiles, derive_seed(config.seeds.train, tag("sspp")));
  } else if (gc.method == "cosine_updates") {
    const ModelParams theta0 =
        ModelParams::zeros(setup.data.num_classes, setup.data.dim);
    setup.similarity = build_similarity_cosine_updates(
        warmup_local_models(setup.data, config), theta0);
  } else if (gc.method == "functional") {
    const auto xs = pooled_validation_features(setup.data);
    if (xs.empty())
      throw InvalidInputError(
          "graph.method functional needs validation examples to estimate the "
          "probe distribution");
    const NoiseSpec noise = estimate_noise_spec(xs);
    setup.similarity = build_similarity_functional(
        warmup_local_models(setup.data, config), noise, gc.noise_batch,
        config.seeds.train);
  } else {
    throw ConfigError("graph.method: unknown method '" + gc.method + "'");
  }
  setup.graph = build_3dg(setup.similarity, gc.epsilon, gc.sigma2);
  setup.max_selected = config.resolved_max_selected();
  return setup;
}

ExperimentResult run_experiment(const ExperimentSetup& setup) {
  const ExperimentConfig& config = setup.config;
  const int n_clients = static_cast<int>(setup.data.n_clients());
  const int M = setup.max_selected;
  const SamplerConfig& sampler_cfg = config.sampler;
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

  ExperimentResult result;
  ExperimentSummary& summary = result.summary;
  summary.eval_set =
      setup.eval_on_global_test ? "global_test" : "pooled_validation";

  ModelParams theta = ModelParams::zeros(setup.data.num_classes, setup.data.dim);
  SamplerState state(static_cast<std::size_t>(n_clients));
  double eta = config.trainer.learning_rate;

  const EvalResult initial = evaluate(theta, setup.eval_examples);
  summary.initial_test_loss = initial.loss;
  summary.initial_test_accuracy = initial.accuracy;

  bool have_min = false;
  result.records.reserve(static_cast<std::size_t>(config.rounds));

  for (std::int64_t t = 0; t < config.rounds; ++t) {
    RoundRecord rec;
    rec.t = t;
    const double select_start = now_seconds();
    rec.available = sample_active_set(setup.availability, setup.profiles, t,
                                      config.seeds.availability);

    if (rec.available.empty()) {
      // Nobody to train on: log the round against the unchanged model.
      rec.skipped = true;
      rec.objective = kNaN;
      rec.g_score = 0.0;
      rec.var_v = n_clients >= 2 ? counts_variance(state.counts) : 0.0;
      const double eval_start = now_seconds();
      rec.train_loss = pooled_train_loss(theta, setup.data, config.workers);
      const EvalResult ev = evaluate(theta, setup.eval_examples);
      rec.test_loss = ev.loss;
      rec.test_accuracy = ev.accuracy;
      rec.elapsed_eval = now_seconds() - eval_start;
      if (!have_min || rec.test_loss < summary.min_test_loss) {
        summary.min_test_loss = rec.test_loss;
        summary.min_test_loss_round = t;
        have_min = true;
      }
      ++summary.skipped_rounds;
      result.records.push_back(std::move(rec));
      eta *= config.trainer.decay;
      continue;
    }

    SelectionResult sel;
    const std::uint64_t round_seed = derive_seed(
        config.seeds.availability, tag("sampler"), static_cast<std::uint64_t>(t));
    bool has_objective = false;
    if (sampler_cfg.name == "fedgs") {
      const std::vector<double> z = z_vector(state.counts, M);
      const SolverBudget budget{sampler_cfg.budget_seconds,
                                sampler_cfg.budget_swaps};
      const SelectionProblem problem =
          make_selection_problem(rec.available, setup.graph.H, z,
                                 sampler_cfg.alpha, n_clients, M, budget);
      sel = sampler_cfg.exact ? select_fedgs_exact(problem)
                              : select_fedgs_heuristic(problem);
      has_objective = true;
    } else if (sampler_cfg.name == "uniform") {
      sel = select_uniform(rec.available, M, round_seed);
    } else if (sampler_cfg.name == "md") {
      sel = select_md(rec.available, setup.profiles, M, round_seed);
    } else if (sampler_cfg.name == "poc") {
      std::vector<double> losses(static_cast<std::size_t>(n_clients), 0.0);
      parallel_for(config.workers, rec.available.size(), [&](std::size_t i) {
        const int id = rec.available[i];
        std::span<const Example> probe =
            setup.data.clients[static_cast<std::size_t>(id)].train;
        if (sampler_cfg.poc_eval_cap > 0 &&
            probe.size() > static_cast<std::size_t>(sampler_cfg.poc_eval_cap))
          probe = probe.subspan(0, static_cast<std::size_t>(sampler_cfg.poc_eval_cap));
        losses[static_cast<std::size_t>(id)] = evaluate(theta, probe).loss;
      });
      sel = select_power_of_choice(rec.available, M, losses);
    } else {
      throw ConfigError("sampler.name: unknown sampler '" + sampler_cfg.name +
                        "'");
    }
    rec.selected = sel.selected;
    rec.draws = sel.draws;
    rec.objective = has_objective ? sel.objective : kNaN;
    rec.elapsed_select = now_seconds() - select_start;

    const double train_start = now_seconds();
    std::vector<ModelParams> locals(rec.selected.size(), theta);
    try {
      parallel_for(config.workers, rec.selected.size(), [&](std::size_t i) {
        const int id = rec.selected[i];
        locals[i] =
            local_sgd(theta, setup.data.clients[static_cast<std::size_t>(id)].train,
                      config.trainer, eta, config.seeds.train, t, id);
      });
    } catch (const DivergenceError& e) {
      summary.aborted = true;
      summary.aborted_round = t;
      summary.aborted_client = e.client_id;
      summary.abort_reason = e.what();
      break;
    }
    rec.elapsed_train = now_seconds() - train_start;

    std::string aggregation = config.aggregation;
    if (aggregation == "auto")
      aggregation = (sampler_cfg.name == "fedgs" || sampler_cfg.name == "uniform")
                        ? "weighted"
                        : "uniform";
    if (aggregation == "weighted") {
      std::vector<std::int64_t> sizes;
      sizes.reserve(rec.selected.size());
      for (int id : rec.selected)
        sizes.push_back(setup.profiles[static_cast<std::size_t>(id)].num_examples);
      theta = aggregate_fedgs(locals, sizes);
    } else {
      if (rec.draws == rec.selected) {
        theta = aggregate_uniform(locals);
      } else {
        // Multiplicity-preserving mean: a client drawn twice counts twice.
        std::vector<ModelParams> by_draw;
        by_draw.reserve(rec.draws.size());
        for (int id : rec.draws) {
          const auto it =
              std::lower_bound(rec.selected.begin(), rec.selected.end(), id);
          by_draw.push_back(
              locals[static_cast<std::size_t>(it - rec.selected.begin())]);
        }
        theta = aggregate_uniform(by_draw);
      }
    }

    state.record_selection(rec.selected);
    rec.g_score = avg_shortest_path_score(rec.selected, setup.graph.H, n_clients);
    rec.var_v = n_clients >= 2 ? counts_variance(state.counts) : 0.0;

    const double eval_start = now_seconds();
    rec.train_loss = pooled_train_loss(theta, setup.data, config.workers);
    const EvalResult ev = evaluate(theta, setup.eval_examples);
    rec.test_loss = ev.loss;
    rec.test_accuracy = ev.accuracy;
    rec.elapsed_eval = now_seconds() - eval_start;

    if (!have_min || rec.test_loss < summary.min_test_loss) {
      summary.min_test_loss = rec.test_loss;
      summary.min_test_loss_round = t;
      have_min = true;
    }
    result.records.push_back(std::move(rec));
    eta *= config.trainer.decay;
  }

  summary.counts = state.counts;
  summary.final_counts_variance =
      n_clients >= 2 ? counts_variance(state.counts) : 0.0;
  summary.completed_rounds = static_cast<std::int64_t>(result.records.size());
  if (!result.records.empty()) {
    summary.final_test_loss = result.records.back().test_loss;
    summary.final_test_accuracy = result.records.back().test_accuracy;
  } else {
    summary.final_test_loss = initial.loss;
    summary.final_test_accuracy = initial.accuracy;
  }
  if (!have_min) {
    summary.min_test_loss = initial.loss;
    summary.min_test_loss_round = -1;
  }
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  return run_experiment(prepare_experiment(config));
}

}  // namespace fedgs

#include "fedgs/runner.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fedgs/common.hpp"
#include "fedgs/graph.hpp"

namespace fedgs {

namespace {

namespace fs = std::filesystem;

std::string g12(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string join_path(const std::string& dir, const std::string& name) {
  if (name.empty()) return {};
  if (dir.empty()) return name;
  return (fs::path(dir) / name).string();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& path) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str())
    throw IoError("malformed number '" + s + "' in " + path);
  return v;
}

constexpr const char* kRoundsHeader =
    "t,num_available,selected,objective,g_score,var_v,train_loss,test_loss";

}  // namespace

RunPaths resolve_paths(const OutputConfig& output) {
  RunPaths p;
  p.dir = output.dir;
  p.rounds_csv = join_path(output.dir, output.rounds_csv);
  p.summary_json = join_path(output.dir, output.summary);
  p.trace_csv = join_path(output.dir, output.trace_csv);
  p.counts_csv = join_path(output.dir, output.counts_csv);
  p.graph_file = join_path(output.dir, output.graph_file);
  return p;
}

void ensure_writable_dir(const std::string& dir) {
  const std::string target = dir.empty() ? "." : dir;
  std::error_code ec;
  fs::create_directories(target, ec);
  if (ec)
    throw IoError("cannot create output directory '" + target +
                  "': " + ec.message());
  const fs::path probe = fs::path(target) / ".write_probe";
  {
    std::ofstream f(probe);
    if (!f)
      throw IoError("output directory '" + target + "' is not writable");
    f << "ok\n";
  }
  fs::remove(probe, ec);
}

void write_rounds_csv(const std::vector<RoundRecord>& records,
                      const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << kRoundsHeader << '\n';
  for (const RoundRecord& r : records) {
    f << r.t << ',' << r.available.size() << ',';
    for (std::size_t i = 0; i < r.selected.size(); ++i) {
      if (i) f << ';';
      f << r.selected[i];
    }
    f << ',' << g12(r.objective) << ',' << g12(r.g_score) << ','
      << g12(r.var_v) << ',' << g12(r.train_loss) << ',' << g12(r.test_loss)
      << '\n';
  }
  if (!f) throw IoError("failed writing '" + path + "'");
}

std::vector<RoundCsvRow> read_rounds_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(f, line) || line != kRoundsHeader)
    throw IoError("unexpected rounds CSV header in " + path);
  std::vector<RoundCsvRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 8)
      throw IoError("malformed rounds CSV row in " + path + ": " + line);
    RoundCsvRow row;
    row.t = std::stoll(fields[0]);
    row.num_available = std::stoll(fields[1]);
    if (!fields[2].empty())
      for (const auto& id : split(fields[2], ';'))
        row.selected.push_back(std::stoi(id));
    row.objective = parse_double(fields[3], path);
    row.g_score = parse_double(fields[4], path);
    row.var_v = parse_double(fields[5], path);
    row.train_loss = parse_double(fields[6], path);
    row.test_loss = parse_double(fields[7], path);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_counts_csv(const std::vector<std::int64_t>& counts,
                      const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << "client_id,count\n";
  for (std::size_t k = 0; k < counts.size(); ++k)
    f << k << ',' << counts[k] << '\n';
  if (!f) throw IoError("failed writing '" + path + "'");
}

Json summary_to_json(const ExperimentResult& result,
                     const ExperimentConfig& config) {
  const ExperimentSummary& s = result.summary;
  Json j;
  Json sm;
  sm["initial_test_loss"] = s.initial_test_loss;
  sm["initial_test_accuracy"] = s.initial_test_accuracy;
  sm["min_test_loss"] = s.min_test_loss;
  sm["min_test_loss_round"] = s.min_test_loss_round;
  sm["final_test_loss"] = s.final_test_loss;
  sm["final_test_accuracy"] = s.final_test_accuracy;
  sm["final_counts_variance"] = s.final_counts_variance;
  sm["completed_rounds"] = s.completed_rounds;
  sm["skipped_rounds"] = s.skipped_rounds;
  sm["aborted"] = s.aborted;
  if (s.aborted) {
    sm["aborted_round"] = s.aborted_round;
    sm["aborted_client"] = s.aborted_client;
    sm["abort_reason"] = s.abort_reason;
  }
  sm["eval_set"] = s.eval_set;
  sm["counts"] = s.counts;
  j["summary"] = std::move(sm);
  Json seeds;
  seeds["data"] = config.seeds.data;
  seeds["train"] = config.seeds.train;
  seeds["availability"] = config.seeds.availability;
  j["seeds"] = std::move(seeds);
  j["config"] = config_to_json(config);
  return j;
}

void write_summary_json(const ExperimentResult& result,
                        const ExperimentConfig& config,
                        const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  write_json(f, summary_to_json(result, config), 2);
  f << '\n';
  if (!f) throw IoError("failed writing '" + path + "'");
}

ExperimentResult execute_run(const ExperimentConfig& config, std::ostream* log) {
  const RunPaths paths = resolve_paths(config.output);
  ensure_writable_dir(paths.dir);

  if (log)
    *log << "[run] preparing: scheme=" << config.dataset.scheme
         << " N=" << config.dataset.n_clients << " graph=" << config.graph.method
         << " sampler=" << sampler_label(config.sampler)
         << " availability=" << availability_label(config.availability) << '\n';
  ExperimentSetup setup = prepare_experiment(config);

  if (!paths.graph_file.empty()) save_graph(setup.graph, paths.graph_file);
  if (!paths.trace_csv.empty())
    write_availability_trace(setup.availability, setup.profiles, config.rounds,
                             config.seeds.availability, paths.trace_csv);

  if (log)
    *log << "[run] training " << config.rounds << " rounds (M="
         << setup.max_selected << ", workers=" << config.workers << ")\n";
  ExperimentResult result = run_experiment(setup);

  if (!paths.rounds_csv.empty()) write_rounds_csv(result.records, paths.rounds_csv);
  if (!paths.counts_csv.empty())
    write_counts_csv(result.summary.counts, paths.counts_csv);
  if (!paths.summary_json.empty())
    write_summary_json(result, config, paths.summary_json);

  if (log) {
    const ExperimentSummary& s = result.summary;
    if (s.aborted)
      *log << "[run] aborted at round " << s.aborted_round << ": "
           << s.abort_reason << '\n';
    *log << "[run] done: min_test_loss=" << g12(s.min_test_loss) << " (round "
         << s.min_test_loss_round << "), final Var(v)=" << g12(s.final_counts_variance)
         << ", outputs in " << (paths.dir.empty() ? "." : paths.dir) << '\n';
  }
  return result;
}

MatrixResult run_matrix(const MatrixConfig& matrix, std::ostream* log) {
  MatrixResult out;
  for (const auto& s : matrix.samplers) out.sampler_labels.push_back(sampler_label(s));
  for (const auto& a : matrix.availability_modes)
    out.availability_labels.push_back(availability_label(a));
  ensure_writable_dir(matrix.output_dir);

  out.mean_min_test_loss.assign(
      matrix.samplers.size(),
      std::vector<double>(matrix.availability_modes.size(), 0.0));

  for (std::size_t i = 0; i < matrix.samplers.size(); ++i) {
    for (std::size_t j = 0; j < matrix.availability_modes.size(); ++j) {
      double sum = 0.0;
      for (const std::uint64_t seed : matrix.seeds) {
        ExperimentConfig cfg = matrix.base;
        cfg.sampler = matrix.samplers[i];
        cfg.availability = matrix.availability_modes[j];
        cfg.seeds.data = derive_seed(seed, tag("data"));
        cfg.seeds.train = derive_seed(seed, tag("train"));
        cfg.seeds.availability = derive_seed(seed, tag("avail"));
        const std::string cell_name = out.sampler_labels[i] + "__" +
                                      out.availability_labels[j] + "__s" +
                                      std::to_string(seed);
        cfg.output.dir = (fs::path(matrix.output_dir) / cell_name).string();
        if (log) *log << "[matrix] " << cell_name << '\n';
        const ExperimentResult result = execute_run(cfg, log);

        MatrixCell cell;
        cell.sampler = out.sampler_labels[i];
        cell.availability = out.availability_labels[j];
        cell.seed = seed;
        cell.dir = cfg.output.dir;
        cell.summary = result.summary;
        out.cells.push_back(std::move(cell));
        sum += result.summary.min_test_loss;
      }
      out.mean_min_test_loss[i][j] =
          sum / static_cast<double>(matrix.seeds.size());
    }
  }
  write_matrix_summary_csv(
      out, (fs::path(matrix.output_dir) / "matrix_summary.csv").string());
  return out;
}

void write_matrix_summary_csv(const MatrixResult& result,
                              const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << "sampler";
  for (const auto& label : result.availability_labels) f << ',' << label;
  f << '\n';
  for (std::size_t i = 0; i < result.sampler_labels.size(); ++i) {
    f << result.sampler_labels[i];
    for (std::size_t j = 0; j < result.availability_labels.size(); ++j)
      f << ',' << g12(result.mean_min_test_loss[i][j]);
    f << '\n';
  }
  if (!f) throw IoError("failed writing '" + path + "'");
}

}  // namespace fedgs

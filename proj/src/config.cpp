#include "fedgs/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace fedgs {

int ExperimentConfig::resolved_max_selected() const {
  const int n = dataset.n_clients;
  if (max_selected > 0) {
    return std::min(max_selected, n);
  }
  const int m =
      static_cast<int>(std::llround(participation_fraction * static_cast<double>(n)));
  return std::clamp(m, 1, n);
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return dataset == o.dataset && rounds == o.rounds &&
         max_selected == o.max_selected &&
         participation_fraction == o.participation_fraction &&
         sampler == o.sampler && graph == o.graph &&
         availability == o.availability && trainer == o.trainer &&
         aggregation == o.aggregation && workers == o.workers &&
         seeds == o.seeds && output == o.output;
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

// Pulls typed values out of a JSON object while tracking which keys were
// consumed; leftover keys are reported with their full path.
class Fields {
 public:
  Fields(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      fail(path_, "expected an object");
    }
  }

  ~Fields() = default;

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!consumed_.count(key)) {
        fail(path_.empty() ? key : path_ + "." + key, "unknown field");
      }
    }
  }

  bool has(const std::string& key) {
    return j_.contains(key);
  }

  const Json* take(const std::string& key) {
    consumed_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string member_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void get(const std::string& key, std::string& out) {
    if (const Json* v = take(key)) {
      if (!v->is_string()) fail(member_path(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  void get(const std::string& key, bool& out) {
    if (const Json* v = take(key)) {
      if (!v->is_boolean()) fail(member_path(key), "expected a boolean");
      out = v->get<bool>();
    }
  }
  void get(const std::string& key, double& out) {
    if (const Json* v = take(key)) {
      if (!v->is_number()) fail(member_path(key), "expected a number");
      out = v->get<double>();
    }
  }
  template <class Int>
  void get_int(const std::string& key, Int& out) {
    if (const Json* v = take(key)) {
      if (!v->is_number_integer() && !v->is_number_unsigned()) {
        fail(member_path(key), "expected an integer");
      }
      out = v->get<Int>();
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> consumed_;
};

void check_range(bool ok, const std::string& path, const std::string& what) {
  if (!ok) fail(path, what);
}

DatasetConfig dataset_from_json(const Json& j, const std::string& path) {
  DatasetConfig c;
  Fields f(j, path);
  f.get("scheme", c.scheme);
  f.get_int("n_clients", c.n_clients);
  f.get("alpha", c.alpha);
  f.get("beta", c.beta);
  f.get("dirichlet_alpha", c.dirichlet_alpha);
  f.get_int("source_examples", c.source_examples);
  f.get_int("source_classes", c.source_classes);
  f.get_int("source_dim", c.source_dim);
  f.get("train_fraction", c.train_fraction);
  f.finish();
  check_range(c.scheme == "synthetic" || c.scheme == "dirichlet" ||
                  c.scheme == "two_label",
              path + ".scheme", "must be synthetic, dirichlet, or two_label");
  check_range(c.n_clients >= 2, path + ".n_clients", "must be >= 2");
  check_range(c.alpha >= 0.0, path + ".alpha", "must be >= 0");
  check_range(c.beta >= 0.0, path + ".beta", "must be >= 0");
  check_range(c.dirichlet_alpha > 0.0, path + ".dirichlet_alpha", "must be > 0");
  check_range(c.source_examples >= 1, path + ".source_examples", "must be >= 1");
  check_range(c.source_classes >= 2, path + ".source_classes", "must be >= 2");
  check_range(c.source_dim >= 1, path + ".source_dim", "must be >= 1");
  check_range(c.train_fraction > 0.0 && c.train_fraction < 1.0,
              path + ".train_fraction", "must be in (0,1)");
  return c;
}

SamplerConfig sampler_from_json(const Json& j, const std::string& path) {
  SamplerConfig c;
  Fields f(j, path);
  f.get("name", c.name);
  f.get("alpha", c.alpha);
  f.get("budget_seconds", c.budget_seconds);
  f.get_int("budget_swaps", c.budget_swaps);
  f.get("exact", c.exact);
  f.get_int("poc_eval_cap", c.poc_eval_cap);
  f.finish();
  check_range(c.name == "fedgs" || c.name == "uniform" || c.name == "md" ||
                  c.name == "poc",
              path + ".name", "must be fedgs, uniform, md, or poc");
  check_range(c.alpha >= 0.0, path + ".alpha", "must be >= 0");
  check_range(c.budget_swaps >= -1, path + ".budget_swaps", "must be >= -1");
  check_range(c.poc_eval_cap >= 0, path + ".poc_eval_cap", "must be >= 0");
  return c;
}

GraphConfig graph_from_json(const Json& j, const std::string& path) {
  GraphConfig c;
  Fields f(j, path);
  f.get("method", c.method);
  f.get("epsilon", c.epsilon);
  f.get("sigma2", c.sigma2);
  f.get_int("noise_batch", c.noise_batch);
  f.finish();
  check_range(c.method == "oracle" || c.method == "cosine_updates" ||
                  c.method == "functional" || c.method == "sspp",
              path + ".method",
              "must be oracle, cosine_updates, functional, or sspp");
  check_range(c.epsilon > 0.0, path + ".epsilon", "must be > 0");
  check_range(c.sigma2 > 0.0, path + ".sigma2", "must be > 0");
  check_range(c.noise_batch >= 1, path + ".noise_batch", "must be >= 1");
  return c;
}

AvailabilityConfig availability_from_json(const Json& j, const std::string& path) {
  AvailabilityConfig c;
  Fields f(j, path);
  f.get("mode", c.mode);
  f.get("beta", c.beta);
  f.get_int("period", c.period);
  f.get_int("num_y", c.num_y);
  f.finish();
  check_range(c.mode == "IDL" || c.mode == "MDF" || c.mode == "LDF" ||
                  c.mode == "YMF" || c.mode == "YC" || c.mode == "LN" ||
                  c.mode == "SLN",
              path + ".mode", "must be one of IDL,MDF,LDF,YMF,YC,LN,SLN");
  check_range(c.beta >= 0.0 && c.beta <= 1.0, path + ".beta",
              "must be in [0,1]");
  check_range(c.period >= 1, path + ".period", "must be >= 1");
  check_range(c.num_y >= 0, path + ".num_y", "must be >= 0");
  return c;
}

TrainerConfig trainer_from_json(const Json& j, const std::string& path) {
  TrainerConfig c;
  Fields f(j, path);
  f.get_int("steps", c.steps);
  f.get_int("batch_size", c.batch_size);
  f.get("learning_rate", c.learning_rate);
  f.get("decay", c.decay);
  f.get("prox_mu", c.prox_mu);
  f.finish();
  check_range(c.steps >= 1, path + ".steps", "must be >= 1");
  check_range(c.batch_size >= 1, path + ".batch_size", "must be >= 1");
  check_range(c.learning_rate > 0.0, path + ".learning_rate", "must be > 0");
  check_range(c.decay > 0.0 && c.decay <= 1.0, path + ".decay",
              "must be in (0,1]");
  check_range(c.prox_mu >= 0.0, path + ".prox_mu", "must be >= 0");
  return c;
}

ExperimentSeeds seeds_from_json(const Json& j, const std::string& path) {
  ExperimentSeeds c;
  Fields f(j, path);
  f.get_int("data", c.data);
  f.get_int("train", c.train);
  f.get_int("availability", c.availability);
  f.finish();
  return c;
}

OutputConfig output_from_json(const Json& j, const std::string& path) {
  OutputConfig c;
  Fields f(j, path);
  f.get("dir", c.dir);
  f.get("rounds_csv", c.rounds_csv);
  f.get("summary", c.summary);
  f.get("trace_csv", c.trace_csv);
  f.get("counts_csv", c.counts_csv);
  f.get("graph_file", c.graph_file);
  f.finish();
  return c;
}

}  // namespace

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig c;
  Fields f(j, "");
  if (const Json* v = f.take("dataset")) {
    c.dataset = dataset_from_json(*v, "dataset");
  }
  f.get_int("rounds", c.rounds);
  f.get_int("max_selected", c.max_selected);
  f.get("participation_fraction", c.participation_fraction);
  if (const Json* v = f.take("sampler")) {
    c.sampler = sampler_from_json(*v, "sampler");
  }
  if (const Json* v = f.take("graph")) {
    c.graph = graph_from_json(*v, "graph");
  }
  if (const Json* v = f.take("availability")) {
    c.availability = availability_from_json(*v, "availability");
  }
  if (const Json* v = f.take("trainer")) {
    c.trainer = trainer_from_json(*v, "trainer");
  }
  f.get("aggregation", c.aggregation);
  f.get_int("workers", c.workers);
  if (const Json* v = f.take("seeds")) {
    c.seeds = seeds_from_json(*v, "seeds");
  }
  if (const Json* v = f.take("output")) {
    c.output = output_from_json(*v, "output");
  }
  f.finish();

  check_range(c.rounds >= 0, "rounds", "must be >= 0");
  check_range(c.max_selected >= 0, "max_selected", "must be >= 0");
  check_range(c.participation_fraction > 0.0 && c.participation_fraction <= 1.0,
              "participation_fraction", "must be in (0,1]");
  check_range(c.aggregation == "auto" || c.aggregation == "weighted" ||
                  c.aggregation == "uniform",
              "aggregation", "must be auto, weighted, or uniform");
  check_range(c.workers >= 1, "workers", "must be >= 1");
  if ((c.availability.mode == "LN" || c.availability.mode == "SLN") &&
      c.availability.beta >= 1.0) {
    fail("availability.beta", "must be < 1 for LN/SLN");
  }
  return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) {
    throw ConfigError("cannot open config file: " + path);
  }
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["dataset"] = {{"scheme", c.dataset.scheme},
                  {"n_clients", c.dataset.n_clients},
                  {"alpha", c.dataset.alpha},
                  {"beta", c.dataset.beta},
                  {"dirichlet_alpha", c.dataset.dirichlet_alpha},
                  {"source_examples", c.dataset.source_examples},
                  {"source_classes", c.dataset.source_classes},
                  {"source_dim", c.dataset.source_dim},
                  {"train_fraction", c.dataset.train_fraction}};
  j["rounds"] = c.rounds;
  j["max_selected"] = c.max_selected;
  j["participation_fraction"] = c.participation_fraction;
  j["sampler"] = {{"name", c.sampler.name},
                  {"alpha", c.sampler.alpha},
                  {"budget_seconds", c.sampler.budget_seconds},
                  {"budget_swaps", c.sampler.budget_swaps},
                  {"exact", c.sampler.exact},
                  {"poc_eval_cap", c.sampler.poc_eval_cap}};
  j["graph"] = {{"method", c.graph.method},
                {"epsilon", c.graph.epsilon},
                {"sigma2", c.graph.sigma2},
                {"noise_batch", c.graph.noise_batch}};
  j["availability"] = {{"mode", c.availability.mode},
                       {"beta", c.availability.beta},
                       {"period", c.availability.period},
                       {"num_y", c.availability.num_y}};
  j["trainer"] = {{"steps", c.trainer.steps},
                  {"batch_size", c.trainer.batch_size},
                  {"learning_rate", c.trainer.learning_rate},
                  {"decay", c.trainer.decay},
                  {"prox_mu", c.trainer.prox_mu}};
  j["aggregation"] = c.aggregation;
  j["workers"] = c.workers;
  j["seeds"] = {{"data", c.seeds.data},
                {"train", c.seeds.train},
                {"availability", c.seeds.availability}};
  j["output"] = {{"dir", c.output.dir},
                 {"rounds_csv", c.output.rounds_csv},
                 {"summary", c.output.summary},
                 {"trace_csv", c.output.trace_csv},
                 {"counts_csv", c.output.counts_csv},
                 {"graph_file", c.output.graph_file}};
  return j;
}

void apply_override(Json& j, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like path.to.field=value: " +
                      assignment);
  }
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  Json* node = &j;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) {
      throw ConfigError("override has an empty path segment: " + assignment);
    }
    if (dot == std::string::npos) {
      Json parsed = Json::parse(value, nullptr, false);
      (*node)[key] = parsed.is_discarded() ? Json(value) : parsed;
      return;
    }
    node = &(*node)[key];
    if (!node->is_object() && !node->is_null()) {
      throw ConfigError("override path crosses a non-object: " + assignment);
    }
    start = dot + 1;
  }
}

namespace {

std::string format_number(const Json& j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::isnan(v)) return "null";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    // %g may print integral doubles without a decimal marker; keep the JSON
    // type stable across round-trips.
    std::string s(buf);
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos) {
      s += ".0";
    }
    return s;
  }
  return j.dump();
}

void write_json_impl(std::ostream& os, const Json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent) * depth, ' ');
  const std::string pad_in(static_cast<std::size_t>(indent) * (depth + 1), ' ');
  const char* nl = indent > 0 ? "\n" : "";
  if (j.is_object()) {
    if (j.empty()) {
      os << "{}";
      return;
    }
    os << "{" << nl;
    bool first = true;
    for (const auto& [key, value] : j.items()) {
      if (!first) os << "," << nl;
      first = false;
      os << pad_in << Json(key).dump() << (indent > 0 ? ": " : ":");
      write_json_impl(os, value, indent, depth + 1);
    }
    os << nl << pad << "}";
  } else if (j.is_array()) {
    if (j.empty()) {
      os << "[]";
      return;
    }
    os << "[" << nl;
    bool first = true;
    for (const auto& value : j) {
      if (!first) os << "," << nl;
      first = false;
      os << pad_in;
      write_json_impl(os, value, indent, depth + 1);
    }
    os << nl << pad << "]";
  } else if (j.is_number()) {
    os << format_number(j);
  } else {
    os << j.dump();
  }
}

}  // namespace

void write_json(std::ostream& os, const Json& j, int indent) {
  write_json_impl(os, j, indent, 0);
}

std::string json_to_text(const Json& j) {
  std::ostringstream os;
  write_json(os, j, 2);
  os << "\n";
  return os.str();
}

MatrixConfig parse_matrix_config(const std::string& path) {
  namespace fs = std::filesystem;
  fs::path p(path);
  if (fs::is_directory(p)) {
    p /= "matrix.json";
  }
  std::ifstream is(p);
  if (!is) {
    throw ConfigError("cannot open matrix config: " + p.string());
  }
  std::ostringstream buf;
  buf << is.rdbuf();
  Json j;
  try {
    j = Json::parse(buf.str());
  } catch (const std::exception& e) {
    throw ConfigError(std::string("matrix config is not valid JSON: ") + e.what());
  }

  MatrixConfig m;
  Fields f(j, "");
  if (const Json* v = f.take("base")) {
    m.base = config_from_json(*v);
  }
  if (const Json* v = f.take("samplers")) {
    if (!v->is_array() || v->empty()) {
      fail("samplers", "expected a nonempty array");
    }
    int i = 0;
    for (const auto& e : *v) {
      m.samplers.push_back(
          sampler_from_json(e, "samplers[" + std::to_string(i++) + "]"));
    }
  } else {
    fail("samplers", "missing required field");
  }
  if (const Json* v = f.take("availability_modes")) {
    if (!v->is_array() || v->empty()) {
      fail("availability_modes", "expected a nonempty array");
    }
    int i = 0;
    for (const auto& e : *v) {
      m.availability_modes.push_back(availability_from_json(
          e, "availability_modes[" + std::to_string(i++) + "]"));
    }
  } else {
    fail("availability_modes", "missing required field");
  }
  if (const Json* v = f.take("seeds")) {
    if (!v->is_array() || v->empty()) {
      fail("seeds", "expected a nonempty array");
    }
    for (const auto& e : *v) {
      if (!e.is_number_integer() && !e.is_number_unsigned()) {
        fail("seeds", "entries must be integers");
      }
      m.seeds.push_back(e.get<std::uint64_t>());
    }
  } else {
    fail("seeds", "missing required field");
  }
  f.get("output_dir", m.output_dir);
  f.finish();
  return m;
}

std::string sampler_label(const SamplerConfig& s) {
  if (s.name == "fedgs") {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", s.alpha);
    return "fedgs_a" + std::string(buf);
  }
  return s.name;
}

std::string availability_label(const AvailabilityConfig& a) {
  if (a.mode == "IDL") {
    return a.mode;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", a.beta);
  return a.mode + std::string(buf);
}

}  // namespace fedgs

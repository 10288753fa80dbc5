#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "doctest.h"
#include "fedgs/common.hpp"
#include "fedgs/config.hpp"

using namespace fedgs;

namespace {

bool mentions(const std::exception& e, const std::string& needle) {
  return std::string(e.what()).find(needle) != std::string::npos;
}

template <class Fn>
std::string error_of(Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("an empty document yields the default configuration") {
  CHECK(parse_config_text("{}") == ExperimentConfig{});
  CHECK(parse_config_text("{\"sampler\": {}}") == ExperimentConfig{});
}

TEST_CASE("unknown fields are rejected with their full path") {
  const std::string err =
      error_of([] { (void)parse_config_text(R"({"dataset": {"bogus": 1}})"); });
  CHECK(err.find("dataset.bogus") != std::string::npos);
  CHECK(error_of([] { (void)parse_config_text(R"({"extra": 1})"); })
            .find("extra") != std::string::npos);
}

TEST_CASE("range violations name the offending field") {
  CHECK(error_of([] {
          (void)parse_config_text(R"({"availability": {"beta": 1.5}})");
        }).find("availability.beta") != std::string::npos);
  CHECK(error_of([] {
          (void)parse_config_text(R"({"trainer": {"decay": 0.0}})");
        }).find("trainer.decay") != std::string::npos);
  CHECK(error_of([] {
          (void)parse_config_text(R"({"dataset": {"train_fraction": 1.0}})");
        }).find("dataset.train_fraction") != std::string::npos);
  CHECK(error_of([] {
          (void)parse_config_text(R"({"sampler": {"name": "random"}})");
        }).find("sampler.name") != std::string::npos);
  CHECK(error_of([] {
          (void)parse_config_text(R"({"participation_fraction": 0.0})");
        }).find("participation_fraction") != std::string::npos);
}

TEST_CASE("static rate modes with full strength are rejected at parse time") {
  const std::string err = error_of([] {
    (void)parse_config_text(R"({"availability": {"mode": "LN", "beta": 1.0}})");
  });
  CHECK(err.find("availability.beta") != std::string::npos);
  // IDL tolerates beta 1.0; it simply ignores it.
  CHECK_NOTHROW((void)parse_config_text(
      R"({"availability": {"mode": "IDL", "beta": 1.0}})"));
}

TEST_CASE("typed fields reject mismatched JSON values") {
  try {
    (void)parse_config_text(R"({"rounds": "many"})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(mentions(e, "rounds"));
  }
  CHECK_THROWS_AS((void)parse_config_text(R"({"workers": 1.5})"), ConfigError);
  CHECK_THROWS_AS((void)parse_config_text(R"({"sampler": []})"), ConfigError);
  CHECK_THROWS_AS((void)parse_config_text("[1,2]"), ConfigError);
  CHECK_THROWS_AS((void)parse_config_text("not json"), ConfigError);
}

TEST_CASE("the per-round cap derives from the fraction unless set explicitly") {
  ExperimentConfig c;
  c.dataset.n_clients = 30;
  c.participation_fraction = 0.2;
  CHECK(c.resolved_max_selected() == 6);

  c.max_selected = 4;
  CHECK(c.resolved_max_selected() == 4);

  c.max_selected = 50;  // capped by the population
  CHECK(c.resolved_max_selected() == 30);

  c.max_selected = 0;
  c.participation_fraction = 0.001;  // never below one client
  CHECK(c.resolved_max_selected() == 1);

  c.participation_fraction = 1.0;
  CHECK(c.resolved_max_selected() == 30);
}

TEST_CASE("dotted overrides patch nested fields") {
  Json j = Json::parse("{}");
  apply_override(j, "sampler.alpha=2");
  apply_override(j, "dataset.scheme=dirichlet");  // bare word stays a string
  apply_override(j, "rounds=7");
  apply_override(j, "sampler.exact=true");
  const ExperimentConfig c = config_from_json(j);
  CHECK(c.sampler.alpha == 2.0);
  CHECK(c.dataset.scheme == "dirichlet");
  CHECK(c.rounds == 7);
  CHECK(c.sampler.exact);
}

TEST_CASE("malformed overrides are rejected") {
  Json j = Json::parse("{}");
  CHECK_THROWS_AS(apply_override(j, "no_equals"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "=5"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "a..b=1"), ConfigError);
  apply_override(j, "rounds=5");
  CHECK_THROWS_AS(apply_override(j, "rounds.nested=1"), ConfigError);
}

TEST_CASE("configuration survives a JSON round-trip") {
  ExperimentConfig c;
  c.dataset.scheme = "dirichlet";
  c.dataset.n_clients = 12;
  c.dataset.dirichlet_alpha = 0.3;
  c.rounds = 42;
  c.max_selected = 3;
  c.sampler.name = "md";
  c.sampler.budget_swaps = 10;
  c.sampler.poc_eval_cap = 64;
  c.graph.method = "sspp";
  c.graph.epsilon = 0.2;
  c.availability.mode = "SLN";
  c.availability.beta = 0.4;
  c.availability.period = 8;
  c.trainer.prox_mu = 0.01;
  c.trainer.learning_rate = 0.05;
  c.aggregation = "uniform";
  c.workers = 4;
  c.seeds = ExperimentSeeds{101, 102, 103};
  c.output.dir = "elsewhere";
  c.output.trace_csv = "trace.csv";

  CHECK(config_from_json(config_to_json(c)) == c);
  CHECK(parse_config_text(json_to_text(config_to_json(c))) == c);
}

TEST_CASE("the JSON writer prints floats with 12 significant digits") {
  Json j;
  j["int"] = 3;
  j["whole"] = 2.0;
  j["frac"] = 0.1;
  j["third"] = 1.0 / 3.0;
  j["nan"] = std::numeric_limits<double>::quiet_NaN();
  j["big"] = 1.5e300;
  j["text"] = "ok";

  const std::string text = json_to_text(j);
  CHECK(text.find("\"int\": 3") != std::string::npos);
  CHECK(text.find("\"whole\": 2.0") != std::string::npos);
  CHECK(text.find("\"frac\": 0.1") != std::string::npos);
  CHECK(text.find("\"third\": 0.333333333333") != std::string::npos);
  CHECK(text.find("\"nan\": null") != std::string::npos);
  CHECK(text.find("\"big\": 1.5e+300") != std::string::npos);
  CHECK(text.find("\"text\": \"ok\"") != std::string::npos);

  std::ostringstream compact;
  write_json(compact, Json::parse(R"({"a": [1, 2.5]})"), 0);
  CHECK(compact.str() == R"({"a":[1,2.5]})");
}

TEST_CASE("textual output is stable under rewrite") {
  Json j = config_to_json(ExperimentConfig{});
  const std::string once = json_to_text(j);
  const std::string twice = json_to_text(Json::parse(once));
  CHECK(once == twice);
}

TEST_CASE("matrix files expand into labeled sweeps") {
  const std::string text = R"({
    "base": {"rounds": 2},
    "samplers": [{"name": "fedgs", "alpha": 1.0}, {"name": "uniform"}],
    "availability_modes": [{"mode": "MDF", "beta": 0.7}],
    "seeds": [1, 2, 3],
    "output_dir": "mx"
  })";
  namespace fs = std::filesystem;
  const fs::path dir = "matrix_parse_dir";
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "matrix.json");
    os << text;
  }

  for (const std::string target : {(dir / "matrix.json").string(), dir.string()}) {
    const MatrixConfig m = parse_matrix_config(target);
    CHECK(m.base.rounds == 2);
    REQUIRE(m.samplers.size() == 2);
    CHECK(sampler_label(m.samplers[0]) == "fedgs_a1");
    CHECK(sampler_label(m.samplers[1]) == "uniform");
    REQUIRE(m.availability_modes.size() == 1);
    CHECK(availability_label(m.availability_modes[0]) == "MDF0.7");
    CHECK(availability_label(AvailabilityConfig{}) == "IDL");
    CHECK(m.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(m.output_dir == "mx");
  }
  fs::remove_all(dir);
}

TEST_CASE("matrix files require all three sweep axes") {
  namespace fs = std::filesystem;
  const fs::path dir = "matrix_missing_dir";
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "matrix.json");
    os << R"({"samplers": [{"name": "uniform"}], "seeds": [1]})";
  }
  CHECK(error_of([&] { (void)parse_matrix_config(dir.string()); })
            .find("availability_modes") != std::string::npos);
  fs::remove_all(dir);
  CHECK_THROWS_AS((void)parse_matrix_config("no_such_dir_xyz"), ConfigError);
}

TEST_CASE("missing config files raise a configuration error") {
  CHECK_THROWS_AS((void)parse_config_file("definitely_missing.json"), ConfigError);
}

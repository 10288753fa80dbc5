#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "fedgs/common.hpp"
#include "fedgs/config.hpp"
#include "fedgs/domain.hpp"
#include "fedgs/engine.hpp"
#include "fedgs/graph.hpp"
#include "fedgs/runner.hpp"
#include "fedgs/sampler.hpp"
#include "fedgs/sspp.hpp"

namespace py = pybind11;

namespace {

fedgs::SquareMat mat_from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  fedgs::SquareMat m(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n)
      throw fedgs::InvalidInputError("matrix must be square");
    for (std::size_t j = 0; j < n; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

std::vector<std::vector<double>> rows_from_mat(const fedgs::SquareMat& m) {
  const std::size_t n = m.size();
  std::vector<std::vector<double>> rows(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) rows[i][j] = m(i, j);
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Deterministic federated-learning simulator with graph-based client "
      "sampling (C++ core)";

  py::register_exception<fedgs::Error>(m, "FedgsError", PyExc_ValueError);

  m.def("counts_variance",
        [](const std::vector<std::int64_t>& counts) {
          return fedgs::counts_variance(counts);
        },
        py::arg("counts"),
        "Unbiased variance of per-client sampling counts.");

  m.def("z_vector",
        [](const std::vector<std::int64_t>& counts, int m_per_round) {
          return fedgs::z_vector(counts, m_per_round);
        },
        py::arg("counts"), py::arg("m"),
        "Per-client variance penalty given current counts and per-round "
        "selection size m.");

  m.def("floyd_warshall",
        [](const std::vector<std::vector<double>>& adjacency) {
          double cap = 0.0;
          const fedgs::SquareMat H =
              fedgs::floyd_warshall(mat_from_rows(adjacency), &cap);
          return py::make_tuple(rows_from_mat(H), cap);
        },
        py::arg("adjacency"),
        "All-pairs shortest paths; unreachable pairs are capped. Returns "
        "(distances, cap). Use math.inf for absent edges.");

  m.def("scalar_product",
        [](const std::vector<double>& a, const std::vector<double>& b,
           std::uint64_t seed) {
          return fedgs::scalar_product_protocol(a, b, seed).value;
        },
        py::arg("a"), py::arg("b"), py::arg("seed") = std::uint64_t{0},
        "Dot product via the masked three-party exchange (server learns the "
        "result, not the vectors).");

  m.def("select_clients",
        [](const std::vector<int>& available,
           const std::vector<std::vector<double>>& distances,
           const std::vector<double>& z, double alpha, int m_per_round,
           bool exact, double budget_seconds, std::int64_t budget_swaps) {
          fedgs::SolverBudget budget{budget_seconds, budget_swaps};
          const fedgs::SquareMat H = mat_from_rows(distances);
          const fedgs::SelectionProblem problem = fedgs::make_selection_problem(
              available, H, z, alpha, static_cast<int>(H.size()), m_per_round,
              budget);
          const fedgs::SelectionResult r =
              exact ? fedgs::select_fedgs_exact(problem)
                    : fedgs::select_fedgs_heuristic(problem);
          py::dict out;
          out["selected"] = r.selected;
          out["objective"] = r.objective;
          out["solver"] = r.solver;
          out["iterations"] = r.iterations;
          return out;
        },
        py::arg("available"), py::arg("distances"), py::arg("z"),
        py::arg("alpha") = 1.0, py::arg("m") = 1, py::arg("exact") = false,
        py::arg("budget_seconds") = 1.0, py::arg("budget_swaps") = -1,
        "Pick m available clients maximizing (alpha/N) s^T H s - z . s. "
        "distances and z are indexed by global client id.");

  m.def("run_experiment_json",
        [](const std::string& config_text, bool write_outputs) {
          const fedgs::ExperimentConfig config =
              fedgs::parse_config_text(config_text);
          const fedgs::ExperimentResult result =
              write_outputs ? fedgs::execute_run(config)
                            : fedgs::run_experiment(config);
          return fedgs::json_to_text(fedgs::summary_to_json(result, config));
        },
        py::arg("config_text"), py::arg("write_outputs") = false,
        "Run a full experiment from JSON config text; returns the summary as "
        "JSON text. write_outputs=True also writes the configured artifacts.");
}

// Python module: thin wrappers around the core planning/estimation entry
// points. Structured data crosses the boundary as JSON strings to keep the
// binding surface small.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "wmlmc/config.hpp"
#include "wmlmc/driver.hpp"
#include "wmlmc/figures.hpp"
#include "wmlmc/mimc.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

std::string plan_json(const std::string& moments_json, double v, bool weighted) {
  const auto moments = wmlmc::moments_from_json(json::parse(moments_json));
  const auto plan = weighted ? wmlmc::wmlmc_plan(moments, v) : wmlmc::mlmc_plan(moments, v);
  return wmlmc::plan_to_json(plan).dump();
}

std::string estimate_json(const std::string& config_json) {
  const auto cfg = wmlmc::parse_experiment_config(json::parse(config_json));
  return wmlmc::result_to_json(wmlmc::run(cfg.run)).dump();
}

std::string moments_json(const std::string& config_json, int max_level,
                         long long n_per_level) {
  const auto cfg = wmlmc::parse_experiment_config(json::parse(config_json));
  const auto table =
      wmlmc::estimate_moments(cfg.run.model, cfg.run.scheme, cfg.run.payoff, max_level,
                              n_per_level, cfg.run.seed, cfg.run.threads);
  return wmlmc::moments_to_json(table).dump();
}

std::string mimc_plan_json(const std::string& oracle_json, const std::vector<int>& Lambda,
                           double v, bool epsilon_signs) {
  const auto oracle = wmlmc::TableOracle::from_json(json::parse(oracle_json));
  wmlmc::MimcOptions opts;
  opts.v = v;
  opts.force_epsilon_signs = epsilon_signs;
  const auto plan = wmlmc::mimc_plan(wmlmc::MultiIndex(Lambda), oracle, opts);
  return wmlmc::mimc_plan_to_json(plan).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "weighted multilevel / multi-index Monte Carlo core";

  m.def("plan", &plan_json, py::arg("moments_json"), py::arg("v"),
        py::arg("weighted") = true,
        "Level plan (JSON) from a moment table (JSON); weighted selects "
        "the optimally weighted estimator, otherwise plain MLMC.");
  m.def("estimate", &estimate_json, py::arg("config_json"),
        "Adaptive estimation to a target MSE from an experiment config (JSON).");
  m.def("estimate_moments", &moments_json, py::arg("config_json"),
        py::arg("max_level"), py::arg("n_per_level"),
        "Per-level moment table (JSON) sampled under an experiment config.");
  m.def("mimc_plan", &mimc_plan_json, py::arg("oracle_json"), py::arg("Lambda"),
        py::arg("v") = 0.01, py::arg("epsilon_signs") = false,
        "Multi-index plan (JSON) from a covariance oracle table (JSON).");
  m.def(
      "normalized_cost_weighted",
      [](const std::vector<double>& rhos, const std::vector<double>& mus) {
        return wmlmc::normalized_cost_wmlmc(rhos, mus).deltas;
      },
      py::arg("rhos"), py::arg("mus"),
      "Normalized square-root cost sequence of the weighted estimator.");
  m.def(
      "normalized_cost_mlmc",
      [](const std::vector<double>& rhos, const std::vector<double>& sigma_ratios,
         const std::vector<double>& mus) {
        return wmlmc::normalized_cost_mlmc(rhos, sigma_ratios, mus).deltas;
      },
      py::arg("rhos"), py::arg("sigma_ratios"), py::arg("mus"),
      "Normalized square-root cost sequence of plain MLMC.");
}

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wmlmc/level_stats.hpp"
#include "wmlmc/payoff.hpp"
#include "wmlmc/planner.hpp"
#include "wmlmc/sde.hpp"

namespace wmlmc {

enum class Method { MLMC, WMLMC, SingleLevel };

struct RunConfig {
  ModelSpec model;
  SchemeSpec scheme;
  PayoffSpec payoff;
  double target_mse = 1e-4;  // epsilon^2
  int pilot_n = 20;
  int max_level = 14;
  std::uint64_t seed = 1;
  Method method = Method::WMLMC;
  double error_split = 0.5;  // share of epsilon^2 assigned to the variance
  int threads = 1;
  int initial_levels = 3;
};

struct LevelBreakdown {
  int level = 0;
  long long n_samples = 0;
  double cost = 0.0;
  double theta = 0.0;
  double big_theta = 0.0;
  double eta = 0.0;
};

struct EstimatorResult {
  double value = 0.0;
  std::vector<LevelBreakdown> levels;
  double total_cost = 0.0;
  double alpha_hat = 0.0;  // fitted bias decay rate
  double beta_hat = 0.0;   // fitted variance decay rate
  double gamma_hat = 0.0;  // fitted cost growth rate
  double achieved_variance = 0.0;
  double bias_estimate = 0.0;
  int final_level = 0;
  bool converged = false;
  bool degenerate = false;  // zero variance everywhere
  long long rejected = 0;
};

// Draws `count` coupled samples [first_index, first_index + count) at one
// level into a fresh accumulator. Deterministic for any thread count: the
// stream is split into fixed blocks merged in index order.
MomentAccumulator sample_level(const ModelSpec& model, const SchemeSpec& scheme,
                               const PayoffSpec& payoff, int level,
                               std::uint64_t seed, long long first_index,
                               long long count, int threads,
                               long long* rejected = nullptr);

std::vector<LevelMoments> estimate_moments(const ModelSpec& model,
                                           const SchemeSpec& scheme,
                                           const PayoffSpec& payoff, int max_level,
                                           long long n_per_level, std::uint64_t seed,
                                           int threads);

// Remaining-bias estimate at the finest level from a weighted log-linear
// fit of |mean Y_l| against l over the last few levels.
struct BiasEstimate {
  double bias = 0.0;
  double alpha_hat = 0.0;
};
BiasEstimate estimate_bias(std::span<const LevelMoments> moments);

// Adaptive target-MSE loop: pilot, plan, top up, extend levels until the
// estimated bias fits in its share of epsilon^2.
EstimatorResult run(const RunConfig& config);

struct SweepRow {
  double mse = 0.0;
  int level = 0;
  double cost_mlmc = 0.0;
  double cost_wmlmc = 0.0;
  double cost_single = 0.0;
  double ratio_mlmc_over_wmlmc = 0.0;
  int coarsest_mlmc = 0;
  int coarsest_wmlmc = 0;
};

// Planned costs for MLMC / WMLMC / single-level over an MSE grid, all from
// one shared moment table.
std::vector<SweepRow> sweep(const RunConfig& config, std::span<const double> mse_grid,
                            long long samples_per_level, int max_level);

nlohmann::json result_to_json(const EstimatorResult& r);

}  // namespace wmlmc

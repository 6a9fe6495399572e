#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "wmlmc/level_stats.hpp"

namespace wmlmc {

struct LevelPlan {
  double theta = 0.0;   // weight applied to the coarse payoff at this level
  double delta = 0.0;   // std dev of Y_l under that weight
  double e_cum = 0.0;   // square-root cumulative cost of the level-l estimator
  double alpha = 0.0;
  double beta = 0.0;
  bool active = true;   // false once a finer level resets the coarsest level
};

struct WmlmcPlan {
  std::vector<LevelPlan> levels;
  std::vector<double> big_theta;       // Theta^L_l cumulative weight products
  std::vector<long long> n_samples;    // rounded, 0 at deactivated levels
  std::vector<double> etas;            // per-level eta, copied from the moments
  double v = 0.0;                      // target standard deviation
  int coarsest = 0;                    // lowest level with nonzero samples

  double sqrt_cost() const { return levels.empty() ? 0.0 : levels.back().e_cum; }
  double planned_cost() const { return sqrt_cost() * sqrt_cost(); }
  // cost and variance with the rounded sample counts
  double rounded_cost() const;
  double predicted_variance() const;
};

// Standard MLMC allocation (the theta == 1 special case), with the
// coarsest-level test applied at every level: a level whose single-level
// cost undercuts the accumulated multilevel cost becomes the new coarsest
// level and deactivates everything below it.
WmlmcPlan mlmc_plan(std::span<const LevelMoments> moments, double v);

// Optimally weighted plan via the closed-form recursion: at each level
// either the weighted branch (when |rho_l| exceeds the cost threshold) or
// a reset to a fresh coarsest level.
WmlmcPlan wmlmc_plan(std::span<const LevelMoments> moments, double v);

// Same recursion with every level's weight pinned to a fixed value
// (resets still decided by cost comparison). forced_theta_plan(m, v, 1)
// must reproduce mlmc_plan exactly.
WmlmcPlan forced_theta_plan(std::span<const LevelMoments> moments, double v,
                            double theta);

// Brute-force minimiser of the one-level cost over theta in [-2, 2];
// dense grid plus local refinement. Test oracle for the closed form.
struct ThetaOraclePoint {
  double theta = 0.0;
  double cost = 0.0;  // minimal E^theta_l (square-root cost)
};
ThetaOraclePoint optimal_theta_oracle(double sigma_prev, double sigma, double rho,
                                      double eta, double e_prev, double v);

struct NormalizedCostSeq {
  std::vector<double> deltas;  // delta_0 .. delta_L, delta_0 = 1
  std::vector<double> mus;     // mu_1 .. mu_L
};

// delta-tilde recursion for the optimally weighted estimator.
NormalizedCostSeq normalized_cost_wmlmc(std::span<const double> rhos,
                                        std::span<const double> mus);

// MLMC analogue; sigma_ratios holds sigma_{l-1}/sigma_l.
NormalizedCostSeq normalized_cost_mlmc(std::span<const double> rhos,
                                       std::span<const double> sigma_ratios,
                                       std::span<const double> mus);

struct AssembledEstimate {
  double value = 0.0;
  double realized_cost = 0.0;        // sum N_l eta_l^2
  double predicted_variance = 0.0;   // sum (Theta_l delta_l)^2 / N_l
};

// P = sum_l Theta^L_l * avg_l over active levels. level_averages holds the
// mean of Y-tilde_l (already theta-weighted) per level, index-aligned with
// the plan.
AssembledEstimate assemble(const WmlmcPlan& plan,
                           std::span<const double> level_averages);

nlohmann::json plan_to_json(const WmlmcPlan& plan);

}  // namespace wmlmc

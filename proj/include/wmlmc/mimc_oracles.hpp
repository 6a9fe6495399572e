#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wmlmc/level_stats.hpp"
#include "wmlmc/mimc.hpp"
#include "wmlmc/rng.hpp"

namespace wmlmc {

// d = 1 oracle over a single-index moment table; reduces mimc planning to
// the closed-form level recursion.
class MomentChainOracle : public CovarianceOracle {
 public:
  explicit MomentChainOracle(std::vector<LevelMoments> moments)
      : moments_(std::move(moments)) {}
  double sigma2(const MultiIndex& lambda) const override;
  double cov_fine(const MultiIndex& lambda, const MultiIndex& nu) const override;
  double cov_coarse(const MultiIndex& lambda, const MultiIndex& nu,
                    const MultiIndex& nu2) const override;
  double eta(const MultiIndex& lambda) const override;

 private:
  std::vector<LevelMoments> moments_;
};

// Synthetic separable test model: P_lambda is a product over dimensions of
// U_i^(k) = mean_{i,k} + shared_i Z_i + noise_{i,k} V_{i,k}, with
// mean_{i,k} = base_i + bias_i 2^{-k} and noise_{i,k} = noise_i 2^{-k},
// Z and V standard normal and independent across dimensions. All
// covariances are available in closed form, and coupled samples of
// (P_lambda, {P^lambda_nu}) share the same (Z, V) draws.
struct SeparableModel {
  int dim = 2;
  std::vector<double> base;    // per-dimension limit mean
  std::vector<double> bias;    // per-dimension mean offset scale
  std::vector<double> shared;  // loading on the shared normal
  std::vector<double> noise;   // level-noise scale
  std::vector<double> gamma;   // per-dimension cost growth rate

  static SeparableModel standard(int dim);

  double level_mean(int i, int k) const;
  double level_noise(int i, int k) const;
  double mean(const MultiIndex& lambda) const;
  double second_moment_1d(int i, int k, int k2) const;
  double cost_eta(const MultiIndex& lambda) const;

  // One coupled draw: value of P at `index` for each requested index, all
  // from the same (Z, V) lattice. Indices must satisfy index <= lambda.
  std::vector<double> sample_coupled(const MultiIndex& lambda,
                                     std::span<const MultiIndex> indices,
                                     CounterRng& rng) const;
};

class SeparableOracle : public CovarianceOracle {
 public:
  explicit SeparableOracle(SeparableModel model) : model_(std::move(model)) {}
  double sigma2(const MultiIndex& lambda) const override;
  double cov_fine(const MultiIndex& lambda, const MultiIndex& nu) const override;
  double cov_coarse(const MultiIndex& lambda, const MultiIndex& nu,
                    const MultiIndex& nu2) const override;
  double eta(const MultiIndex& lambda) const override;
  const SeparableModel& model() const { return model_; }

 private:
  double cov(const MultiIndex& a, const MultiIndex& b) const;
  SeparableModel model_;
};

// Pilot-sampled covariance table for the separable model: pilot_n coupled
// draws per node estimate each node's covariance block.
TableOracle estimate_separable_oracle(const SeparableModel& model,
                                      const MultiIndex& Lambda, long long pilot_n,
                                      std::uint64_t seed);

}  // namespace wmlmc

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "wmlmc/rng.hpp"

namespace wmlmc {

enum class ModelFamily { GBM, IGBM, CIR };
enum class SchemeKind { EulerMaruyama, Milstein };

struct ModelSpec {
  ModelFamily family = ModelFamily::GBM;
  double mu = 0.05;           // GBM drift rate
  double kappa = 2.0;         // mean-reversion speed (IGBM, CIR)
  double mean_level = 100.0;  // mean-reversion level (IGBM, CIR)
  double vol = 0.2;
  double s0 = 100.0;
  double horizon = 1.0;
  double rate = 0.05;

  static ModelSpec gbm(double mu = 0.05, double vol = 0.2);
  static ModelSpec igbm(double kappa = 2.0, double mean = 100.0, double vol = 0.2);
  static ModelSpec cir(double kappa = 2.0, double mean = 100.0, double vol = 0.2);
};

struct SchemeSpec {
  SchemeKind kind = SchemeKind::EulerMaruyama;
  int refinement = 2;  // grid ratio M between consecutive levels
  int base_steps = 1;  // J_0
  bool antithetic = false;

  long long steps_at(int level) const {
    long long j = base_steps;
    for (int l = 0; l < level; ++l) j *= refinement;
    return j;
  }
};

struct Coefficients {
  double drift;
  double vol;
  double vol_prime;
};

// Drift, volatility and volatility derivative at state s. CIR uses full
// truncation: max(s,0) inside the square root and in the drift, the state
// itself is never clamped.
Coefficients eval_coefficients(const ModelSpec& model, double s);

struct PathSummary {
  double terminal = 0.0;
  double running_mean = 0.0;  // (1/J) * sum_{j=1..J} S_j
  long long steps = 0;
};

// Coarse-grid data needed by the interpolated Asian coarse payoff: the
// coarse nodes S_0..S_Jc and the fine Brownian increments that were summed
// in blocks of M to drive them.
struct CoarseDetail {
  std::vector<double> nodes;
  std::vector<double> fine_increments;
  double h_coarse = 0.0;
  int refinement = 2;
};

struct CoupledSample {
  PathSummary fine;
  std::optional<PathSummary> coarse;  // absent at the coarsest level
  double cost_units = 0.0;            // fine steps + coarse steps (x2 antithetic)
  // antithetic mirror paths, present when the scheme requests them
  std::optional<PathSummary> fine_anti;
  std::optional<PathSummary> coarse_anti;
  std::optional<CoarseDetail> detail;
  std::optional<CoarseDetail> detail_anti;
};

struct NonFiniteSampleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Advance one path over the given increments with constant step h.
// Throws NonFiniteSampleError if the state overflows.
PathSummary simulate_path(const ModelSpec& model, SchemeKind kind, double h,
                          std::span<const double> increments,
                          std::vector<double>* nodes = nullptr);

struct SamplerOptions {
  bool record_coarse_detail = false;  // needed for Asian coarse payoffs
};

// Draws J_l Gaussian increments from rng, advances the fine path, and for
// level > 0 the embedded coarse path from the block-summed increments.
CoupledSample simulate_coupled(const ModelSpec& model, const SchemeSpec& scheme,
                               int level, CounterRng& rng,
                               const SamplerOptions& opts = {});

}  // namespace wmlmc

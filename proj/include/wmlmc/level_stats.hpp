#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace wmlmc {

struct InsufficientDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Finalized per-level statistics consumed by the planners.
// sigma_coarse and rho are absent at the coarsest simulated level.
struct LevelMoments {
  int level = 0;
  double sigma_fine = 0.0;
  std::optional<double> sigma_coarse;
  std::optional<double> rho;
  double eta = 0.0;    // sqrt(mean cost units per sample)
  double mean_fine = 0.0;
  double mean_coarse = 0.0;
  double mean_y = 0.0;  // mean of P_l - P^l_{l-1} (P_0 at level 0)
  long long n = 0;

  // std dev of Y_l = fine - theta * coarse for a given weight
  double delta_theta(double theta) const;
};

// Streaming bivariate moment accumulator (Welford updates, Chan merge).
// Single-writer; cross-thread aggregation goes through merge().
class MomentAccumulator {
 public:
  void update(double fine_payoff, std::optional<double> coarse_payoff, double cost);
  void merge(const MomentAccumulator& other);
  LevelMoments finalize() const;  // throws InsufficientDataError if n < 2

  long long count() const { return n_; }
  double total_cost() const { return cost_; }
  bool has_coarse() const { return has_coarse_; }
  int level = 0;

 private:
  long long n_ = 0;
  bool has_coarse_ = false;
  double mean_f_ = 0.0, m2_f_ = 0.0;
  double mean_c_ = 0.0, m2_c_ = 0.0;
  double cxy_ = 0.0;  // centered cross moment
  double cost_ = 0.0;
};

void to_json(nlohmann::json& j, const LevelMoments& m);
void from_json(const nlohmann::json& j, LevelMoments& m);

// One row per level, ascending; planners can run offline on these tables.
nlohmann::json moments_to_json(const std::vector<LevelMoments>& table);
std::vector<LevelMoments> moments_from_json(const nlohmann::json& j);

}  // namespace wmlmc

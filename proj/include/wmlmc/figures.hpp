#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wmlmc/driver.hpp"

namespace wmlmc {

struct FigureOptions {
  std::string out_dir = ".";
  long long samples_per_level = 100000;
  std::uint64_t seed = 1;
  int threads = 1;
  int replications = 100;  // repeated-run histogram figure
};

// CSV cell with 12 significant digits, '.' decimal point.
std::string csv_number(double x);

// Per-prefix planned costs from one moment table: one row per finest level,
// with MLMC / WMLMC / single-level costs at target std dev v and the chosen
// coarsest levels.
struct PrefixCostRow {
  int level = 0;
  double cost_mlmc = 0.0;
  double cost_wmlmc = 0.0;
  double cost_single = 0.0;
  int coarsest_mlmc = 0;
  int coarsest_wmlmc = 0;
};
std::vector<PrefixCostRow> prefix_costs(std::span<const LevelMoments> moments,
                                        double v);

// Writes the dataset(s) for one figure ("fig1".."fig7") into out_dir.
// Returns the list of files written.
std::vector<std::string> write_figure(const std::string& which,
                                      const FigureOptions& opts);

const std::vector<std::string>& figure_names();

}  // namespace wmlmc

#include "wmlmc/figures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace wmlmc {

namespace {

constexpr double kMuHalf = 0.70710678118654752;  // eta ratio for M = 2
constexpr double kRhoStar = 0.70710678118654752 + 0.25;  // MLMC threshold at mu = 1/sqrt(2)

std::string join_path(const std::string& dir, const std::string& name) {
  if (dir.empty() || dir == ".") return name;
  return dir.back() == '/' ? dir + name : dir + "/" + name;
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << header << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ",";
      out << row[i];
    }
    out << "\n";
  }
}

std::vector<double> rho_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 400; ++i) grid.push_back(i / 400.0);
  grid.push_back(kRhoStar);  // the exact MLMC reset threshold
  std::sort(grid.begin(), grid.end());
  return grid;
}

std::vector<std::string> analytic_figure(const std::string& path, int n_levels) {
  std::vector<std::vector<std::string>> rows;
  for (double rho : rho_grid()) {
    std::vector<double> rhos(static_cast<std::size_t>(n_levels), rho);
    std::vector<double> mus(static_cast<std::size_t>(n_levels), kMuHalf);
    std::vector<double> ones(static_cast<std::size_t>(n_levels), 1.0);
    const double d_mlmc = normalized_cost_mlmc(rhos, ones, mus).deltas.back();
    const double d_wmlmc = normalized_cost_wmlmc(rhos, mus).deltas.back();
    rows.push_back({csv_number(rho), csv_number(d_mlmc * d_mlmc),
                    csv_number(d_wmlmc * d_wmlmc),
                    csv_number((d_mlmc * d_mlmc) / (d_wmlmc * d_wmlmc))});
  }
  write_csv(path, "rho,delta2_mlmc,delta2_wmlmc,ratio", rows);
  return {path};
}

struct McFigure {
  RunConfig config;
  int max_level = 12;
};

McFigure mc_figure_setup(const std::string& which) {
  McFigure fig;
  if (which == "fig3") {
    fig.config.model = ModelSpec::gbm();
    fig.config.scheme = {SchemeKind::Milstein, 2, 1, true};
    fig.config.payoff = {PayoffKind::Asian, 100.0};
    fig.max_level = 12;
  } else if (which == "fig4") {
    fig.config.model = ModelSpec::igbm();
    fig.config.scheme = {SchemeKind::Milstein, 2, 1, true};
    fig.config.payoff = {PayoffKind::Call, 100.0};
    fig.max_level = 12;
  } else if (which == "fig5") {
    fig.config.model = ModelSpec::cir();
    fig.config.scheme = {SchemeKind::Milstein, 4, 1, true};
    fig.config.payoff = {PayoffKind::Call, 100.0};
    fig.max_level = 6;
  } else if (which == "fig6") {
    fig.config.model = ModelSpec::gbm();
    fig.config.scheme = {SchemeKind::EulerMaruyama, 4, 1, true};
    fig.config.payoff = {PayoffKind::Digital, 100.0};
    fig.max_level = 6;
  } else {
    throw std::invalid_argument("unknown figure: " + which);
  }
  return fig;
}

std::vector<std::string> mc_figure(const std::string& which, const FigureOptions& opts) {
  const auto fig = mc_figure_setup(which);
  const auto moments =
      estimate_moments(fig.config.model, fig.config.scheme, fig.config.payoff,
                       fig.max_level, opts.samples_per_level, opts.seed, opts.threads);
  const double v = std::sqrt(0.5e-4);  // plan structure is invariant to this scale

  std::vector<std::string> written;

  std::vector<std::vector<std::string>> mrows;
  for (const auto& m : moments)
    mrows.push_back({std::to_string(m.level), std::to_string(m.n),
                     csv_number(m.sigma_fine), csv_number(m.sigma_coarse.value_or(0.0)),
                     csv_number(m.rho.value_or(0.0)), csv_number(m.eta),
                     csv_number(m.mean_y)});
  auto mpath = join_path(opts.out_dir, which + "_moments.csv");
  write_csv(mpath, "level,n,sigma_fine,sigma_coarse,rho,eta,mean_y", mrows);
  written.push_back(mpath);

  const auto pm = mlmc_plan(moments, v);
  const auto pw = wmlmc_plan(moments, v);
  std::vector<std::vector<std::string>> prows;
  for (std::size_t l = 0; l < moments.size(); ++l)
    prows.push_back({std::to_string(l), csv_number(pm.levels[l].theta),
                     std::to_string(pm.n_samples[l]), csv_number(pw.levels[l].theta),
                     csv_number(pw.big_theta[l]), std::to_string(pw.n_samples[l])});
  auto ppath = join_path(opts.out_dir, which + "_plan.csv");
  write_csv(ppath, "level,theta_mlmc,n_mlmc,theta_wmlmc,big_theta_wmlmc,n_wmlmc",
            prows);
  written.push_back(ppath);

  std::vector<std::vector<std::string>> crows;
  for (const auto& row : prefix_costs(moments, v))
    crows.push_back({std::to_string(row.level), csv_number(row.cost_mlmc),
                     csv_number(row.cost_wmlmc), csv_number(row.cost_single),
                     csv_number(row.cost_mlmc / row.cost_single),
                     csv_number(row.cost_wmlmc / row.cost_single),
                     csv_number(row.cost_mlmc / row.cost_wmlmc),
                     std::to_string(row.coarsest_mlmc),
                     std::to_string(row.coarsest_wmlmc)});
  auto cpath = join_path(opts.out_dir, which + "_costs.csv");
  write_csv(cpath,
            "level,cost_mlmc,cost_wmlmc,cost_single,norm_mlmc,norm_wmlmc,ratio,"
            "coarsest_mlmc,coarsest_wmlmc",
            crows);
  written.push_back(cpath);
  return written;
}

std::vector<std::string> histogram_figure(const FigureOptions& opts) {
  RunConfig base;
  base.model = ModelSpec::igbm();
  base.scheme = {SchemeKind::Milstein, 2, 1, true};
  base.payoff = {PayoffKind::Call, 100.0};
  base.target_mse = 1e-5;
  base.threads = opts.threads;

  std::vector<double> val_m, val_w, cost_m, cost_w;
  std::vector<std::vector<std::string>> erows;
  for (int rep = 0; rep < opts.replications; ++rep) {
    base.seed = derive_key({opts.seed, static_cast<std::uint64_t>(rep)});
    base.method = Method::MLMC;
    auto rm = run(base);
    base.method = Method::WMLMC;
    auto rw = run(base);
    val_m.push_back(rm.value);
    val_w.push_back(rw.value);
    cost_m.push_back(rm.total_cost);
    cost_w.push_back(rw.total_cost);
    erows.push_back({std::to_string(rep), csv_number(rm.value), csv_number(rm.total_cost),
                     csv_number(rw.value), csv_number(rw.total_cost)});
  }

  std::vector<std::string> written;
  auto epath = join_path(opts.out_dir, "fig7_estimates.csv");
  write_csv(epath, "rep,value_mlmc,cost_mlmc,value_wmlmc,cost_wmlmc", erows);
  written.push_back(epath);

  double lo = val_m[0], hi = val_m[0];
  for (double x : val_m) lo = std::min(lo, x), hi = std::max(hi, x);
  for (double x : val_w) lo = std::min(lo, x), hi = std::max(hi, x);
  if (!(hi > lo)) hi = lo + 1e-12;
  constexpr int kBins = 20;
  std::vector<long long> hist_m(kBins, 0), hist_w(kBins, 0);
  auto bin_of = [&](double x) {
    int b = static_cast<int>((x - lo) / (hi - lo) * kBins);
    return std::clamp(b, 0, kBins - 1);
  };
  for (double x : val_m) ++hist_m[static_cast<std::size_t>(bin_of(x))];
  for (double x : val_w) ++hist_w[static_cast<std::size_t>(bin_of(x))];
  std::vector<std::vector<std::string>> hrows;
  for (int b = 0; b < kBins; ++b)
    hrows.push_back({csv_number(lo + (hi - lo) * b / kBins),
                     csv_number(lo + (hi - lo) * (b + 1) / kBins),
                     std::to_string(hist_m[static_cast<std::size_t>(b)]),
                     std::to_string(hist_w[static_cast<std::size_t>(b)])});
  auto hpath = join_path(opts.out_dir, "fig7_hist.csv");
  write_csv(hpath, "bin_lo,bin_hi,count_mlmc,count_wmlmc", hrows);
  written.push_back(hpath);

  auto mean_of = [](const std::vector<double>& xs) {
    double s = 0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
  };
  auto var_of = [&](const std::vector<double>& xs) {
    const double m = mean_of(xs);
    double s = 0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
  };
  std::vector<std::vector<std::string>> srows = {
      {"mlmc", csv_number(mean_of(val_m)), csv_number(var_of(val_m)),
       csv_number(mean_of(cost_m))},
      {"wmlmc", csv_number(mean_of(val_w)), csv_number(var_of(val_w)),
       csv_number(mean_of(cost_w))}};
  auto spath = join_path(opts.out_dir, "fig7_summary.csv");
  write_csv(spath, "method,mean,variance,mean_cost", srows);
  written.push_back(spath);
  return written;
}

}  // namespace

std::string csv_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::vector<PrefixCostRow> prefix_costs(std::span<const LevelMoments> moments,
                                        double v) {
  std::vector<PrefixCostRow> rows;
  for (std::size_t top = 0; top < moments.size(); ++top) {
    std::span<const LevelMoments> sub(moments.data(), top + 1);
    const auto pm = mlmc_plan(sub, v);
    const auto pw = wmlmc_plan(sub, v);
    const double e_single = moments[top].sigma_fine * moments[top].eta / v;
    rows.push_back({static_cast<int>(top), pm.planned_cost(), pw.planned_cost(),
                    e_single * e_single, pm.coarsest, pw.coarsest});
  }
  return rows;
}

const std::vector<std::string>& figure_names() {
  static const std::vector<std::string> names = {"fig1", "fig2", "fig3", "fig4",
                                                 "fig5", "fig6", "fig7"};
  return names;
}

std::vector<std::string> write_figure(const std::string& which,
                                      const FigureOptions& opts) {
  if (which == "fig1")
    return analytic_figure(join_path(opts.out_dir, "fig1.csv"), 1);
  if (which == "fig2")
    return analytic_figure(join_path(opts.out_dir, "fig2.csv"), 2);
  if (which == "fig7") return histogram_figure(opts);
  return mc_figure(which, opts);
}

}  // namespace wmlmc

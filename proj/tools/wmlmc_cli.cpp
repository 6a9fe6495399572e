// Command-line front end: adaptive estimation, offline planning, figure
// datasets and multi-index planning. Exit codes: 0 success, 2 bad input
// (config/schema/CLI), 3 non-convergence (partial output still written).
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wmlmc/config.hpp"
#include "wmlmc/driver.hpp"
#include "wmlmc/figures.hpp"
#include "wmlmc/mimc.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 2;
constexpr int kExitNotConverged = 3;

std::string default_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("WMLMC_OUT_DIR"); env && *env) return env;
  return ".";
}

std::string join_path(const std::string& dir, const std::string& name) {
  if (dir.empty() || dir == ".") return name;
  return dir.back() == '/' ? dir + name : dir + "/" + name;
}

void ensure_dir(const std::string& dir) {
  if (!dir.empty() && dir != ".") std::filesystem::create_directories(dir);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << text;
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw wmlmc::ConfigError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i)
      if (text[i] == '\n') ++line;
    throw wmlmc::ConfigError(path + ":" + std::to_string(line) + ": " + e.what());
  }
}

std::string levels_csv(const wmlmc::EstimatorResult& result, const wmlmc::RunConfig& cfg) {
  // delta per level is re-derived from the plan weights embedded in the result
  std::ostringstream out;
  out << "level,n_samples,theta,big_theta,eta,cost\n";
  for (const auto& lb : result.levels)
    out << lb.level << "," << lb.n_samples << "," << wmlmc::csv_number(lb.theta) << ","
        << wmlmc::csv_number(lb.big_theta) << "," << wmlmc::csv_number(lb.eta) << ","
        << wmlmc::csv_number(lb.cost) << "\n";
  (void)cfg;
  return out.str();
}

int cmd_estimate(const std::string& config_path, std::optional<std::uint64_t> seed,
                 std::optional<int> threads, const std::string& out_flag) {
  auto cfg = wmlmc::load_experiment_config(config_path);
  if (seed) cfg.run.seed = *seed;
  if (threads) cfg.run.threads = *threads;
  const std::string out_dir =
      default_out_dir(!out_flag.empty() ? out_flag : cfg.output.path);
  ensure_dir(out_dir);

  const auto result = wmlmc::run(cfg.run);
  if (cfg.output.format != "csv")
    write_text(join_path(out_dir, "result.json"),
               wmlmc::result_to_json(result).dump(2) + "\n");
  if (cfg.output.format != "json")
    write_text(join_path(out_dir, "levels.csv"), levels_csv(result, cfg.run));
  std::cout << "value " << wmlmc::csv_number(result.value) << " cost "
            << wmlmc::csv_number(result.total_cost) << " levels "
            << result.final_level + 1 << (result.converged ? "" : " (not converged)")
            << "\n";
  return result.converged ? kExitOk : kExitNotConverged;
}

int cmd_plan(const std::string& moments_path, double v, const std::string& out_flag) {
  const auto moments = wmlmc::moments_from_json(load_json(moments_path));
  const std::string out_dir = default_out_dir(out_flag);
  ensure_dir(out_dir);

  const auto pm = wmlmc::mlmc_plan(moments, v);
  const auto pw = wmlmc::wmlmc_plan(moments, v);
  write_text(join_path(out_dir, "plan_mlmc.json"), wmlmc::plan_to_json(pm).dump(2) + "\n");
  write_text(join_path(out_dir, "plan_wmlmc.json"), wmlmc::plan_to_json(pw).dump(2) + "\n");

  std::ostringstream summary;
  summary << "method,sqrt_cost,planned_cost,coarsest\n"
          << "mlmc," << wmlmc::csv_number(pm.sqrt_cost()) << ","
          << wmlmc::csv_number(pm.planned_cost()) << "," << pm.coarsest << "\n"
          << "wmlmc," << wmlmc::csv_number(pw.sqrt_cost()) << ","
          << wmlmc::csv_number(pw.planned_cost()) << "," << pw.coarsest << "\n"
          << "ratio," << wmlmc::csv_number(pm.sqrt_cost() / pw.sqrt_cost()) << ","
          << wmlmc::csv_number(pm.planned_cost() / pw.planned_cost()) << ",\n";
  write_text(join_path(out_dir, "plan_summary.csv"), summary.str());
  std::cout << "cost ratio mlmc/wmlmc "
            << wmlmc::csv_number(pm.planned_cost() / pw.planned_cost()) << "\n";
  return kExitOk;
}

int cmd_figures(const std::string& which, const wmlmc::FigureOptions& opts) {
  ensure_dir(opts.out_dir);
  std::vector<std::string> names;
  if (which == "all")
    names = wmlmc::figure_names();
  else
    names.push_back(which);
  for (const auto& name : names)
    for (const auto& file : wmlmc::write_figure(name, opts))
      std::cout << file << "\n";
  return kExitOk;
}

int cmd_mimc_plan(const std::string& oracle_path, const std::vector<int>& lambda,
                  double v, bool epsilon_signs, const std::string& out_flag) {
  const auto oracle = wmlmc::TableOracle::from_json(load_json(oracle_path));
  wmlmc::MimcOptions opts;
  opts.v = v;
  opts.force_epsilon_signs = epsilon_signs;
  const auto plan = wmlmc::mimc_plan(wmlmc::MultiIndex(lambda), oracle, opts);
  const std::string out_dir = default_out_dir(out_flag);
  ensure_dir(out_dir);
  write_text(join_path(out_dir, "mimc_plan.json"),
             wmlmc::mimc_plan_to_json(plan).dump(2) + "\n");
  std::cout << "sqrt cost " << wmlmc::csv_number(plan.sqrt_cost()) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weighted multilevel / multi-index Monte Carlo toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir, moments_path, oracle_path, figure = "all";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  long long samples_per_level = 100000;
  int replications = 100;
  double v = 0.01;
  std::vector<int> lambda;
  bool epsilon_signs = false;

  auto* est = app.add_subcommand("estimate", "adaptive estimation to a target MSE");
  est->add_option("--config", config_path, "experiment config (JSON)")->required();
  est->add_option("--seed", seed, "override the config seed");
  est->add_option("--threads", threads, "override the worker count");
  est->add_option("--out", out_dir, "output directory");

  auto* plan = app.add_subcommand("plan", "offline MLMC/WMLMC planning from a moment table");
  plan->add_option("moments", moments_path, "level moments table (JSON)")->required();
  plan->add_option("--v", v, "target standard deviation")->required();
  plan->add_option("--out", out_dir, "output directory");

  auto* figs = app.add_subcommand("figures", "figure datasets (CSV)");
  figs->add_option("which", figure, "fig1..fig7 or all");
  figs->add_option("--out", out_dir, "output directory");
  figs->add_option("--seed", seed, "sampling seed");
  figs->add_option("--threads", threads, "worker count");
  figs->add_option("--samples-per-level", samples_per_level, "moment-table sample count");
  figs->add_option("--replications", replications, "repeated-run count (fig7)");

  auto* mimc = app.add_subcommand("mimc-plan", "multi-index planning from an oracle table");
  mimc->add_option("--oracle", oracle_path, "covariance oracle table (JSON)")->required();
  mimc->add_option("--Lambda", lambda, "finest multi-index, one entry per dimension")
      ->required();
  mimc->add_option("--v", v, "target standard deviation");
  mimc->add_flag("--epsilon-signs", epsilon_signs, "force unweighted sign weights");
  mimc->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (est->parsed()) return cmd_estimate(config_path, seed, threads, out_dir);
    if (plan->parsed()) return cmd_plan(moments_path, v, out_dir);
    if (figs->parsed()) {
      wmlmc::FigureOptions opts;
      opts.out_dir = default_out_dir(out_dir);
      opts.samples_per_level = samples_per_level;
      opts.seed = seed.value_or(1);
      opts.threads = threads.value_or(1);
      opts.replications = replications;
      return cmd_figures(figure, opts);
    }
    if (mimc->parsed())
      return cmd_mimc_plan(oracle_path, lambda, v, epsilon_signs, out_dir);
  } catch (const wmlmc::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitBadInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}

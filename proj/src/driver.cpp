#include "wmlmc/driver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace wmlmc {

namespace {

constexpr long long kBlock = 4096;  // fixed accumulation block, merge order is by index

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  bool ok = false;
};

LineFit fit_line(std::span<const double> xs, std::span<const double> ys,
                 std::span<const double> ws) {
  LineFit fit;
  if (xs.size() < 2) return fit;
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sw += ws[i];
    sx += ws[i] * xs[i];
    sy += ws[i] * ys[i];
    sxx += ws[i] * xs[i] * xs[i];
    sxy += ws[i] * xs[i] * ys[i];
  }
  const double det = sw * sxx - sx * sx;
  if (det <= 0.0) return fit;
  fit.slope = (sw * sxy - sx * sy) / det;
  fit.intercept = (sxx * sy - sx * sxy) / det;
  fit.ok = true;
  return fit;
}

// slope of log2(values) against level, refined levels only
double fit_rate(std::span<const LevelMoments> moments, double (*value)(const LevelMoments&)) {
  std::vector<double> xs, ys, ws;
  for (std::size_t l = 1; l < moments.size(); ++l) {
    double m = value(moments[l]);
    if (!(m > 0.0) || !std::isfinite(m)) continue;
    xs.push_back(static_cast<double>(moments[l].level));
    ys.push_back(std::log2(m));
    ws.push_back(1.0);
  }
  auto fit = fit_line(xs, ys, ws);
  return fit.ok ? fit.slope : 0.0;
}

WmlmcPlan single_level_plan(std::span<const LevelMoments> moments, double v) {
  WmlmcPlan plan;
  plan.v = v;
  const std::size_t n = moments.size();
  plan.levels.resize(n);
  for (auto& lp : plan.levels) lp.active = false;
  const auto& top = moments[n - 1];
  auto& lp = plan.levels[n - 1];
  lp.theta = 0.0;
  lp.delta = top.sigma_fine;
  lp.e_cum = top.sigma_fine * top.eta / v;
  lp.alpha = top.sigma_fine * top.sigma_fine / (v * v);
  lp.active = true;
  plan.big_theta.assign(n, 0.0);
  plan.big_theta[n - 1] = 1.0;
  plan.etas.resize(n);
  for (std::size_t l = 0; l < n; ++l) plan.etas[l] = moments[l].eta;
  plan.n_samples.assign(n, 0);
  plan.n_samples[n - 1] = std::max(1LL, std::llround(lp.alpha));
  plan.coarsest = static_cast<int>(n) - 1;
  return plan;
}

WmlmcPlan make_plan(Method method, std::span<const LevelMoments> moments, double v) {
  switch (method) {
    case Method::MLMC:
      return mlmc_plan(moments, v);
    case Method::WMLMC:
      return wmlmc_plan(moments, v);
    case Method::SingleLevel:
      return single_level_plan(moments, v);
  }
  throw std::logic_error("unknown method");
}

}  // namespace

MomentAccumulator sample_level(const ModelSpec& model, const SchemeSpec& scheme,
                               const PayoffSpec& payoff, int level,
                               std::uint64_t seed, long long first_index,
                               long long count, int threads, long long* rejected) {
  MomentAccumulator total;
  total.level = level;
  if (count <= 0) return total;

  const long long nblocks = (count + kBlock - 1) / kBlock;
  const int nthreads =
      static_cast<int>(std::min<long long>(std::max(threads, 1), nblocks));
  std::vector<MomentAccumulator> accs(static_cast<std::size_t>(nblocks));
  std::vector<long long> rejs(static_cast<std::size_t>(nblocks), 0);
  const SamplerOptions opts{payoff.kind == PayoffKind::Asian};

  auto work = [&](int t) {
    for (long long blk = t; blk < nblocks; blk += nthreads) {
      auto& acc = accs[static_cast<std::size_t>(blk)];
      acc.level = level;
      const long long lo = first_index + blk * kBlock;
      const long long hi = std::min(first_index + count, lo + kBlock);
      for (long long i = lo; i < hi; ++i) {
        auto rng = make_substream(seed, static_cast<std::uint64_t>(level),
                                  static_cast<std::uint64_t>(i));
        try {
          auto sample = simulate_coupled(model, scheme, level, rng, opts);
          auto pp = payoff_pair(payoff, model, sample);
          acc.update(pp.fine,
                     pp.has_coarse ? std::optional<double>(pp.coarse) : std::nullopt,
                     sample.cost_units);
        } catch (const NonFiniteSampleError&) {
          ++rejs[static_cast<std::size_t>(blk)];
        }
      }
    }
  };

  if (nthreads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }

  long long rej = 0;
  for (long long blk = 0; blk < nblocks; ++blk) {
    total.merge(accs[static_cast<std::size_t>(blk)]);
    rej += rejs[static_cast<std::size_t>(blk)];
  }
  if (rejected) *rejected += rej;
  return total;
}

std::vector<LevelMoments> estimate_moments(const ModelSpec& model,
                                           const SchemeSpec& scheme,
                                           const PayoffSpec& payoff, int max_level,
                                           long long n_per_level, std::uint64_t seed,
                                           int threads) {
  std::vector<LevelMoments> out;
  out.reserve(static_cast<std::size_t>(max_level) + 1);
  for (int l = 0; l <= max_level; ++l)
    out.push_back(
        sample_level(model, scheme, payoff, l, seed, 0, n_per_level, threads).finalize());
  return out;
}

BiasEstimate estimate_bias(std::span<const LevelMoments> moments) {
  BiasEstimate out;
  if (moments.size() < 2) return out;

  const std::size_t use = std::min<std::size_t>(3, moments.size() - 1);
  std::vector<double> xs, ys, ws;
  for (std::size_t l = moments.size() - use; l < moments.size(); ++l) {
    const auto& m = moments[l];
    const double mag = std::abs(m.mean_y);
    if (!(mag > 0.0) || !std::isfinite(mag)) continue;
    xs.push_back(static_cast<double>(m.level));
    ys.push_back(std::log2(mag));
    const double se = m.delta_theta(1.0) / std::sqrt(static_cast<double>(std::max(m.n, 1LL)));
    ws.push_back(se > 0.0 ? (mag * mag) / (se * se) : 1.0);
  }

  double alpha = 1.0;
  auto fit = fit_line(xs, ys, ws);
  if (fit.ok) alpha = -fit.slope;
  out.alpha_hat = alpha;

  // remaining bias at L: extrapolate each tail level forward and keep the
  // worst case, so one lucky small |mean Y_L| cannot end the run early
  const double a = std::max(alpha, 0.5);
  const double denom = std::pow(2.0, a) - 1.0;
  const int top = moments.back().level;
  for (std::size_t l = moments.size() - use; l < moments.size(); ++l) {
    const auto& m = moments[l];
    const double extrapolated =
        std::abs(m.mean_y) * std::pow(2.0, -a * (top - m.level)) / denom;
    out.bias = std::max(out.bias, extrapolated);
  }
  return out;
}

EstimatorResult run(const RunConfig& config) {
  if (config.pilot_n < 2) throw std::invalid_argument("pilot_n must be at least 2");
  if (!(config.target_mse > 0.0)) throw std::invalid_argument("target MSE must be positive");
  if (config.error_split <= 0.0 || config.error_split >= 1.0)
    throw std::invalid_argument("error split must lie in (0,1)");
  if (config.max_level < 0) throw std::invalid_argument("max_level must be >= 0");

  const double eps2 = config.target_mse;
  const double v = std::sqrt(eps2 * config.error_split);
  const double bias_budget2 = eps2 * (1.0 - config.error_split);

  int top = std::min(std::max(config.initial_levels - 1, 1), config.max_level);

  EstimatorResult result;
  std::vector<MomentAccumulator> accs;
  std::vector<long long> drawn;  // attempted indices, including rejected ones

  auto add_level = [&](int l) {
    accs.push_back(sample_level(config.model, config.scheme, config.payoff, l,
                                config.seed, 0, config.pilot_n, config.threads,
                                &result.rejected));
    drawn.push_back(config.pilot_n);
  };
  auto ensure = [&](std::size_t l, long long need) {
    while (accs[l].count() < need) {
      const long long add = need - accs[l].count();
      auto extra = sample_level(config.model, config.scheme, config.payoff,
                                static_cast<int>(l), config.seed, drawn[l], add,
                                config.threads, &result.rejected);
      drawn[l] += add;
      if (extra.count() == 0) break;  // everything rejected; give up on this level
      accs[l].merge(extra);
    }
  };
  auto finalize_all = [&] {
    std::vector<LevelMoments> m;
    m.reserve(accs.size());
    for (const auto& a : accs) m.push_back(a.finalize());
    return m;
  };

  for (int l = 0; l <= top; ++l) add_level(l);

  std::vector<LevelMoments> moments;
  WmlmcPlan plan;
  BiasEstimate bias;
  bool converged = false;
  bool degenerate = false;

  for (int outer = 0; outer < 4 * (config.max_level + 2); ++outer) {
    moments = finalize_all();
    degenerate = std::all_of(moments.begin(), moments.end(),
                             [](const LevelMoments& m) { return m.sigma_fine == 0.0; });
    if (degenerate) {
      converged = true;
      break;
    }

    for (int inner = 0; inner < 64; ++inner) {
      plan = make_plan(config.method, moments, v);
      bool changed = false;
      for (std::size_t l = 0; l < accs.size(); ++l) {
        if (plan.n_samples[l] > accs[l].count()) {
          ensure(l, plan.n_samples[l]);
          changed = true;
        }
      }
      if (!changed) break;
      moments = finalize_all();
    }

    bias = estimate_bias(moments);
    if (top == 0 || bias.bias * bias.bias <= bias_budget2) {
      converged = true;
      break;
    }
    if (top >= config.max_level) break;  // level budget exhausted
    ++top;
    add_level(top);
  }

  moments = finalize_all();
  plan = make_plan(config.method, moments, v);

  result.final_level = top;
  result.converged = converged;
  result.degenerate = degenerate;
  result.bias_estimate = bias.bias;
  result.alpha_hat = bias.alpha_hat;
  result.beta_hat = -fit_rate(moments, [](const LevelMoments& m) {
    double d = m.delta_theta(1.0);
    return d * d;
  });
  result.gamma_hat =
      fit_rate(moments, [](const LevelMoments& m) { return m.eta * m.eta; });

  for (std::size_t l = 0; l < moments.size(); ++l) {
    const auto& m = moments[l];
    if (plan.n_samples[l] > 0) {
      const double avg = m.mean_fine - plan.levels[l].theta * m.mean_coarse;
      result.value += plan.big_theta[l] * avg;
      const double term = plan.big_theta[l] * m.delta_theta(plan.levels[l].theta);
      result.achieved_variance += term * term / static_cast<double>(m.n);
    }
    result.total_cost += accs[l].total_cost();
    result.levels.push_back({m.level, m.n, accs[l].total_cost(), plan.levels[l].theta,
                             plan.big_theta[l], m.eta});
  }
  return result;
}

std::vector<SweepRow> sweep(const RunConfig& config, std::span<const double> mse_grid,
                            long long samples_per_level, int max_level) {
  const auto moments = estimate_moments(config.model, config.scheme, config.payoff,
                                        max_level, samples_per_level, config.seed,
                                        config.threads);
  std::vector<double> bias(static_cast<std::size_t>(max_level) + 1,
                           std::numeric_limits<double>::infinity());
  for (int l = 1; l <= max_level; ++l)
    bias[static_cast<std::size_t>(l)] =
        estimate_bias({moments.data(), static_cast<std::size_t>(l) + 1}).bias;

  std::vector<SweepRow> rows;
  rows.reserve(mse_grid.size());
  for (double mse : mse_grid) {
    const double v = std::sqrt(mse * config.error_split);
    const double budget2 = mse * (1.0 - config.error_split);
    int level = max_level;
    for (int l = 1; l <= max_level; ++l) {
      if (bias[static_cast<std::size_t>(l)] * bias[static_cast<std::size_t>(l)] <=
          budget2) {
        level = l;
        break;
      }
    }
    std::span<const LevelMoments> sub(moments.data(), static_cast<std::size_t>(level) + 1);
    const auto pm = mlmc_plan(sub, v);
    const auto pw = wmlmc_plan(sub, v);
    const double e_single = moments[static_cast<std::size_t>(level)].sigma_fine *
                            moments[static_cast<std::size_t>(level)].eta / v;
    rows.push_back({mse, level, pm.planned_cost(), pw.planned_cost(),
                    e_single * e_single, pm.planned_cost() / pw.planned_cost(),
                    pm.coarsest, pw.coarsest});
  }
  return rows;
}

nlohmann::json result_to_json(const EstimatorResult& r) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& lb : r.levels)
    levels.push_back({{"level", lb.level},
                      {"n_samples", lb.n_samples},
                      {"cost", lb.cost},
                      {"theta", lb.theta},
                      {"big_theta", lb.big_theta},
                      {"eta", lb.eta}});
  return nlohmann::json{{"value", r.value},
                        {"total_cost", r.total_cost},
                        {"achieved_variance", r.achieved_variance},
                        {"bias_estimate", r.bias_estimate},
                        {"alpha_hat", r.alpha_hat},
                        {"beta_hat", r.beta_hat},
                        {"gamma_hat", r.gamma_hat},
                        {"final_level", r.final_level},
                        {"converged", r.converged},
                        {"degenerate", r.degenerate},
                        {"rejected", r.rejected},
                        {"levels", levels}};
}

}  // namespace wmlmc

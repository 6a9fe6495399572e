#include "wmlmc/planner.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace wmlmc {

namespace {

void validate_moments(std::span<const LevelMoments> moments, double v) {
  if (moments.empty()) throw std::invalid_argument("empty moments table");
  if (!(v > 0.0)) throw std::invalid_argument("target std dev must be positive");
  for (const auto& m : moments) {
    if (!std::isfinite(m.sigma_fine) || !std::isfinite(m.eta) || m.eta <= 0.0)
      throw std::invalid_argument("non-finite or non-positive moments");
    if (m.rho && std::abs(*m.rho) > 1.0)
      throw std::invalid_argument("|rho| > 1 in moments table");
  }
}

void finish_plan(WmlmcPlan& plan, std::span<const LevelMoments> moments) {
  const std::size_t n = plan.levels.size();
  plan.big_theta.assign(n, 0.0);
  plan.big_theta[n - 1] = 1.0;
  for (std::size_t l = n - 1; l-- > 0;)
    plan.big_theta[l] = plan.big_theta[l + 1] * plan.levels[l + 1].theta;
  plan.etas.resize(n);
  for (std::size_t l = 0; l < n; ++l) plan.etas[l] = moments[l].eta;

  const double e_total = plan.levels.back().e_cum;
  plan.n_samples.assign(n, 0);
  for (std::size_t l = 0; l < n; ++l) {
    if (!plan.levels[l].active || plan.big_theta[l] == 0.0) continue;
    double raw = e_total * plan.levels[l].delta * std::abs(plan.big_theta[l]) /
                 (plan.v * moments[l].eta);
    plan.n_samples[l] = std::max(1LL, std::llround(raw));
  }
}

void reset_at(WmlmcPlan& plan, std::size_t l, double sigma, double eta) {
  auto& lp = plan.levels[l];
  lp.theta = 0.0;
  lp.delta = sigma;
  lp.e_cum = sigma * eta / plan.v;
  lp.alpha = sigma * sigma / (plan.v * plan.v);
  lp.beta = 0.0;
  lp.active = true;
  for (std::size_t k = 0; k < l; ++k) plan.levels[k].active = false;
  plan.coarsest = static_cast<int>(l);
}

WmlmcPlan recursive_plan(std::span<const LevelMoments> moments, double v,
                         const double* forced_theta) {
  validate_moments(moments, v);
  WmlmcPlan plan;
  plan.v = v;
  plan.levels.resize(moments.size());
  reset_at(plan, 0, moments[0].sigma_fine, moments[0].eta);

  for (std::size_t l = 1; l < moments.size(); ++l) {
    const auto& m = moments[l];
    const double sigma = m.sigma_fine;
    const double sigma_prev = m.sigma_coarse.value_or(0.0);
    const double rho = m.rho.value_or(0.0);
    const double eta = m.eta;
    const double e_prev = plan.levels[l - 1].e_cum;
    const double e_reset = sigma * eta / v;

    double theta = 0.0, delta = sigma, e_cum = e_reset;
    bool weighted = false;
    if (forced_theta) {
      theta = *forced_theta;
      delta = m.delta_theta(theta);
      e_cum = (delta * eta + std::abs(theta) * e_prev * v) / v;
      weighted = theta != 0.0 && e_cum < e_reset;
    } else if (sigma_prev > 0.0) {
      const double q = v * e_prev / (sigma_prev * eta);
      if (std::abs(rho) > q) {
        weighted = true;
        delta = sigma * std::sqrt(1.0 - rho * rho) / std::sqrt(1.0 - q * q);
        theta = rho * sigma / sigma_prev -
                (rho < 0.0 ? -1.0 : 1.0) * delta * v * e_prev / (sigma_prev * sigma_prev * eta);
        e_cum = (delta * eta + std::abs(theta) * e_prev * v) / v;
      }
    }

    if (weighted) {
      auto& lp = plan.levels[l];
      lp.theta = theta;
      lp.delta = delta;
      lp.e_cum = e_cum;
      lp.alpha = e_cum * delta / (eta * v);
      lp.beta = e_cum * std::abs(theta) / e_prev;
      lp.active = true;
    } else {
      reset_at(plan, l, sigma, eta);
    }
  }
  finish_plan(plan, moments);
  return plan;
}

}  // namespace

double WmlmcPlan::rounded_cost() const {
  double c = 0.0;
  for (std::size_t l = 0; l < n_samples.size(); ++l)
    c += static_cast<double>(n_samples[l]) * etas[l] * etas[l];
  return c;
}

double WmlmcPlan::predicted_variance() const {
  double var = 0.0;
  for (std::size_t l = 0; l < n_samples.size(); ++l) {
    if (n_samples[l] <= 0) continue;
    double term = big_theta[l] * levels[l].delta;
    var += term * term / static_cast<double>(n_samples[l]);
  }
  return var;
}

WmlmcPlan mlmc_plan(std::span<const LevelMoments> moments, double v) {
  validate_moments(moments, v);
  WmlmcPlan plan;
  plan.v = v;
  plan.levels.resize(moments.size());
  reset_at(plan, 0, moments[0].sigma_fine, moments[0].eta);

  for (std::size_t l = 1; l < moments.size(); ++l) {
    const auto& m = moments[l];
    const double delta = m.delta_theta(1.0);
    const double e_prev = plan.levels[l - 1].e_cum;
    const double e_cont = (delta * m.eta + e_prev * v) / v;
    const double e_reset = m.sigma_fine * m.eta / v;
    if (e_cont < e_reset) {
      auto& lp = plan.levels[l];
      lp.theta = 1.0;
      lp.delta = delta;
      lp.e_cum = e_cont;
      lp.alpha = e_cont * delta / (m.eta * v);
      lp.beta = e_cont / e_prev;
      lp.active = true;
    } else {
      reset_at(plan, l, m.sigma_fine, m.eta);
    }
  }
  finish_plan(plan, moments);
  return plan;
}

WmlmcPlan wmlmc_plan(std::span<const LevelMoments> moments, double v) {
  return recursive_plan(moments, v, nullptr);
}

WmlmcPlan forced_theta_plan(std::span<const LevelMoments> moments, double v,
                            double theta) {
  return recursive_plan(moments, v, &theta);
}

ThetaOraclePoint optimal_theta_oracle(double sigma_prev, double sigma, double rho,
                                      double eta, double e_prev, double v) {
  auto cost = [&](double th) {
    double d2 = sigma * sigma - 2.0 * th * rho * sigma * sigma_prev +
                th * th * sigma_prev * sigma_prev;
    return (std::sqrt(std::max(d2, 0.0)) * eta + std::abs(th) * e_prev * v) / v;
  };

  constexpr int kGrid = 4001;
  constexpr double lo = -2.0, hi = 2.0;
  double best_x = 0.0, best_f = cost(0.0);  // the kink is always a candidate
  for (int i = 0; i < kGrid; ++i) {
    double x = lo + (hi - lo) * i / (kGrid - 1);
    double f = cost(x);
    if (f < best_f) {
      best_f = f;
      best_x = x;
    }
  }
  const double step = (hi - lo) / (kGrid - 1);
  double a = std::max(lo, best_x - step), b = std::min(hi, best_x + step);
  constexpr double kGolden = 0.6180339887498949;
  double x1 = b - kGolden * (b - a), x2 = a + kGolden * (b - a);
  double f1 = cost(x1), f2 = cost(x2);
  while (b - a > 1e-12) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = cost(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = cost(x2);
    }
  }
  double xm = 0.5 * (a + b), fm = cost(xm);
  if (best_f < fm) {
    xm = best_x;
    fm = best_f;
  }
  return {xm, fm};
}

NormalizedCostSeq normalized_cost_wmlmc(std::span<const double> rhos,
                                        std::span<const double> mus) {
  if (rhos.size() != mus.size())
    throw std::invalid_argument("rhos and mus must have equal length");
  NormalizedCostSeq out;
  out.mus.assign(mus.begin(), mus.end());
  out.deltas.assign(rhos.size() + 1, 1.0);
  for (std::size_t l = 0; l < rhos.size(); ++l) {
    const double rho = rhos[l], mu = mus[l], prev = out.deltas[l];
    if (std::abs(rho) > mu * prev) {
      out.deltas[l + 1] = mu * std::abs(rho) * prev +
                          std::sqrt(1.0 - rho * rho) *
                              std::sqrt(std::max(1.0 - mu * mu * prev * prev, 0.0));
    } else {
      out.deltas[l + 1] = 1.0;
    }
  }
  return out;
}

NormalizedCostSeq normalized_cost_mlmc(std::span<const double> rhos,
                                       std::span<const double> sigma_ratios,
                                       std::span<const double> mus) {
  if (rhos.size() != mus.size() || rhos.size() != sigma_ratios.size())
    throw std::invalid_argument("rhos, sigma_ratios and mus must have equal length");
  NormalizedCostSeq out;
  out.mus.assign(mus.begin(), mus.end());
  out.deltas.assign(rhos.size() + 1, 1.0);
  for (std::size_t l = 0; l < rhos.size(); ++l) {
    const double rho = rhos[l], mu = mus[l], s = sigma_ratios[l];
    const double prev = out.deltas[l];
    const double threshold = mu * prev + 0.5 * s * (1.0 - mu * mu * prev * prev);
    if (rho > threshold) {
      const double delta_ratio = std::sqrt(std::max(1.0 - 2.0 * rho * s + s * s, 0.0));
      out.deltas[l + 1] = s * mu * prev + delta_ratio;
    } else {
      out.deltas[l + 1] = 1.0;
    }
  }
  return out;
}

AssembledEstimate assemble(const WmlmcPlan& plan,
                           std::span<const double> level_averages) {
  if (level_averages.size() != plan.levels.size())
    throw std::invalid_argument("level averages missing for some plan levels");
  AssembledEstimate out;
  for (std::size_t l = 0; l < plan.levels.size(); ++l) {
    if (plan.n_samples[l] <= 0) continue;
    if (!std::isfinite(level_averages[l]))
      throw std::invalid_argument("non-finite level average at an active level");
    out.value += plan.big_theta[l] * level_averages[l];
    out.realized_cost += static_cast<double>(plan.n_samples[l]) * plan.etas[l] * plan.etas[l];
  }
  out.predicted_variance = plan.predicted_variance();
  return out;
}

nlohmann::json plan_to_json(const WmlmcPlan& plan) {
  nlohmann::json levels = nlohmann::json::array();
  for (std::size_t l = 0; l < plan.levels.size(); ++l) {
    const auto& lp = plan.levels[l];
    levels.push_back({{"level", l},
                      {"theta", lp.theta},
                      {"big_theta", plan.big_theta[l]},
                      {"delta", lp.delta},
                      {"e_cum", lp.e_cum},
                      {"alpha", lp.alpha},
                      {"beta", lp.beta},
                      {"eta", plan.etas[l]},
                      {"n_samples", plan.n_samples[l]},
                      {"active", lp.active}});
  }
  return nlohmann::json{{"v", plan.v},
                        {"coarsest", plan.coarsest},
                        {"sqrt_cost", plan.sqrt_cost()},
                        {"planned_cost", plan.planned_cost()},
                        {"predicted_variance", plan.predicted_variance()},
                        {"levels", levels}};
}

}  // namespace wmlmc

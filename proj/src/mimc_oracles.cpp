#include "wmlmc/mimc_oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace wmlmc {

namespace {

int chain_level(const MultiIndex& lambda) {
  if (lambda.dim() != 1)
    throw std::invalid_argument("MomentChainOracle needs d = 1 indices");
  return lambda[0];
}

}  // namespace

double MomentChainOracle::sigma2(const MultiIndex& lambda) const {
  const auto& m = moments_.at(static_cast<std::size_t>(chain_level(lambda)));
  return m.sigma_fine * m.sigma_fine;
}

double MomentChainOracle::cov_fine(const MultiIndex& lambda, const MultiIndex& nu) const {
  int l = chain_level(lambda);
  if (chain_level(nu) != l - 1)
    throw std::invalid_argument("chain oracle: nu must be the direct predecessor");
  const auto& m = moments_.at(static_cast<std::size_t>(l));
  return m.rho.value_or(0.0) * m.sigma_fine * m.sigma_coarse.value_or(0.0);
}

double MomentChainOracle::cov_coarse(const MultiIndex& lambda, const MultiIndex& nu,
                                     const MultiIndex& nu2) const {
  int l = chain_level(lambda);
  if (chain_level(nu) != l - 1 || chain_level(nu2) != l - 1)
    throw std::invalid_argument("chain oracle: nu must be the direct predecessor");
  double sc = moments_.at(static_cast<std::size_t>(l)).sigma_coarse.value_or(0.0);
  return sc * sc;
}

double MomentChainOracle::eta(const MultiIndex& lambda) const {
  return moments_.at(static_cast<std::size_t>(chain_level(lambda))).eta;
}

SeparableModel SeparableModel::standard(int dim) {
  SeparableModel m;
  m.dim = dim;
  for (int i = 0; i < dim; ++i) {
    m.base.push_back(1.0 + 0.1 * i);
    m.bias.push_back(0.4 / (1.0 + i));
    m.shared.push_back(0.5);
    m.noise.push_back(0.6 / (1.0 + 0.5 * i));
    m.gamma.push_back(1.0);
  }
  return m;
}

double SeparableModel::level_mean(int i, int k) const {
  return base[static_cast<std::size_t>(i)] +
         bias[static_cast<std::size_t>(i)] * std::pow(2.0, -k);
}

double SeparableModel::level_noise(int i, int k) const {
  return noise[static_cast<std::size_t>(i)] * std::pow(2.0, -k);
}

double SeparableModel::mean(const MultiIndex& lambda) const {
  double m = 1.0;
  for (int i = 0; i < dim; ++i) m *= level_mean(i, lambda[i]);
  return m;
}

double SeparableModel::second_moment_1d(int i, int k, int k2) const {
  double a = shared[static_cast<std::size_t>(i)];
  double m = level_mean(i, k) * level_mean(i, k2) + a * a;
  if (k == k2) {
    double e = level_noise(i, k);
    m += e * e;
  }
  return m;
}

double SeparableModel::cost_eta(const MultiIndex& lambda) const {
  double log2_cost = 0.0;
  for (int i = 0; i < dim; ++i)
    log2_cost += gamma[static_cast<std::size_t>(i)] * lambda[i];
  return std::pow(2.0, 0.5 * log2_cost);
}

std::vector<double> SeparableModel::sample_coupled(const MultiIndex& lambda,
                                                   std::span<const MultiIndex> indices,
                                                   CounterRng& rng) const {
  // per-dimension U values for every level up to lambda_i, from one draw
  // order fixed by (dimension, level)
  std::vector<std::vector<double>> u(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    double z = rng.next_gaussian();
    auto& ui = u[static_cast<std::size_t>(i)];
    ui.resize(static_cast<std::size_t>(lambda[i]) + 1);
    for (int k = 0; k <= lambda[i]; ++k) {
      double v = rng.next_gaussian();
      ui[static_cast<std::size_t>(k)] =
          level_mean(i, k) + shared[static_cast<std::size_t>(i)] * z + level_noise(i, k) * v;
    }
  }
  std::vector<double> out;
  out.reserve(indices.size());
  for (const auto& idx : indices) {
    double p = 1.0;
    for (int i = 0; i < dim; ++i) p *= u[static_cast<std::size_t>(i)][static_cast<std::size_t>(idx[i])];
    out.push_back(p);
  }
  return out;
}

double SeparableOracle::cov(const MultiIndex& a, const MultiIndex& b) const {
  double joint = 1.0;
  for (int i = 0; i < model_.dim; ++i)
    joint *= model_.second_moment_1d(i, a[i], b[i]);
  return joint - model_.mean(a) * model_.mean(b);
}

double SeparableOracle::sigma2(const MultiIndex& lambda) const { return cov(lambda, lambda); }

double SeparableOracle::cov_fine(const MultiIndex& lambda, const MultiIndex& nu) const {
  return cov(lambda, nu);
}

double SeparableOracle::cov_coarse(const MultiIndex& /*lambda*/, const MultiIndex& nu,
                                   const MultiIndex& nu2) const {
  return cov(nu, nu2);
}

double SeparableOracle::eta(const MultiIndex& lambda) const {
  return model_.cost_eta(lambda);
}

TableOracle estimate_separable_oracle(const SeparableModel& model,
                                      const MultiIndex& Lambda, long long pilot_n,
                                      std::uint64_t seed) {
  nlohmann::json nodes = nlohmann::json::array();
  const auto all = box_below(Lambda);
  for (std::size_t node_id = 0; node_id < all.size(); ++node_id) {
    const auto& lambda = all[node_id];
    auto box = backward_box(lambda);
    std::vector<MultiIndex> indices{lambda};
    indices.insert(indices.end(), box.begin(), box.end());
    const std::size_t k = indices.size();

    std::vector<double> mean(k, 0.0), m2(k * k, 0.0);
    for (long long s = 0; s < pilot_n; ++s) {
      auto rng = CounterRng(derive_key({seed, node_id, static_cast<std::uint64_t>(s)}));
      auto values = model.sample_coupled(lambda, indices, rng);
      const double w = 1.0 / static_cast<double>(s + 1);
      std::vector<double> d(k);
      for (std::size_t a = 0; a < k; ++a) d[a] = values[a] - mean[a];
      for (std::size_t a = 0; a < k; ++a) mean[a] += d[a] * w;
      for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b)
          m2[a * k + b] += d[a] * (values[b] - mean[b]);
    }
    const double denom = static_cast<double>(pilot_n - 1);
    nlohmann::json cov_fine = nlohmann::json::array();
    nlohmann::json cov_coarse = nlohmann::json::array();
    for (std::size_t a = 1; a < k; ++a) {
      cov_fine.push_back({{"nu", indices[a].entries()}, {"value", m2[a] / denom}});
      for (std::size_t b = a; b < k; ++b)
        cov_coarse.push_back({{"nu", indices[a].entries()},
                              {"nu2", indices[b].entries()},
                              {"value", m2[a * k + b] / denom}});
    }
    nodes.push_back({{"lambda", lambda.entries()},
                     {"sigma2", m2[0] / denom},
                     {"eta", model.cost_eta(lambda)},
                     {"cov_fine", cov_fine},
                     {"cov_coarse", cov_coarse}});
  }
  return TableOracle::from_json(nlohmann::json{{"nodes", nodes}});
}

}  // namespace wmlmc

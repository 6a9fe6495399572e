#include "wmlmc/mimc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wmlmc/simplex.hpp"

namespace wmlmc {

std::string MultiIndex::str() const {
  std::string s = "(";
  for (int i = 0; i < dim(); ++i) {
    if (i) s += ",";
    s += std::to_string(entries_[static_cast<std::size_t>(i)]);
  }
  return s + ")";
}

std::vector<MultiIndex> backward_box(const MultiIndex& lambda) {
  const int d = lambda.dim();
  std::vector<MultiIndex> out;
  for (unsigned mask = 1; mask < (1u << d); ++mask) {
    std::vector<int> e(static_cast<std::size_t>(d));
    bool valid = true;
    for (int i = 0; i < d; ++i) {
      e[static_cast<std::size_t>(i)] = lambda[i] - ((mask >> i) & 1u ? 1 : 0);
      if (e[static_cast<std::size_t>(i)] < 0) valid = false;
    }
    if (valid) out.emplace_back(std::move(e));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<MultiIndex> box_below(const MultiIndex& lambda) {
  const int d = lambda.dim();
  std::vector<MultiIndex> out;
  std::vector<int> e(static_cast<std::size_t>(d), 0);
  while (true) {
    out.emplace_back(e);
    int i = d - 1;
    while (i >= 0 && e[static_cast<std::size_t>(i)] == lambda[i]) {
      e[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
    ++e[static_cast<std::size_t>(i)];
  }
  std::sort(out.begin(), out.end());
  return out;
}

int epsilon_sign(const MultiIndex& lambda, const MultiIndex& nu) {
  int diff = 0;
  for (int i = 0; i < lambda.dim(); ++i) {
    int d = lambda[i] - nu[i];
    if (d < 0 || d > 1) throw std::invalid_argument("nu not in the backward box");
    diff += d;
  }
  if (diff == 0) throw std::invalid_argument("nu not in the backward box");
  return diff % 2 == 1 ? 1 : -1;
}

std::vector<double> build_r_matrix(const MultiIndex& lambda, const NodeMap& nodes,
                                   std::span<const MultiIndex> box) {
  const std::size_t k = box.size();
  std::vector<double> r(k * k, 0.0);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a; b < k; ++b) {
      auto ia = nodes.find(box[a]);
      auto ib = nodes.find(box[b]);
      if (ia == nodes.end() || ib == nodes.end())
        throw std::invalid_argument("build_r_matrix: node below lambda not optimized");
      double sum = 0.0;
      for (const auto& nu : box_below(box[a].meet(box[b]))) {
        auto ta = ia->second.theta_table.find(nu);
        auto tb = ib->second.theta_table.find(nu);
        if (ta == ia->second.theta_table.end() || tb == ib->second.theta_table.end())
          continue;
        auto in = nodes.find(nu);
        if (in == nodes.end())
          throw std::invalid_argument("build_r_matrix: node below lambda not optimized");
        const MimcNode& node = in->second;
        if (node.alpha <= 0.0)
          throw std::invalid_argument("build_r_matrix: unoptimized node alpha");
        sum += ta->second * tb->second * node.delta * node.delta * node.beta / node.alpha;
      }
      r[a * k + b] = sum;
      r[b * k + a] = sum;
    }
  }
  return r;
}

double node_objective(std::span<const double> t, double sigma2,
                      std::span<const double> c, std::span<const double> cov,
                      std::span<const double> r, double eta, double eta_hat) {
  const std::size_t k = t.size();
  double quad_c = 0.0, quad_r = 0.0, lin = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    lin += c[a] * t[a];
    for (std::size_t b = 0; b < k; ++b) {
      quad_c += t[a] * cov[a * k + b] * t[b];
      quad_r += t[a] * r[a * k + b] * t[b];
    }
  }
  const double var_y = std::max(sigma2 - 2.0 * lin + quad_c, 0.0);
  return eta * std::sqrt(var_y) + eta_hat * std::sqrt(std::max(quad_r, 0.0));
}

MimcNode optimize_node(const MultiIndex& lambda, const CovarianceOracle& oracle,
                       const NodeMap& nodes, const MimcOptions& opts) {
  MimcNode node;
  node.index = lambda;
  node.eta = oracle.eta(lambda);
  node.theta_table[lambda] = 1.0;

  if (lambda.total() == 0) {
    node.delta = std::sqrt(std::max(oracle.sigma2(lambda), 0.0));
    node.alpha = node.beta = node.delta * node.delta / (opts.v * opts.v);
    node.w = node.delta * node.eta / opts.v;
    return node;
  }

  const auto box = backward_box(lambda);
  const std::size_t k = box.size();
  const double sigma2 = oracle.sigma2(lambda);
  std::vector<double> c(k), cov(k * k);
  for (std::size_t a = 0; a < k; ++a) {
    c[a] = oracle.cov_fine(lambda, box[a]);
    for (std::size_t b = 0; b < k; ++b)
      cov[a * k + b] = oracle.cov_coarse(lambda, box[a], box[b]);
  }
  const auto r = build_r_matrix(lambda, nodes, box);

  double eta_hat2 = 0.0;
  for (const auto& nu : box_below(lambda)) {
    if (nu == lambda) continue;
    const MimcNode& sub = nodes.at(nu);
    if (sub.beta <= 0.0)
      throw std::runtime_error("optimize_node: reset node below " + lambda.str() +
                               " is not supported by the recursion");
    eta_hat2 += sub.alpha / sub.beta * sub.eta * sub.eta;
  }
  node.eta_hat = std::sqrt(eta_hat2);

  auto objective = [&](const std::vector<double>& t) {
    return node_objective(t, sigma2, c, cov, r, node.eta, node.eta_hat);
  };

  std::vector<double> eps_start(k);
  for (std::size_t a = 0; a < k; ++a)
    eps_start[a] = static_cast<double>(epsilon_sign(lambda, box[a]));

  if (opts.force_epsilon_signs) {
    node.t = eps_start;
  } else {
    std::vector<std::vector<double>> starts{eps_start, std::vector<double>(k, 0.0)};
    std::vector<double> best_x;
    double best_f = std::numeric_limits<double>::infinity();
    bool converged = false;
    for (const auto& start : starts) {
      auto res = nelder_mead(objective, start, 0.25, opts.rel_tol);
      for (int restart = 0; restart < opts.max_restarts && !res.converged; ++restart)
        res = nelder_mead(objective, res.x, 0.05, opts.rel_tol);
      // polish once from the solution with a smaller simplex
      auto polish = nelder_mead(objective, res.x, 0.01, opts.rel_tol);
      if (polish.f < res.f) res = polish;
      if (res.f < best_f) {
        best_f = res.f;
        best_x = res.x;
        converged = res.converged || converged;
      }
    }
    if (!converged) {
      node.t = best_x;
      throw OptimizerError("node optimizer failed to converge at " + lambda.str(), node);
    }
    node.t = best_x;
  }

  const double vw = objective(node.t);
  node.w = vw / opts.v;
  double lin = 0.0, quad_c = 0.0, quad_r = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    lin += c[a] * node.t[a];
    for (std::size_t b = 0; b < k; ++b) {
      quad_c += node.t[a] * cov[a * k + b] * node.t[b];
      quad_r += node.t[a] * r[a * k + b] * node.t[b];
    }
  }
  node.delta = std::sqrt(std::max(sigma2 - 2.0 * lin + quad_c, 0.0));
  node.alpha = node.delta * node.w / (opts.v * node.eta);
  node.beta = node.w * std::sqrt(std::max(quad_r, 0.0)) / (opts.v * node.eta_hat);

  for (const auto& nu : box_below(lambda)) {
    if (nu == lambda) continue;
    double sum = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      const auto& table = nodes.at(box[a]).theta_table;
      auto it = table.find(nu);
      if (it != table.end()) sum += node.t[a] * it->second;
    }
    node.theta_table[nu] = sum;
  }
  return node;
}

double MimcPlan::sqrt_cost() const { return nodes.at(Lambda).w; }

MimcPlan mimc_plan(const MultiIndex& Lambda, const CovarianceOracle& oracle,
                   const MimcOptions& opts) {
  MimcPlan plan;
  plan.Lambda = Lambda;
  plan.v = opts.v;

  auto order = box_below(Lambda);
  std::stable_sort(order.begin(), order.end(),
                   [](const MultiIndex& a, const MultiIndex& b) {
                     return a.total() < b.total();
                   });
  for (const auto& lambda : order)
    plan.nodes.emplace(lambda, optimize_node(lambda, oracle, plan.nodes, opts));

  const MimcNode& top = plan.nodes.at(Lambda);
  plan.global_theta = top.theta_table;
  for (const auto& [nu, node] : plan.nodes) {
    const double theta = plan.global_theta.count(nu) ? plan.global_theta.at(nu) : 0.0;
    if (nu == Lambda) {
      plan.n_samples[nu] = std::max(1LL, std::llround(node.alpha));
    } else if (theta == 0.0) {
      plan.n_samples[nu] = 0;
    } else {
      plan.n_samples[nu] = std::max(1LL, std::llround(node.alpha * top.beta / node.beta));
    }
  }
  return plan;
}

nlohmann::json mimc_plan_to_json(const MimcPlan& plan) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& [lambda, node] : plan.nodes) {
    nlohmann::json weights = nlohmann::json::array();
    auto box = backward_box(lambda);
    for (std::size_t a = 0; a < box.size(); ++a)
      weights.push_back({{"nu", box[a].entries()}, {"t", node.t[a]}});
    nodes.push_back({{"lambda", lambda.entries()},
                     {"t", weights},
                     {"delta", node.delta},
                     {"w", node.w},
                     {"alpha", node.alpha},
                     {"beta", node.beta},
                     {"eta", node.eta},
                     {"big_theta", plan.global_theta.count(lambda)
                                       ? plan.global_theta.at(lambda)
                                       : 0.0},
                     {"n_samples", plan.n_samples.at(lambda)}});
  }
  return nlohmann::json{{"Lambda", plan.Lambda.entries()},
                        {"v", plan.v},
                        {"sqrt_cost", plan.sqrt_cost()},
                        {"planned_cost", plan.sqrt_cost() * plan.sqrt_cost()},
                        {"nodes", nodes}};
}

TableOracle TableOracle::from_json(const nlohmann::json& j) {
  TableOracle oracle;
  for (const auto& row : j.at("nodes")) {
    MultiIndex lambda(row.at("lambda").get<std::vector<int>>());
    Entry e;
    e.sigma2 = row.at("sigma2").get<double>();
    e.eta = row.at("eta").get<double>();
    if (row.contains("cov_fine"))
      for (const auto& cf : row.at("cov_fine"))
        e.fine[MultiIndex(cf.at("nu").get<std::vector<int>>())] = cf.at("value").get<double>();
    if (row.contains("cov_coarse"))
      for (const auto& cc : row.at("cov_coarse"))
        e.coarse[{MultiIndex(cc.at("nu").get<std::vector<int>>()),
                  MultiIndex(cc.at("nu2").get<std::vector<int>>())}] =
            cc.at("value").get<double>();
    oracle.entries_[lambda] = std::move(e);
  }
  return oracle;
}

const TableOracle::Entry& TableOracle::entry(const MultiIndex& lambda) const {
  auto it = entries_.find(lambda);
  if (it == entries_.end())
    throw std::out_of_range("covariance table has no node " + lambda.str());
  return it->second;
}

double TableOracle::sigma2(const MultiIndex& lambda) const { return entry(lambda).sigma2; }

double TableOracle::cov_fine(const MultiIndex& lambda, const MultiIndex& nu) const {
  return entry(lambda).fine.at(nu);
}

double TableOracle::cov_coarse(const MultiIndex& lambda, const MultiIndex& nu,
                               const MultiIndex& nu2) const {
  const auto& m = entry(lambda).coarse;
  auto it = m.find({nu, nu2});
  if (it == m.end()) it = m.find({nu2, nu});
  if (it == m.end())
    throw std::out_of_range("covariance table missing coarse pair at " + lambda.str());
  return it->second;
}

double TableOracle::eta(const MultiIndex& lambda) const { return entry(lambda).eta; }

}  // namespace wmlmc

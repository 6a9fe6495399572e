#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "wmlmc/planner.hpp"
#include "wmlmc/simplex.hpp"

using namespace wmlmc;

namespace {

LevelMoments mk(int level, double sigma, double eta) {
  LevelMoments m;
  m.level = level;
  m.sigma_fine = sigma;
  m.eta = eta;
  m.n = 1000;
  return m;
}

LevelMoments mk(int level, double sigma, double sigma_coarse, double rho, double eta) {
  LevelMoments m = mk(level, sigma, eta);
  m.sigma_coarse = sigma_coarse;
  m.rho = rho;
  return m;
}

constexpr double kMu = 0.70710678118654752;  // 1/sqrt(2)

// random but internally consistent chain: sigma_coarse at level l equals
// sigma_fine at level l-1, etas increasing
std::vector<LevelMoments> random_chain(std::mt19937_64& gen, int levels,
                                       double rho_lo = -0.999, double rho_hi = 0.999) {
  std::uniform_real_distribution<double> sig(0.3, 3.0), growth(1.2, 2.5),
      rho(rho_lo, rho_hi);
  std::vector<LevelMoments> m;
  double eta = 1.0 + sig(gen);
  m.push_back(mk(0, sig(gen), eta));
  for (int l = 1; l < levels; ++l) {
    eta *= growth(gen);
    m.push_back(mk(l, sig(gen), m.back().sigma_fine, rho(gen), eta));
  }
  return m;
}

}  // namespace

TEST_CASE("single level plan is standard Monte Carlo") {
  std::vector<LevelMoments> m{mk(0, 2.0, 3.0)};
  auto plan = mlmc_plan(m, 0.1);
  CHECK(plan.n_samples[0] == std::llround(4.0 / 0.01));
  CHECK(plan.sqrt_cost() == doctest::Approx(2.0 * 3.0 / 0.1).epsilon(1e-14));
  CHECK(plan.coarsest == 0);
  CHECK(plan.big_theta[0] == 1.0);
}

TEST_CASE("coarsest level helps only above the 0.957 correlation threshold") {
  // equal sigmas, gamma = 1 cost growth: mu = 1/sqrt(2)
  auto plan_at = [](double rho) {
    std::vector<LevelMoments> m{mk(0, 1.0, 1.0), mk(1, 1.0, 1.0, rho, std::sqrt(2.0))};
    return mlmc_plan(m, 0.01);
  };
  CHECK(plan_at(0.95).coarsest == 1);
  CHECK(plan_at(0.95).n_samples[0] == 0);
  CHECK(plan_at(0.96).coarsest == 0);
  CHECK(plan_at(0.96).n_samples[0] > 0);
  // threshold value: mu + (1 - mu^2)/2 = 0.95710...
  CHECK(plan_at(kMu + 0.25 + 1e-9).coarsest == 0);
  CHECK(plan_at(kMu + 0.25 - 1e-9).coarsest == 1);
}

TEST_CASE("mlmc allocation matches a constrained-minimization oracle") {
  std::vector<LevelMoments> m{mk(0, 1.7, 1.0), mk(1, 1.4, 1.65, 0.995, 1.9),
                              mk(2, 1.1, 1.38, 0.998, 3.4)};
  const double v = 0.02;
  auto plan = mlmc_plan(m, v);
  REQUIRE(plan.coarsest == 0);

  // minimize sum N_l eta_l^2 subject to sum Delta_l^2 / N_l = v^2, with N_2
  // eliminated through the constraint
  double d0 = m[0].sigma_fine, d1 = m[1].delta_theta(1.0), d2 = m[2].delta_theta(1.0);
  auto cost = [&](const std::vector<double>& x) {
    double n0 = std::exp(x[0]), n1 = std::exp(x[1]);
    double rem = v * v - d0 * d0 / n0 - d1 * d1 / n1;
    if (rem <= 0.0) return 1e300;
    double n2 = d2 * d2 / rem;
    return n0 * m[0].eta * m[0].eta + n1 * m[1].eta * m[1].eta +
           n2 * m[2].eta * m[2].eta;
  };
  std::vector<double> start{std::log(3.0 * d0 * d0 / (v * v)),
                            std::log(3.0 * d1 * d1 / (v * v))};
  auto res = nelder_mead(cost, start, 0.5, 1e-13, 100000);
  REQUIRE(res.converged);
  CHECK(res.f == doctest::Approx(plan.planned_cost()).epsilon(1e-6));
  const double e_total = plan.sqrt_cost();
  CHECK(std::exp(res.x[0]) ==
        doctest::Approx(e_total * d0 / (m[0].eta * v)).epsilon(1e-3));
  CHECK(std::exp(res.x[1]) ==
        doctest::Approx(e_total * d1 / (m[1].eta * v)).epsilon(1e-3));
}

TEST_CASE("weighted plan thresholds and caption values") {
  // below the weighted threshold the coarse level is dropped entirely
  std::vector<LevelMoments> low{mk(0, 1.0, 1.0), mk(1, 1.0, 1.0, 0.5, std::sqrt(2.0))};
  auto p = wmlmc_plan(low, 0.01);
  CHECK(p.levels[1].theta == 0.0);
  CHECK(p.coarsest == 1);
  CHECK(p.sqrt_cost() ==
        doctest::Approx(1.0 * std::sqrt(2.0) / 0.01).epsilon(1e-14));

  // two-level cost ratio at the MLMC threshold correlation
  const double rho = kMu + 0.25;
  std::vector<LevelMoments> at{mk(0, 1.0, 1.0), mk(1, 1.0, 1.0, rho, std::sqrt(2.0))};
  auto pw = wmlmc_plan(at, 0.01);
  auto pm = mlmc_plan(at, 0.01);
  const double d1w = pw.sqrt_cost() * 0.01 / (1.0 * std::sqrt(2.0));
  CHECK(d1w * d1w == doctest::Approx(0.7773).epsilon(2e-4));
  CHECK(pm.planned_cost() / pw.planned_cost() == doctest::Approx(1.2865).epsilon(1e-3));

  // frozen weight at rho = 0.99 (golden-section oracle value)
  std::vector<LevelMoments> hi{mk(0, 1.0, 1.0), mk(1, 1.0, 1.0, 0.99, std::sqrt(2.0))};
  auto ph = wmlmc_plan(hi, 0.01);
  CHECK(ph.levels[1].theta == doctest::Approx(0.84893).epsilon(1e-4));
}

TEST_CASE("theta oracle basics and sign symmetry") {
  auto zero = optimal_theta_oracle(1.0, 1.0, 0.0, 1.0, 0.5, 0.1);
  CHECK(std::abs(zero.theta) < 1e-9);

  auto pos = optimal_theta_oracle(1.2, 1.0, 0.99, 2.0, 3.0, 0.1);
  auto neg = optimal_theta_oracle(1.2, 1.0, -0.99, 2.0, 3.0, 0.1);
  CHECK(pos.theta > 0.0);
  CHECK(std::abs(neg.theta + pos.theta) < 1e-7);
  CHECK(neg.cost == doctest::Approx(pos.cost).epsilon(1e-12));
}

TEST_CASE("closed-form weights agree with the brute-force oracle") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> sig(0.3, 2.0), ratio(0.6, 1.7),
      rho(-0.999, 0.999), etad(0.5, 4.0), ed(0.1, 40.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double sigma_prev = sig(gen);
    const double sigma = sigma_prev * ratio(gen);
    const double r = rho(gen), eta = etad(gen), e_prev = ed(gen), v = 0.1;

    std::vector<LevelMoments> m{mk(0, 1.0, 1.0), mk(1, sigma, sigma_prev, r, eta)};
    // pin the level-0 estimator cost to e_prev by scaling sigma_0 eta_0
    m[0].sigma_fine = 1.0;
    m[0].eta = e_prev * v;  // E_0 = sigma_0 eta_0 / v = e_prev

    auto plan = wmlmc_plan(m, v);
    auto oracle = optimal_theta_oracle(sigma_prev, sigma, r, eta, e_prev, v);
    CHECK(std::abs(plan.levels[1].theta - oracle.theta) < 1e-7);
    // the recursion's cost is a true minimum: the oracle can never beat it
    CHECK(oracle.cost >= plan.sqrt_cost() * (1.0 - 1e-9));
    CHECK(oracle.cost <= plan.sqrt_cost() * (1.0 + 1e-9));
  }
}

TEST_CASE("dominance, specialization and sign rule over random tables") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 1000; ++trial) {
    auto m = random_chain(gen, 2 + static_cast<int>(gen() % 5));
    const double v = 0.05;
    auto pw = wmlmc_plan(m, v);
    auto pm = mlmc_plan(m, v);
    const double single = m.back().sigma_fine * m.back().eta / v;

    CHECK(pw.sqrt_cost() <= pm.sqrt_cost() * (1.0 + 1e-12));
    CHECK(pm.sqrt_cost() <= single * (1.0 + 1e-12));

    // theta == 1 forcing reproduces the MLMC plan exactly
    auto forced = forced_theta_plan(m, v, 1.0);
    CHECK(forced.sqrt_cost() == pm.sqrt_cost());
    for (std::size_t l = 0; l < m.size(); ++l) {
      CHECK(forced.n_samples[l] == pm.n_samples[l]);
      CHECK(forced.levels[l].active == pm.levels[l].active);
    }

    // sign rule and the beta/theta link
    for (std::size_t l = 1; l < m.size(); ++l) {
      const auto& lp = pw.levels[l];
      if (lp.theta != 0.0) {
        CHECK(lp.theta * *m[l].rho > 0.0);
        CHECK(lp.beta > 0.0);
      } else {
        CHECK(lp.beta == 0.0);
      }
    }
  }
}

TEST_CASE("normalized cost recursions reproduce the caption values") {
  // threshold equality falls to the 'otherwise' branch
  auto eq = normalized_cost_wmlmc(std::vector<double>{kMu}, std::vector<double>{kMu});
  CHECK(eq.deltas[1] == 1.0);

  auto d99 = normalized_cost_wmlmc(std::vector<double>{0.99}, std::vector<double>{kMu});
  CHECK(d99.deltas[1] ==
        doctest::Approx((0.99 + std::sqrt(0.0199)) / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(d99.deltas[1] == doctest::Approx(0.79978).epsilon(1e-4));

  const double rho = kMu + 0.25;
  auto w2 = normalized_cost_wmlmc(std::vector<double>{rho, rho},
                                  std::vector<double>{kMu, kMu});
  auto m2 = normalized_cost_mlmc(std::vector<double>{rho, rho},
                                 std::vector<double>{1.0, 1.0},
                                 std::vector<double>{kMu, kMu});
  CHECK(std::pow(m2.deltas[2] / w2.deltas[2], 2) == doctest::Approx(1.4752).epsilon(1e-3));

  CHECK(normalized_cost_mlmc(std::vector<double>{0.9}, std::vector<double>{1.0},
                             std::vector<double>{kMu})
            .deltas[1] == 1.0);
  CHECK(normalized_cost_mlmc(std::vector<double>{0.98}, std::vector<double>{1.0},
                             std::vector<double>{kMu})
            .deltas[1] ==
        doctest::Approx(1.0 / std::sqrt(2.0) + std::sqrt(0.04)).epsilon(1e-12));
  CHECK(normalized_cost_mlmc(std::vector<double>{1.0}, std::vector<double>{1.0},
                             std::vector<double>{kMu})
            .deltas[1] == doctest::Approx(kMu).epsilon(1e-12));
}

TEST_CASE("normalized cost matches the plan recursion on consistent chains") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto m = random_chain(gen, 2 + static_cast<int>(gen() % 4));
    const double v = 0.03;
    auto plan = wmlmc_plan(m, v);

    std::vector<double> rhos, mus;
    for (std::size_t l = 1; l < m.size(); ++l) {
      rhos.push_back(*m[l].rho);
      mus.push_back(m[l - 1].eta / m[l].eta);
    }
    auto seq = normalized_cost_wmlmc(rhos, mus);
    const double normalized = v * plan.sqrt_cost() / (m.back().sigma_fine * m.back().eta);
    CHECK(normalized == doctest::Approx(seq.deltas.back()).epsilon(1e-11));
    CHECK(seq.deltas.back() <= 1.0 + 1e-12);
  }
}

TEST_CASE("cumulative cost bound holds whenever every |rho_l| beats mu_l") {
  // bound from the recursion's one-step inequality:
  // delta_L <= (eta_0 + sum_{l>=1} eta_l sqrt(1-rho_l^2)) / eta_L
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> mud(0.2, 0.95);
  for (int trial = 0; trial < 500; ++trial) {
    const int levels = 1 + static_cast<int>(gen() % 6);
    std::vector<double> rhos, mus, etas{1.0};
    for (int l = 0; l < levels; ++l) {
      double mu = mud(gen);
      std::uniform_real_distribution<double> rhod(mu + 1e-6, 0.9999);
      double r = rhod(gen);
      mus.push_back(mu);
      rhos.push_back(gen() % 2 ? r : -r);
      etas.push_back(etas.back() / mu);
    }
    auto seq = normalized_cost_wmlmc(rhos, mus);
    double bound = etas[0];
    for (int l = 1; l <= levels; ++l)
      bound += etas[static_cast<std::size_t>(l)] *
               std::sqrt(1.0 - rhos[static_cast<std::size_t>(l - 1)] *
                                   rhos[static_cast<std::size_t>(l - 1)]);
    bound /= etas.back();
    CHECK(seq.deltas.back() <= bound + 1e-12);
  }
}

TEST_CASE("assemble reduces to the telescoping sum when theta is one") {
  std::vector<LevelMoments> m{mk(0, 1.0, 1.0), mk(1, 1.0, 1.0, 0.999, 2.0),
                              mk(2, 1.0, 1.0, 0.999, 4.0)};
  auto plan = forced_theta_plan(m, 0.05, 1.0);
  REQUIRE(plan.coarsest == 0);
  std::vector<double> avgs{1.3, 0.2, 0.05};
  auto est = assemble(plan, avgs);
  CHECK(est.value == doctest::Approx(1.3 + 0.2 + 0.05).epsilon(1e-14));

  std::vector<LevelMoments> one{mk(0, 1.0, 1.0)};
  auto p0 = wmlmc_plan(one, 0.1);
  CHECK(assemble(p0, std::vector<double>{2.5}).value == doctest::Approx(2.5));

  CHECK_THROWS_AS(assemble(plan, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("assembled estimator is unbiased on a synthetic gaussian model") {
  // P_0 = mu0 + a Z + e0 X0 ; P_1 = mu1 + a Z + e1 X1 coupled through Z
  const double mu0 = 2.0, mu1 = 2.3, a = 1.0, e0 = 0.4, e1 = 0.3;
  const double s0 = std::sqrt(a * a + e0 * e0), s1 = std::sqrt(a * a + e1 * e1);
  const double rho = a * a / (s0 * s1);
  std::vector<LevelMoments> m{mk(0, s0, 1.0), mk(1, s1, s0, rho, 2.0)};
  const double v = 0.25;
  auto plan = wmlmc_plan(m, v);
  REQUIRE(plan.coarsest == 0);
  const double theta = plan.levels[1].theta;

  std::mt19937_64 gen(404);
  std::normal_distribution<double> normal;
  const int reps = 10000;
  double sum = 0.0, sum2 = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    double avg0 = 0.0, avg1 = 0.0;
    for (long long i = 0; i < plan.n_samples[0]; ++i)
      avg0 += mu0 + a * normal(gen) + e0 * normal(gen);
    avg0 /= static_cast<double>(plan.n_samples[0]);
    for (long long i = 0; i < plan.n_samples[1]; ++i) {
      double z = normal(gen);
      double fine = mu1 + a * z + e1 * normal(gen);
      double coarse = mu0 + a * z + e0 * normal(gen);
      avg1 += fine - theta * coarse;
    }
    avg1 /= static_cast<double>(plan.n_samples[1]);
    double est = assemble(plan, std::vector<double>{avg0, avg1}).value;
    sum += est;
    sum2 += est * est;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sum2 / reps - mean * mean) / reps);
  CHECK(std::abs(mean - mu1) < 3.0 * se);
  // planner's variance prediction is honest at the replication level
  CHECK(sum2 / reps - mean * mean ==
        doctest::Approx(plan.predicted_variance()).epsilon(0.15));
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(mlmc_plan(std::vector<LevelMoments>{}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(wmlmc_plan(std::vector<LevelMoments>{mk(0, 1.0, 1.0)}, -1.0),
                  std::invalid_argument);
  std::vector<LevelMoments> bad{mk(0, 1.0, 1.0), mk(1, 1.0, 1.0, 1.5, 2.0)};
  CHECK_THROWS_AS(wmlmc_plan(bad, 0.1), std::invalid_argument);
}

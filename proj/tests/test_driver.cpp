#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "wmlmc/driver.hpp"

using namespace wmlmc;

namespace {

RunConfig gbm_call(double mse) {
  RunConfig c;
  c.model = ModelSpec::gbm();
  c.scheme = SchemeSpec{SchemeKind::EulerMaruyama, 2, 1, false};
  c.payoff = PayoffSpec{PayoffKind::Call, 100.0};
  c.target_mse = mse;
  c.threads = 4;
  return c;
}

constexpr double kBsCall = 10.450583572185565;  // Black-Scholes reference

}  // namespace

TEST_CASE("zero volatility run is flagged degenerate") {
  auto c = gbm_call(1e-4);
  c.model = ModelSpec::gbm(0.05, 0.0);
  auto r = run(c);
  CHECK(r.degenerate);
  CHECK(r.achieved_variance == 0.0);
  // finest pilot level is 2, i.e. J0 * M^2 = 4 Euler steps
  const int steps = c.scheme.steps_at(r.final_level);
  CHECK(r.value ==
        doctest::Approx(std::exp(-0.05) *
                        (100.0 * std::pow(1.0 + 0.05 / steps, steps) - 100.0))
            .epsilon(1e-10));
}

TEST_CASE("adaptive run lands within its error budget") {
  auto r = run(gbm_call(1e-4));
  CHECK(r.converged);
  const double tol =
      3.0 * std::sqrt(r.achieved_variance + r.bias_estimate * r.bias_estimate);
  CHECK(std::abs(r.value - kBsCall) < tol + 0.01);
  CHECK(r.achieved_variance <= 0.5 * 1e-4 * 1.05);
  CHECK(r.final_level >= 2);
  CHECK(r.total_cost > 0.0);

  double cost_sum = 0.0;
  for (const auto& lvl : r.levels) {
    cost_sum += lvl.cost;
    if (lvl.n_samples > 0) CHECK(lvl.n_samples >= 20);
  }
  CHECK(r.total_cost == doctest::Approx(cost_sum).epsilon(1e-12));
}

TEST_CASE("weighted method undercuts plain multilevel on the same run") {
  auto cw = gbm_call(1e-4);
  cw.seed = 3;
  auto cm = cw;
  cm.method = Method::MLMC;
  auto rw = run(cw);
  auto rm = run(cm);
  CHECK(rw.converged);
  CHECK(rm.converged);
  CHECK(std::abs(rw.value - rm.value) < 0.1);
  // same target, same seed: the weighted plan should not cost more
  CHECK(rw.total_cost <= rm.total_cost * 1.05);
}

TEST_CASE("results are identical for any thread count") {
  auto c1 = gbm_call(1e-3);
  c1.threads = 1;
  auto c8 = c1;
  c8.threads = 8;
  auto r1 = run(c1);
  auto r8 = run(c8);
  CHECK(result_to_json(r1).dump() == result_to_json(r8).dump());

  long long rej1 = 0, rej3 = 0;
  auto a = sample_level(c1.model, c1.scheme, c1.payoff, 3, 7, 0, 50000, 1, &rej1);
  auto b = sample_level(c1.model, c1.scheme, c1.payoff, 3, 7, 0, 50000, 3, &rej3);
  auto ma = a.finalize(), mb = b.finalize();
  CHECK(ma.sigma_fine == mb.sigma_fine);  // bitwise
  CHECK(ma.mean_y == mb.mean_y);
  CHECK(a.total_cost() == b.total_cost());
  CHECK(rej1 == rej3);
}

TEST_CASE("disjoint index windows merge into the full window") {
  auto c = gbm_call(1e-3);
  auto whole = sample_level(c.model, c.scheme, c.payoff, 2, 5, 0, 30000, 2);
  auto head = sample_level(c.model, c.scheme, c.payoff, 2, 5, 0, 11000, 2);
  auto tail = sample_level(c.model, c.scheme, c.payoff, 2, 5, 11000, 19000, 2);
  head.merge(tail);
  CHECK(head.finalize().sigma_fine ==
        doctest::Approx(whole.finalize().sigma_fine).epsilon(1e-12));
  CHECK(head.count() == whole.count());
}

TEST_CASE("fitted rates match the scheme's known orders") {
  auto c = gbm_call(1e-4);
  auto moments = estimate_moments(c.model, c.scheme, c.payoff, 7, 200000, 11, 8);
  std::vector<LevelMoments> tail(moments.begin(), moments.end());
  auto bias = estimate_bias(tail);
  CHECK(bias.alpha_hat == doctest::Approx(1.0).epsilon(0.3));  // weak order one

  // variance decay: order ~2 for Milstein on a Lipschitz payoff
  c.scheme.kind = SchemeKind::Milstein;
  auto mil = estimate_moments(c.model, c.scheme, c.payoff, 7, 200000, 11, 8);
  auto rate = [](const std::vector<LevelMoments>& m) {
    double num = 0.0, den = 0.0, sx = 0.0, sy = 0.0;
    int n = 0;
    for (std::size_t l = 1; l < m.size(); ++l) {
      double x = static_cast<double>(l);
      double y = std::log2(m[l].delta_theta(1.0));
      sx += x;
      sy += y;
      ++n;
    }
    double mx = sx / n, my = sy / n;
    for (std::size_t l = 1; l < m.size(); ++l) {
      double x = static_cast<double>(l);
      num += (x - mx) * (std::log2(m[l].delta_theta(1.0)) - my);
      den += (x - mx) * (x - mx);
    }
    return -2.0 * num / den;
  };
  CHECK(rate(mil) == doctest::Approx(2.0).epsilon(0.25));
  CHECK(rate(moments) == doctest::Approx(1.0).epsilon(0.35));
}

TEST_CASE("bias extrapolation on a synthetic geometric table") {
  std::vector<LevelMoments> m;
  for (int l = 0; l <= 5; ++l) {
    LevelMoments lm;
    lm.level = l;
    lm.mean_y = 0.8 * std::pow(2.0, -l);
    lm.sigma_fine = 1.0;
    lm.eta = 1.0;
    lm.n = 1000;
    m.push_back(lm);
  }
  auto b = estimate_bias(m);
  CHECK(b.alpha_hat == doctest::Approx(1.0).epsilon(1e-6));
  // next-term extrapolation: |Y_L| * 2^-a / (1 - 2^-a) = |Y_L|
  CHECK(b.bias == doctest::Approx(m.back().mean_y).epsilon(1e-6));
}

TEST_CASE("planned cost sweep is internally consistent") {
  auto c = gbm_call(1e-4);
  std::vector<double> grid{1e-2, 1e-3, 1e-4};
  auto rows = sweep(c, grid, 50000, 8);
  REQUIRE(rows.size() == grid.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].mse == grid[i]);
    CHECK(rows[i].cost_wmlmc <= rows[i].cost_mlmc * (1.0 + 1e-12));
    CHECK(rows[i].cost_mlmc <= rows[i].cost_single * (1.0 + 1e-12));
    CHECK(rows[i].ratio_mlmc_over_wmlmc ==
          doctest::Approx(rows[i].cost_mlmc / rows[i].cost_wmlmc).epsilon(1e-12));
    CHECK(rows[i].coarsest_wmlmc <= rows[i].level);
    if (i > 0) {
      CHECK(rows[i].level >= rows[i - 1].level);       // tighter MSE, finer grid
      CHECK(rows[i].cost_wmlmc >= rows[i - 1].cost_wmlmc);
    }
  }
}

TEST_CASE("config validation") {
  auto c = gbm_call(1e-4);
  c.pilot_n = 1;
  CHECK_THROWS_AS(run(c), std::invalid_argument);
  c = gbm_call(-1.0);
  CHECK_THROWS_AS(run(c), std::invalid_argument);
  c = gbm_call(1e-4);
  c.error_split = 1.0;
  CHECK_THROWS_AS(run(c), std::invalid_argument);
  c = gbm_call(1e-4);
  c.max_level = -1;
  CHECK_THROWS_AS(run(c), std::invalid_argument);
}

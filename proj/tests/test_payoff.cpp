#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "wmlmc/payoff.hpp"

using namespace wmlmc;

namespace {

PathSummary path_with(double terminal, double running_mean = 0.0) {
  PathSummary p;
  p.terminal = terminal;
  p.running_mean = running_mean;
  p.steps = 1;
  return p;
}

}  // namespace

TEST_CASE("discounted call payoff") {
  auto model = ModelSpec::gbm();
  PayoffSpec call{PayoffKind::Call, 100.0};
  CHECK(evaluate(call, path_with(110.0), model) == doctest::Approx(9.5123).epsilon(1e-4));
  CHECK(evaluate(call, path_with(90.0), model) == 0.0);
}

TEST_CASE("asian payoff at the boundary") {
  auto model = ModelSpec::gbm();
  PayoffSpec asian{PayoffKind::Asian, 100.0};
  CHECK(evaluate(asian, path_with(123.0, 100.0), model) == 0.0);
  CHECK(evaluate(asian, path_with(0.0, 104.0), model) ==
        doctest::Approx(std::exp(-0.05) * 4.0).epsilon(1e-12));
}

TEST_CASE("digital payoff takes exactly two values") {
  auto model = ModelSpec::gbm();
  PayoffSpec digital{PayoffKind::Digital, 100.0};
  const double paid = std::exp(-0.05) * 100.0;
  const double barrier = 100.0 * std::exp(0.05);
  CHECK(evaluate(digital, path_with(barrier + 1e-9), model) == doctest::Approx(paid));
  CHECK(evaluate(digital, path_with(barrier - 1e-9), model) == 0.0);
  CHECK(evaluate(digital, path_with(1e6), model) == doctest::Approx(paid));
}

TEST_CASE("zero rate removes the discount factor") {
  auto model = ModelSpec::gbm();
  model.rate = 0.0;
  PayoffSpec call{PayoffKind::Call, 100.0};
  CHECK(evaluate(call, path_with(110.0), model) == doctest::Approx(10.0).epsilon(1e-14));
}

TEST_CASE("call and digital payoffs are nondecreasing in the terminal value") {
  auto model = ModelSpec::igbm();
  for (PayoffKind kind : {PayoffKind::Call, PayoffKind::Digital}) {
    PayoffSpec payoff{kind, 100.0};
    double prev = -1.0;
    for (double t = 50.0; t <= 160.0; t += 0.5) {
      double p = evaluate(payoff, path_with(t), model);
      CHECK(p >= prev);
      prev = p;
    }
  }
}

TEST_CASE("zero volatility interpolated mean equals the linear-interpolant mean") {
  auto model = ModelSpec::gbm(0.05, 0.0);
  SchemeSpec scheme{SchemeKind::EulerMaruyama, 2, 1, false};
  auto rng = make_substream(4, 3, 9);
  auto s = simulate_coupled(model, scheme, 3, rng, {true});
  REQUIRE(s.detail.has_value());
  const auto& d = *s.detail;

  // independent reference: sample the piecewise-linear interpolant of the
  // coarse nodes at all fine times 1..J
  const int m = d.refinement;
  const std::size_t jc = d.nodes.size() - 1;
  double ref = 0.0;
  for (std::size_t j = 0; j < jc; ++j)
    for (int k = 1; k <= m; ++k)
      ref += d.nodes[j] + (d.nodes[j + 1] - d.nodes[j]) * k / m;
  ref /= static_cast<double>(jc * static_cast<std::size_t>(m));
  CHECK(coarse_asian_mean(model, d) == doctest::Approx(ref).epsilon(1e-13));
}

TEST_CASE("one coarse step at M=2 matches the hand-expanded interpolant") {
  auto model = ModelSpec::gbm();  // b(s) = 0.2 s
  CoarseDetail d;
  d.refinement = 2;
  d.h_coarse = 1.0;
  d.nodes = {100.0, 112.0};
  d.fine_increments = {0.3, -0.1};
  // midpoint: s0 + (s1-s0)/2 + b(s0) * (w1 - (w1+w2)/2), then average with s1
  const double mid = 100.0 + 6.0 + 20.0 * (0.3 - 0.5 * 0.2);
  const double expected = (mid + 112.0) / 2.0;
  CHECK(coarse_asian_mean(model, d) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("interpolation is signalled as unavailable at the coarsest level") {
  CoarseDetail d;
  d.nodes = {100.0};
  CHECK_THROWS_AS(coarse_asian_mean(ModelSpec::gbm(), d), std::invalid_argument);

  auto model = ModelSpec::gbm();
  SchemeSpec scheme{SchemeKind::EulerMaruyama, 2, 1, false};
  auto rng = make_substream(4, 2, 0);
  auto s = simulate_coupled(model, scheme, 2, rng, {false});  // no detail recorded
  PayoffSpec asian{PayoffKind::Asian, 100.0};
  CHECK_THROWS_AS(payoff_pair(asian, model, s), std::invalid_argument);
}

TEST_CASE("interpolated coarse asian couples tighter than the node average") {
  auto model = ModelSpec::gbm();
  SchemeSpec scheme{SchemeKind::EulerMaruyama, 2, 1, false};
  PayoffSpec asian{PayoffKind::Asian, 100.0};
  const int level = 3;
  const long long n = 20000;
  double a_sf = 0, a_sc = 0, a_sff = 0, a_scc = 0, a_sfc = 0;
  double b_sf = 0, b_sc = 0, b_sff = 0, b_scc = 0, b_sfc = 0;
  for (long long i = 0; i < n; ++i) {
    auto rng = make_substream(15, level, static_cast<std::uint64_t>(i));
    auto s = simulate_coupled(model, scheme, level, rng, {true});
    auto pp = payoff_pair(asian, model, s);
    const double plain = evaluate(asian, *s.coarse, model);  // node average only
    a_sf += pp.fine;
    a_sc += pp.coarse;
    a_sff += pp.fine * pp.fine;
    a_scc += pp.coarse * pp.coarse;
    a_sfc += pp.fine * pp.coarse;
    b_sf += pp.fine;
    b_sc += plain;
    b_sff += pp.fine * pp.fine;
    b_scc += plain * plain;
    b_sfc += pp.fine * plain;
  }
  auto corr = [n](double sf, double sc, double sff, double scc, double sfc) {
    double covv = sfc / n - (sf / n) * (sc / n);
    double vf = sff / n - (sf / n) * (sf / n);
    double vc = scc / n - (sc / n) * (sc / n);
    return covv / std::sqrt(vf * vc);
  };
  CHECK(corr(a_sf, a_sc, a_sff, a_scc, a_sfc) >
        corr(b_sf, b_sc, b_sff, b_scc, b_sfc));
}

TEST_CASE("antithetic payoff pair averages the mirror paths") {
  auto model = ModelSpec::gbm();
  SchemeSpec scheme{SchemeKind::EulerMaruyama, 2, 1, true};
  PayoffSpec call{PayoffKind::Call, 100.0};
  auto rng = make_substream(8, 1, 5);
  auto s = simulate_coupled(model, scheme, 1, rng);
  auto pp = payoff_pair(call, model, s);
  const double expected =
      0.5 * (evaluate(call, s.fine, model) + evaluate(call, *s.fine_anti, model));
  CHECK(pp.fine == doctest::Approx(expected).epsilon(1e-15));
  CHECK(pp.has_coarse);
}

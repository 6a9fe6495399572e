#include "wmlmc/sde.hpp"

#include <cmath>

namespace wmlmc {

ModelSpec ModelSpec::gbm(double mu, double vol) {
  ModelSpec m;
  m.family = ModelFamily::GBM;
  m.mu = mu;
  m.vol = vol;
  return m;
}

ModelSpec ModelSpec::igbm(double kappa, double mean, double vol) {
  ModelSpec m;
  m.family = ModelFamily::IGBM;
  m.kappa = kappa;
  m.mean_level = mean;
  m.vol = vol;
  return m;
}

ModelSpec ModelSpec::cir(double kappa, double mean, double vol) {
  ModelSpec m;
  m.family = ModelFamily::CIR;
  m.kappa = kappa;
  m.mean_level = mean;
  m.vol = vol;
  return m;
}

Coefficients eval_coefficients(const ModelSpec& model, double s) {
  switch (model.family) {
    case ModelFamily::GBM:
      return {model.mu * s, model.vol * s, model.vol};
    case ModelFamily::IGBM:
      return {model.kappa * (model.mean_level - s), model.vol * s, model.vol};
    case ModelFamily::CIR: {
      double sp = s > 0.0 ? s : 0.0;
      double root = std::sqrt(sp);
      double bp = sp > 0.0 ? 0.5 * model.vol / root : 0.0;
      return {model.kappa * (model.mean_level - sp), model.vol * root, bp};
    }
  }
  return {};
}

PathSummary simulate_path(const ModelSpec& model, SchemeKind kind, double h,
                          std::span<const double> increments,
                          std::vector<double>* nodes) {
  double s = model.s0;
  double sum = 0.0;
  if (nodes) {
    nodes->clear();
    nodes->reserve(increments.size() + 1);
    nodes->push_back(s);
  }
  for (double dw : increments) {
    Coefficients c = eval_coefficients(model, s);
    s += c.drift * h + c.vol * dw;
    if (kind == SchemeKind::Milstein)
      s += 0.5 * c.vol * c.vol_prime * (dw * dw - h);
    sum += s;
    if (nodes) nodes->push_back(s);
  }
  if (!std::isfinite(s) || !std::isfinite(sum))
    throw NonFiniteSampleError("path state overflowed");
  PathSummary out;
  out.terminal = s;
  out.steps = static_cast<long long>(increments.size());
  out.running_mean = out.steps > 0 ? sum / static_cast<double>(out.steps) : model.s0;
  return out;
}

namespace {

struct PairResult {
  PathSummary fine;
  std::optional<PathSummary> coarse;
  std::optional<CoarseDetail> detail;
};

PairResult advance_pair(const ModelSpec& model, const SchemeSpec& scheme,
                        int level, std::span<const double> dw_fine,
                        double h_fine, bool record_detail) {
  PairResult r;
  r.fine = simulate_path(model, scheme.kind, h_fine, dw_fine);
  if (level > 0) {
    const int m = scheme.refinement;
    const long long j_coarse = static_cast<long long>(dw_fine.size()) / m;
    std::vector<double> dw_coarse(static_cast<std::size_t>(j_coarse), 0.0);
    for (long long j = 0; j < j_coarse; ++j)
      for (int k = 0; k < m; ++k) dw_coarse[j] += dw_fine[j * m + k];
    double h_coarse = h_fine * m;
    if (record_detail) {
      CoarseDetail d;
      d.h_coarse = h_coarse;
      d.refinement = m;
      d.fine_increments.assign(dw_fine.begin(), dw_fine.end());
      r.coarse = simulate_path(model, scheme.kind, h_coarse, dw_coarse, &d.nodes);
      r.detail = std::move(d);
    } else {
      r.coarse = simulate_path(model, scheme.kind, h_coarse, dw_coarse);
    }
  }
  return r;
}

}  // namespace

CoupledSample simulate_coupled(const ModelSpec& model, const SchemeSpec& scheme,
                               int level, CounterRng& rng,
                               const SamplerOptions& opts) {
  const long long j_fine = scheme.steps_at(level);
  const double h_fine = model.horizon / static_cast<double>(j_fine);
  const double root_h = std::sqrt(h_fine);

  std::vector<double> dw(static_cast<std::size_t>(j_fine));
  for (auto& x : dw) x = root_h * rng.next_gaussian();

  CoupledSample out;
  PairResult r = advance_pair(model, scheme, level, dw, h_fine,
                              opts.record_coarse_detail);
  out.fine = r.fine;
  out.coarse = r.coarse;
  out.detail = std::move(r.detail);

  double cost = static_cast<double>(j_fine);
  if (level > 0) cost += static_cast<double>(j_fine / scheme.refinement);

  if (scheme.antithetic) {
    for (auto& x : dw) x = -x;
    PairResult a = advance_pair(model, scheme, level, dw, h_fine,
                                opts.record_coarse_detail);
    out.fine_anti = a.fine;
    out.coarse_anti = a.coarse;
    out.detail_anti = std::move(a.detail);
    cost *= 2.0;
  }
  out.cost_units = cost;
  return out;
}

}  // namespace wmlmc

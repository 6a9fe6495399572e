#include "wmlmc/payoff.hpp"

#include <cmath>

namespace wmlmc {

double evaluate(const PayoffSpec& payoff, const PathSummary& path,
                const ModelSpec& model) {
  const double disc = std::exp(-model.rate * model.horizon);
  switch (payoff.kind) {
    case PayoffKind::Call:
      return disc * std::max(path.terminal - payoff.strike, 0.0);
    case PayoffKind::Asian:
      return disc * std::max(path.running_mean - payoff.strike, 0.0);
    case PayoffKind::Digital:
      return path.terminal > payoff.strike / disc ? disc * payoff.strike : 0.0;
  }
  return 0.0;
}

double coarse_asian_mean(const ModelSpec& model, const CoarseDetail& detail) {
  const int m = detail.refinement;
  const long long jc = static_cast<long long>(detail.nodes.size()) - 1;
  if (jc < 1) throw std::invalid_argument("coarse_asian_mean: no coarse steps");
  double sum = 0.0;
  for (long long j = 0; j < jc; ++j) {
    const double s0 = detail.nodes[static_cast<std::size_t>(j)];
    const double s1 = detail.nodes[static_cast<std::size_t>(j) + 1];
    const double b = eval_coefficients(model, s0).vol;
    double dw_block = 0.0;
    for (int k = 0; k < m; ++k)
      dw_block += detail.fine_increments[static_cast<std::size_t>(j * m + k)];
    double w_partial = 0.0;
    for (int k = 1; k < m; ++k) {
      w_partial += detail.fine_increments[static_cast<std::size_t>(j * m + k - 1)];
      const double lambda = static_cast<double>(k) / m;
      sum += s0 + lambda * (s1 - s0) + b * (w_partial - lambda * dw_block);
    }
    sum += s1;
  }
  return sum / static_cast<double>(jc * m);
}

namespace {

double coarse_payoff(const PayoffSpec& payoff, const ModelSpec& model,
                     const PathSummary& coarse,
                     const std::optional<CoarseDetail>& detail) {
  if (payoff.kind == PayoffKind::Asian) {
    if (!detail)
      throw std::invalid_argument("Asian coarse payoff needs recorded coarse detail");
    PathSummary interp = coarse;
    interp.running_mean = coarse_asian_mean(model, *detail);
    return evaluate(payoff, interp, model);
  }
  return evaluate(payoff, coarse, model);
}

}  // namespace

PayoffPair payoff_pair(const PayoffSpec& payoff, const ModelSpec& model,
                       const CoupledSample& sample) {
  PayoffPair out;
  out.fine = evaluate(payoff, sample.fine, model);
  if (sample.fine_anti) {
    out.fine = 0.5 * (out.fine + evaluate(payoff, *sample.fine_anti, model));
  }
  if (sample.coarse) {
    out.has_coarse = true;
    out.coarse = coarse_payoff(payoff, model, *sample.coarse, sample.detail);
    if (sample.coarse_anti) {
      out.coarse = 0.5 * (out.coarse + coarse_payoff(payoff, model, *sample.coarse_anti,
                                                     sample.detail_anti));
    }
  }
  return out;
}

}  // namespace wmlmc

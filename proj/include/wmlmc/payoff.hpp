#pragma once

#include <stdexcept>

#include "wmlmc/sde.hpp"

namespace wmlmc {

enum class PayoffKind { Call, Asian, Digital };

struct PayoffSpec {
  PayoffKind kind = PayoffKind::Call;
  double strike = 100.0;
};

// Discounted discrete payoff of a path summary.
//   Call:    e^{-rT} max(terminal - K, 0)
//   Asian:   e^{-rT} max(running_mean - K, 0)
//   Digital: e^{-rT} K 1{terminal > K e^{rT}}  (cash-or-nothing)
double evaluate(const PayoffSpec& payoff, const PathSummary& path,
                const ModelSpec& model);

// Interpolated time-average for the coarse Asian payoff. Between coarse
// nodes the fine-time values are the linear interpolant of the endpoints
// plus b(S_j) * (W_partial - interpolated W).
double coarse_asian_mean(const ModelSpec& model, const CoarseDetail& detail);

struct PayoffPair {
  double fine = 0.0;
  double coarse = 0.0;
  bool has_coarse = false;
};

// Fine/coarse payoff pair for one coupled sample, averaged over the
// antithetic mirror when present. Asian coarse payoffs use the
// interpolated mean and require recorded coarse detail.
PayoffPair payoff_pair(const PayoffSpec& payoff, const ModelSpec& model,
                       const CoupledSample& sample);

}  // namespace wmlmc

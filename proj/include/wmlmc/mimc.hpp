#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace wmlmc {

// Lattice point in N_0^d with entrywise partial order.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> entries) : entries_(std::move(entries)) {
    for (int e : entries_)
      if (e < 0) throw std::invalid_argument("negative multi-index entry");
  }

  int dim() const { return static_cast<int>(entries_.size()); }
  int operator[](int i) const { return entries_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& entries() const { return entries_; }
  int total() const {  // |lambda|
    int s = 0;
    for (int e : entries_) s += e;
    return s;
  }
  bool leq(const MultiIndex& other) const {
    for (int i = 0; i < dim(); ++i)
      if (entries_[static_cast<std::size_t>(i)] > other[i]) return false;
    return true;
  }
  MultiIndex meet(const MultiIndex& other) const {  // entrywise min
    std::vector<int> e(entries_);
    for (int i = 0; i < dim(); ++i) e[static_cast<std::size_t>(i)] = std::min(e[static_cast<std::size_t>(i)], other[i]);
    return MultiIndex(std::move(e));
  }
  bool operator==(const MultiIndex& other) const { return entries_ == other.entries_; }
  bool operator<(const MultiIndex& other) const { return entries_ < other.entries_; }  // map key order
  std::string str() const;

 private:
  std::vector<int> entries_;
};

// Backward neighborhood: all nu >= 0 with 0 < lambda - nu <= 1 entrywise,
// in lexicographic order.
std::vector<MultiIndex> backward_box(const MultiIndex& lambda);

// All 0 <= nu <= lambda in lexicographic order.
std::vector<MultiIndex> box_below(const MultiIndex& lambda);

// (-1)^(1 + |lambda - nu|); nu must lie in the backward box of lambda.
int epsilon_sign(const MultiIndex& lambda, const MultiIndex& nu);

// Covariance data for the node objectives: variances of P_lambda, and
// covariances of the coupled coarse estimators P^lambda_nu against the
// fine estimator and against each other.
class CovarianceOracle {
 public:
  virtual ~CovarianceOracle() = default;
  virtual double sigma2(const MultiIndex& lambda) const = 0;
  // Cov[P^lambda_nu, P_lambda], nu in backward box of lambda
  virtual double cov_fine(const MultiIndex& lambda, const MultiIndex& nu) const = 0;
  // Cov[P^lambda_nu, P^lambda_nu']
  virtual double cov_coarse(const MultiIndex& lambda, const MultiIndex& nu,
                            const MultiIndex& nu2) const = 0;
  virtual double eta(const MultiIndex& lambda) const = 0;
};

struct MimcNode {
  MultiIndex index;
  std::vector<double> t;                    // weights over the backward box
  std::map<MultiIndex, double> theta_table; // Theta^lambda_nu for nu <= lambda
  double delta = 0.0;                       // std dev of Y under t
  double w = 0.0;                           // square-root cost W_lambda
  double alpha = 0.0;
  double beta = 0.0;
  double eta = 0.0;
  double eta_hat = 0.0;                     // composite coarse cost
};

using NodeMap = std::map<MultiIndex, MimcNode>;

// R_{kappa,kappa'} over the backward box of lambda (row-major, symmetric
// PSD); all nodes below lambda must already be optimized.
std::vector<double> build_r_matrix(const MultiIndex& lambda, const NodeMap& nodes,
                                   std::span<const MultiIndex> box);

// v * W for a candidate weight vector t (the per-node planning objective).
double node_objective(std::span<const double> t, double sigma2,
                      std::span<const double> c, std::span<const double> cov,
                      std::span<const double> r, double eta, double eta_hat);

struct MimcOptions {
  double v = 1.0;
  bool force_epsilon_signs = false;  // unweighted MIMC
  double rel_tol = 1e-10;
  int max_restarts = 4;
};

struct OptimizerError : std::runtime_error {
  MimcNode best;
  OptimizerError(const std::string& msg, MimcNode b)
      : std::runtime_error(msg), best(std::move(b)) {}
};

// Minimizes the node objective by multi-start Nelder-Mead (epsilon-sign and
// zero starts) and fills in delta, W, alpha, beta and the Theta table.
MimcNode optimize_node(const MultiIndex& lambda, const CovarianceOracle& oracle,
                       const NodeMap& nodes, const MimcOptions& opts);

struct MimcPlan {
  MultiIndex Lambda;
  double v = 0.0;
  NodeMap nodes;
  std::map<MultiIndex, double> global_theta;    // Theta^Lambda_nu
  std::map<MultiIndex, long long> n_samples;
  double sqrt_cost() const;                     // W_Lambda
};

// Optimizes every node 0 <= lambda <= Lambda in a linear extension of the
// partial order and assigns sample counts round(alpha_nu beta_Lambda / beta_nu).
MimcPlan mimc_plan(const MultiIndex& Lambda, const CovarianceOracle& oracle,
                   const MimcOptions& opts);

nlohmann::json mimc_plan_to_json(const MimcPlan& plan);

// Offline oracle backed by a JSON table of covariance blocks.
class TableOracle : public CovarianceOracle {
 public:
  static TableOracle from_json(const nlohmann::json& j);
  double sigma2(const MultiIndex& lambda) const override;
  double cov_fine(const MultiIndex& lambda, const MultiIndex& nu) const override;
  double cov_coarse(const MultiIndex& lambda, const MultiIndex& nu,
                    const MultiIndex& nu2) const override;
  double eta(const MultiIndex& lambda) const override;

 private:
  struct Entry {
    double sigma2 = 0.0;
    double eta = 1.0;
    std::map<MultiIndex, double> fine;
    std::map<std::pair<MultiIndex, MultiIndex>, double> coarse;
  };
  const Entry& entry(const MultiIndex& lambda) const;
  std::map<MultiIndex, Entry> entries_;
};

}  // namespace wmlmc

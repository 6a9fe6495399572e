#include "wmlmc/level_stats.hpp"

#include <algorithm>
#include <cmath>

namespace wmlmc {

double LevelMoments::delta_theta(double theta) const {
  if (!sigma_coarse || theta == 0.0) return sigma_fine;
  double sc = *sigma_coarse;
  double r = rho.value_or(0.0);
  double d2 = sigma_fine * sigma_fine - 2.0 * theta * r * sigma_fine * sc +
              theta * theta * sc * sc;
  return std::sqrt(std::max(d2, 0.0));
}

void MomentAccumulator::update(double fine_payoff, std::optional<double> coarse_payoff,
                               double cost) {
  if (n_ == 0) has_coarse_ = coarse_payoff.has_value();
  else if (has_coarse_ != coarse_payoff.has_value())
    throw std::invalid_argument("mixed coarse/no-coarse updates in one accumulator");
  ++n_;
  const double w = 1.0 / static_cast<double>(n_);
  const double df = fine_payoff - mean_f_;
  mean_f_ += df * w;
  m2_f_ += df * (fine_payoff - mean_f_);
  if (has_coarse_) {
    const double dc = *coarse_payoff - mean_c_;
    mean_c_ += dc * w;
    m2_c_ += dc * (*coarse_payoff - mean_c_);
    cxy_ += df * (*coarse_payoff - mean_c_);
  }
  cost_ += cost;
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  if (has_coarse_ != other.has_coarse_)
    throw std::invalid_argument("merging accumulators from different level kinds");
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double nt = na + nb;
  const double df = other.mean_f_ - mean_f_;
  m2_f_ += other.m2_f_ + df * df * na * nb / nt;
  if (has_coarse_) {
    const double dc = other.mean_c_ - mean_c_;
    m2_c_ += other.m2_c_ + dc * dc * na * nb / nt;
    cxy_ += other.cxy_ + df * dc * na * nb / nt;
    mean_c_ += dc * nb / nt;
  }
  mean_f_ += df * nb / nt;
  cost_ += other.cost_;
  n_ += other.n_;
}

LevelMoments MomentAccumulator::finalize() const {
  if (n_ < 2) throw InsufficientDataError("finalize needs at least 2 samples");
  LevelMoments m;
  m.level = level;
  m.n = n_;
  const double denom = static_cast<double>(n_ - 1);
  m.sigma_fine = std::sqrt(std::max(m2_f_ / denom, 0.0));
  m.mean_fine = mean_f_;
  m.eta = std::sqrt(cost_ / static_cast<double>(n_));
  if (has_coarse_) {
    double sc = std::sqrt(std::max(m2_c_ / denom, 0.0));
    m.sigma_coarse = sc;
    m.mean_coarse = mean_c_;
    m.mean_y = mean_f_ - mean_c_;
    double scale = m.sigma_fine * sc;
    // degenerate sigma maps to rho = 0 so planners take the theta = 0 branch
    double r = scale > 0.0 ? (cxy_ / denom) / scale : 0.0;
    m.rho = std::clamp(r, -1.0, 1.0);
  } else {
    m.mean_y = mean_f_;
  }
  return m;
}

void to_json(nlohmann::json& j, const LevelMoments& m) {
  j = nlohmann::json{{"level", m.level},
                     {"sigma_fine", m.sigma_fine},
                     {"eta", m.eta},
                     {"mean_fine", m.mean_fine},
                     {"mean_coarse", m.mean_coarse},
                     {"mean_y", m.mean_y},
                     {"n", m.n}};
  j["sigma_coarse"] = m.sigma_coarse ? nlohmann::json(*m.sigma_coarse) : nlohmann::json();
  j["rho"] = m.rho ? nlohmann::json(*m.rho) : nlohmann::json();
}

void from_json(const nlohmann::json& j, LevelMoments& m) {
  m = LevelMoments{};
  j.at("level").get_to(m.level);
  j.at("sigma_fine").get_to(m.sigma_fine);
  j.at("eta").get_to(m.eta);
  m.mean_fine = j.value("mean_fine", 0.0);
  m.mean_coarse = j.value("mean_coarse", 0.0);
  m.mean_y = j.value("mean_y", 0.0);
  m.n = j.value("n", 0LL);
  if (j.contains("sigma_coarse") && !j.at("sigma_coarse").is_null())
    m.sigma_coarse = j.at("sigma_coarse").get<double>();
  if (j.contains("rho") && !j.at("rho").is_null())
    m.rho = j.at("rho").get<double>();
}

nlohmann::json moments_to_json(const std::vector<LevelMoments>& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& m : table) rows.push_back(m);
  return nlohmann::json{{"levels", rows}};
}

std::vector<LevelMoments> moments_from_json(const nlohmann::json& j) {
  std::vector<LevelMoments> out;
  for (const auto& row : j.at("levels")) out.push_back(row.get<LevelMoments>());
  std::sort(out.begin(), out.end(),
            [](const LevelMoments& a, const LevelMoments& b) { return a.level < b.level; });
  return out;
}

}  // namespace wmlmc

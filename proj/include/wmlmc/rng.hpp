#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace wmlmc {

// Counter-based uniform stream: stateless splitmix64-style mixing of
// (key, counter), so any substream can be regenerated from its ids alone.
// Draw order within a substream is fixed; substreams never overlap keys.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_key(std::initializer_list<std::uint64_t> ids) {
  std::uint64_t k = 0x5851f42d4c957f2dULL;
  for (auto id : ids) k = mix64(k ^ mix64(id));
  return k;
}

// Inverse normal CDF, Acklam's rational approximation; relative error below
// 1.2e-9 over (0,1), orders of magnitude under any statistical tolerance
// here and ~5x cheaper than a refined version.
inline double inverse_normal_cdf(double p) {
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  return x;
}

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  // uniform in the open interval (0,1)
  double next_uniform() {
    std::uint64_t h = mix64(key_ ^ (counter_++ * 0xda942042e4dd58b5ULL));
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
  }

  double next_gaussian() { return inverse_normal_cdf(next_uniform()); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// One substream per (level, sample index); fresh by construction.
inline CounterRng make_substream(std::uint64_t seed, std::uint64_t level,
                                 std::uint64_t sample_index) {
  return CounterRng(derive_key({seed, level, sample_index}));
}

}  // namespace wmlmc

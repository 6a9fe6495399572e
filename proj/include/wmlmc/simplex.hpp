#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace wmlmc {

struct SimplexResult {
  std::vector<double> x;
  double f = 0.0;
  bool converged = false;
  int evaluations = 0;
};

// Deterministic Nelder-Mead for small dimensions. Ties in the vertex
// ordering are broken by index so the iteration path is reproducible.
inline SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x0, double scale = 0.1,
                                 double rel_tol = 1e-10, int max_iter = 20000) {
  const std::size_t n = x0.size();
  SimplexResult out;
  if (n == 0) {
    out.x = x0;
    out.f = f(x0);
    out.converged = true;
    out.evaluations = 1;
    return out;
  }

  std::vector<std::vector<double>> pts(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i)
    pts[i + 1][i] += (x0[i] != 0.0 ? 0.1 * std::abs(x0[i]) + scale : scale);
  std::vector<double> fv(n + 1);
  int evals = 0;
  for (std::size_t i = 0; i <= n; ++i) fv[i] = (++evals, f(pts[i]));

  std::vector<std::size_t> order(n + 1);
  auto sort_order = [&] {
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
  };

  for (int it = 0; it < max_iter; ++it) {
    sort_order();
    const std::size_t best = order[0], worst = order[n], second = order[n - 1];
    double spread = std::abs(fv[worst] - fv[best]);
    if (spread <= rel_tol * (std::abs(fv[best]) + rel_tol)) {
      out.converged = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[i][k];
    }
    for (auto& c : centroid) c /= static_cast<double>(n);

    auto blend = [&](double t) {
      std::vector<double> p(n);
      for (std::size_t k = 0; k < n; ++k)
        p[k] = centroid[k] + t * (pts[worst][k] - centroid[k]);
      return p;
    };

    auto xr = blend(-1.0);
    double fr = (++evals, f(xr));
    if (fr < fv[order[0]]) {
      auto xe = blend(-2.0);
      double fe = (++evals, f(xe));
      if (fe < fr) {
        pts[worst] = std::move(xe);
        fv[worst] = fe;
      } else {
        pts[worst] = std::move(xr);
        fv[worst] = fr;
      }
    } else if (fr < fv[second]) {
      pts[worst] = std::move(xr);
      fv[worst] = fr;
    } else {
      auto xc = blend(fr < fv[worst] ? -0.5 : 0.5);
      double fc = (++evals, f(xc));
      if (fc < std::min(fr, fv[worst])) {
        pts[worst] = std::move(xc);
        fv[worst] = fc;
      } else {
        // shrink toward the best vertex
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (std::size_t k = 0; k < n; ++k)
            pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
          fv[i] = (++evals, f(pts[i]));
        }
      }
    }
  }

  sort_order();
  out.x = pts[order[0]];
  out.f = fv[order[0]];
  out.evaluations = evals;
  return out;
}

}  // namespace wmlmc

#include "tfe/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace tfe {

// Gauss-Legendre nodes on [-1,1] by Newton iteration on the Legendre
// polynomial, then mapped to [0,1].  Deterministic and accurate to machine
// precision for the modest orders used here.
GaussRule1D gauss_rule_1d(int n) {
  if (n < 1) throw std::invalid_argument("gauss_rule_1d: need n >= 1");
  GaussRule1D rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int k = 0; k < n; ++k) {
    // Chebyshev-like initial guess for the k-th root (descending order).
    double t = std::cos(M_PI * (k + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      // Evaluate P_n(t) and P_n'(t) by the three-term recurrence.
      double p0 = 1.0, p1 = t;
      for (int m = 2; m <= n; ++m) {
        const double p2 = ((2 * m - 1) * t * p1 - (m - 1) * p0) / m;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    double p0 = 1.0, p1 = t;
    for (int m = 2; m <= n; ++m) {
      const double p2 = ((2 * m - 1) * t * p1 - (m - 1) * p0) / m;
      p0 = p1;
      p1 = p2;
    }
    const double dp = n * (t * p1 - p0) / (t * t - 1.0);
    // Node and weight on [-1,1], then map to [0,1] (weight scale 1/2).
    rule.points[n - 1 - k] = 0.5 * (t + 1.0);
    rule.weights[n - 1 - k] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
  return rule;
}

Quadrature tensor_gauss(int points_per_direction) {
  const GaussRule1D g = gauss_rule_1d(points_per_direction);
  Quadrature q;
  q.order = points_per_direction;
  const int n = points_per_direction;
  q.x.reserve(n * n);
  q.y.reserve(n * n);
  q.w.reserve(n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      q.x.push_back(g.points[i]);
      q.y.push_back(g.points[j]);
      q.w.push_back(g.weights[i] * g.weights[j]);
    }
  }
  return q;
}

}  // namespace tfe

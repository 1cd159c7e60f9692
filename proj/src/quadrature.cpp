#include "stdg/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stdg {

std::vector<QuadPoint1> gauss_legendre01(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre01: n must be positive");
  std::vector<QuadPoint1> rule(n);
  for (int i = 0; i < n; ++i) {
    // Newton iteration on P_n from the Chebyshev-like initial guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged root
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule[i] = {0.5 * (1.0 - x), 0.5 * w};
  }
  return rule;
}

std::vector<QuadPoint1> line_rule(int degree) { return gauss_legendre01(degree / 2 + 1); }

std::vector<QuadPoint2> triangle_rule(int degree) {
  // The collapse adds one power of (1 - u) to the integrand.
  const auto ru = gauss_legendre01((degree + 1) / 2 + 1);
  const auto rv = gauss_legendre01(degree / 2 + 1);
  std::vector<QuadPoint2> rule;
  rule.reserve(ru.size() * rv.size());
  for (const auto& qu : ru)
    for (const auto& qv : rv) {
      const double xi = qu.x;
      const double eta = qv.x * (1.0 - qu.x);
      rule.push_back({Vec2(xi, eta), qu.w * qv.w * (1.0 - qu.x)});
    }
  return rule;
}

}  // namespace stdg

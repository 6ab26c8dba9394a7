#pragma once

#include <array>
#include <cstddef>

namespace gp2d::quad {

// Gauss-Legendre rule on [-1, 1].
template <std::size_t K>
struct GaussRule {
  std::array<double, K> nodes;
  std::array<double, K> weights;
};

const GaussRule<4>& gauss4();
const GaussRule<8>& gauss8();

// Integrates f over [a, b] with a single K-point panel.
template <std::size_t K, class F>
double panel(const GaussRule<K>& rule, F&& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t i = 0; i < K; ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * sum;
}

// Cubic Hermite interpolation on [x0, x1].
struct Hermite {
  double x0, x1, y0, y1, d0, d1;

  double value(double x) const {
    const double h = x1 - x0;
    const double t = (x - x0) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * y1 +
           (t3 - t2) * h * d1;
  }
  double derivative(double x) const {
    const double h = x1 - x0;
    const double t = (x - x0) / h;
    const double t2 = t * t;
    return ((6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * h * d0 + (-6 * t2 + 6 * t) * y1 +
            (3 * t2 - 2 * t) * h * d1) /
           h;
  }
};

}  // namespace gp2d::quad

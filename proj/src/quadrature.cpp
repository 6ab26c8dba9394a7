#include "gp2d/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace gp2d::quad {
namespace {

template <std::size_t K>
GaussRule<K> make_rule() {
  GaussRule<K> rule{};
  for (std::size_t i = 0; i < K; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(K) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= K; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(K) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

}  // namespace

const GaussRule<4>& gauss4() {
  static const GaussRule<4> rule = make_rule<4>();
  return rule;
}

const GaussRule<8>& gauss8() {
  static const GaussRule<8> rule = make_rule<8>();
  return rule;
}

}  // namespace gp2d::quad

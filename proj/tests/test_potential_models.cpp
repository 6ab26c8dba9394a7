#include "doctest.h"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "gp2d/errors.hpp"
#include "gp2d/potential_models.hpp"

using namespace gp2d;
constexpr double kPi = std::numbers::pi;

namespace {

// (1/2 pi) int ln|x - y| rho(y) d^2y by nested adaptive quadrature in polar
// coordinates of y; the radial range is split at r and at the jumps of rho.
double log_kernel_oracle(const SmearedComparison& h, double r) {
  using boost::math::quadrature::gauss_kronrod;
  auto angular = [&](double rp) {
    auto f = [&](double th) { return 0.5 * std::log(r * r + rp * rp - 2 * r * rp * std::cos(th)); };
    return 2 * gauss_kronrod<double, 61>::integrate(f, 0.0, kPi, 12, 1e-13);
  };
  std::vector<double> cuts{0.0};
  for (double j : h.rho_breakpoints()) cuts.push_back(j);
  cuts.push_back(r);
  std::sort(cuts.begin(), cuts.end());
  double total = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    if (!(b > a) || a >= h.support()) continue;
    const double mid = 0.5 * (a + b);
    const double rho = h.rho(mid);
    if (rho == 0) continue;
    total += rho * gauss_kronrod<double, 31>::integrate([&](double rp) { return rp * angular(rp); }, a, b, 10, 1e-12);
  }
  return total / (2 * kPi);
}

}  // namespace

TEST_CASE("W_beta at N = 1 is W") {
  const auto W = RadialPotential::square_well(2.0, 1.5);
  const auto Wb = make_scaled(Family::W_beta, W, 1.0, 0.7);
  for (double r : {0.0, 0.3, 1.0, 1.49, 1.6}) CHECK(Wb(r) == W(r));
}

TEST_CASE("N ||W_beta||_1 = ||W||_1") {
  const auto W = RadialPotential::from_table({0, 0.5, 1.0}, {2.0, 1.0, 0.0});
  for (double N : {2.0, 10.0, 1e3, 1e6}) {
    const auto Wb = make_scaled(Family::W_beta, W, N, 0.8);
    CHECK(N * Wb.l1_norm() == doctest::Approx(W.l1_norm()).epsilon(1e-13));
  }
}

TEST_CASE("W_beta built from a square well lies in the class V_beta") {
  const auto W = RadialPotential::square_well(1.0, 1.0);
  for (double N : {4.0, 64.0, 4096.0}) {
    const auto Wb = make_scaled(Family::W_beta, W, N, 0.5);
    const auto c = class_constants(Wb, 0.5);
    CHECK(c.nonnegative);
    CHECK(in_class(Wb, 0.5, 10.0));
    CHECK(c.c1 == doctest::Approx(W.l1_norm()).epsilon(1e-12));
  }
}

TEST_CASE("V_N scaling is a closed-form argument transformation") {
  const auto V = RadialPotential::square_well(3.0, 1.0);
  const auto VN = make_scaled(Family::V_N, V, 4.0, 0.0, 1.0);
  CHECK(VN(0.5 * std::exp(-4.0)) == doctest::Approx(std::exp(8.0) * 3.0));
  CHECK(VN(1.01 * std::exp(-4.0)) == 0.0);
}

TEST_CASE("smeared comparison: charge, support, sign and the 2D log-kernel oracle") {
  const auto W = RadialPotential::square_well(1.0, 1.0);
  const auto Wb = make_scaled(Family::W_beta, W, 16.0, 1.0);
  const auto sm = make_smeared(Wb, 0.5);
  const auto& h = sm.h;
  CHECK(std::abs(h.total_charge()) < 1e-12);
  CHECK(h.support() == doctest::Approx(0.25));
  for (double r : {0.25, 0.2500001, 0.3, 1.0, 10.0}) CHECK(std::abs(h.h(r)) <= 1e-10);
  // Laplacian h = W_beta - U is positive at the core, so h dips below zero.
  for (double r : {0.0, 0.01, 0.0625, 0.1, 0.2, 0.249}) CHECK(h.h(r) <= 0.0);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uni(0.001, 0.3);
  double scale = std::abs(h.h(0.0));
  for (int i = 0; i < 10; ++i) {
    const double r = uni(rng);
    CAPTURE(r);
    CHECK(std::abs(h.h(r) - log_kernel_oracle(h, r)) <= 1e-6 * scale);
  }
}

TEST_CASE("discrete Laplacian of h converges at second order") {
  const auto Wb = make_scaled(Family::W_beta, RadialPotential::square_well(1.0, 1.0), 16.0, 1.0);
  const auto sm = make_smeared(Wb, 0.5);
  double prev = sm.h.laplacian_residual(200);
  for (int n : {400, 800, 1600}) {
    const double cur = sm.h.laplacian_residual(n);
    CAPTURE(n);
    CHECK(prev / cur > 3.5);
    prev = cur;
  }
}

TEST_CASE("smearing preconditions") {
  const auto Wb = make_scaled(Family::W_beta, RadialPotential::square_well(1.0, 1.0), 16.0, 0.5);
  CHECK_THROWS_AS(make_smeared(Wb, 0.7), PreconditionError);
  CHECK_THROWS_AS(make_smeared(Wb, -0.1), PreconditionError);
  const std::vector<double> three{4, 8, 16};
  CHECK_THROWS_AS(smeared_norm_report(RadialPotential::square_well(1, 1), three, 1.0, 0.5), DataError);
}

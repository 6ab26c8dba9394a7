#include "doctest.h"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

#include "gp2d/errors.hpp"
#include "gp2d/radial_scattering.hpp"

using namespace gp2d;
constexpr double kPi = std::numbers::pi;

namespace {

// Square well of height V0 on r < R0 in (-Laplacian + V/2) s = 0: s ~ I0(kr)
// inside, ln(r/a) outside; matching logarithmic derivatives at R0 fixes a.
double bessel_scattering_length(double V0, double R0) {
  const double k = std::sqrt(V0 / 2);
  return R0 * std::exp(-std::cyl_bessel_i(0.0, k * R0) / (k * R0 * std::cyl_bessel_i(1.0, k * R0)));
}

// Smallest eigenvalue of int |psi'|^2 + (V_N - M)|psi|^2 / 2 (r dr) on
// [0, R_beta] by cell-centred finite volumes, a discretisation independent of
// the finite elements used by the library.
double fd_lambda_min(const MicroscopicPair& p, int n) {
  const double h = p.R_beta / n;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    const double r = (i + 0.5) * h;
    w(i) = r * h;
    // Cell average of (V_N - M) r; both potentials jump inside cells.
    constexpr int sub = 256;
    double vr = 0;
    for (int k = 0; k < sub; ++k) {
      const double rk = (i + (k + 0.5) / sub) * h;
      vr += (p.V_N(rk) - p.M(rk)) * rk;
    }
    A(i, i) += 0.5 * vr * h / sub;
    if (i + 1 < n) {
      const double flux = (i + 1) * h / h;
      A(i, i) += flux;
      A(i + 1, i + 1) += flux;
      A(i, i + 1) -= flux;
      A(i + 1, i) -= flux;
    }
  }
  const Eigen::VectorXd s = w.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd S = s.asDiagonal() * A * s.asDiagonal();
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

}  // namespace

TEST_CASE("square well scattering length matches the Bessel closed form") {
  for (double V0 : {0.5, 1.0, 4.0, 20.0}) {
    const auto V = RadialPotential::square_well(V0, 1.0);
    for (double R : {1.0, 2.0, 4.0}) {
      const auto sol = solve_zero_energy(V, R);
      const double a = bessel_scattering_length(V0, 1.0);
      CHECK(std::abs(sol.scattering_length - a) / a < 1e-8);
    }
  }
}

TEST_CASE("I equals 4 pi / ln(R/a) and both integrations agree") {
  const auto V = RadialPotential::from_table({0, 0.5, 1.0, 1.5}, {3.0, 2.0, 0.5, 0.0}, "ramp");
  for (double R : {1.5, 2.0, 4.0, 10.0}) {
    const auto sol = solve_zero_energy(V, R);
    const double pred = 4 * kPi / std::log(R / sol.scattering_length);
    CHECK(std::abs(sol.integral_I - pred) / pred < 1e-8);
    CHECK(std::abs(sol.integral_I - sol.integral_I_ode) / pred < 1e-8);
  }
}

TEST_CASE("zero energy solution is monotone in (0, 1]") {
  const auto sol = solve_zero_energy(RadialPotential::square_well(5.0, 1.0), 3.0);
  for (std::size_t i = 0; i < sol.s_values.size(); ++i) {
    CHECK(sol.s_values[i] > 0);
    CHECK(sol.s_values[i] <= 1 + 1e-14);
    if (i) CHECK(sol.s_values[i] >= sol.s_values[i - 1] - 1e-14);
  }
  CHECK(sol.value(3.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("zero potential is degenerate with a = 0 and I = 0") {
  const auto sol = solve_zero_energy(RadialPotential::zero(1.0), 2.0);
  CHECK(sol.scattering_length == 0.0);
  CHECK(sol.integral_I == 0.0);
}

TEST_CASE("boundary radius below the support is rejected") {
  CHECK_THROWS_AS(solve_zero_energy(RadialPotential::square_well(1.0, 2.0), 1.0), PreconditionError);
}

TEST_CASE("scaled identity against the unscaled scattering length") {
  const auto V = RadialPotential::square_well(1.0, 1.0);
  for (double N : {2.0, 8.0, 32.0}) {
    const auto id = scaled_scattering_identity(V, N, 1.0);
    CHECK(id.relative_error < 1e-8);
  }
  CHECK_THROWS_AS(scaled_scattering_identity(V, 400.0, 1.0), ResolutionError);
}

TEST_CASE("microscopic pair invariants") {
  const auto V = RadialPotential::square_well(1.0, 1.0);
  for (double beta : {0.5, 1.0})
    for (double N : {4.0, 8.0, 16.0}) {
      const auto p = build_microscopic(V, N, beta);
      CAPTURE(N);
      CAPTURE(beta);
      CHECK(std::abs(p.root_residual) < 1e-10);
      CHECK(p.R_beta > p.inner_radius);
      CHECK(p.f(p.R_beta) == 1.0);
      CHECK(p.f(2 * p.R_beta) == 1.0);
      CHECK(p.g(1.5 * p.R_beta) == 0.0);
      CHECK(p.M(0.5 * p.inner_radius) == 0.0);
      CHECK(p.M(0.5 * (p.inner_radius + p.R_beta)) == doctest::Approx(p.height));
      const double lower = 1 + std::log(p.inner_radius / p.R_beta) / (N + std::log(p.R_beta / p.scattering_length));
      CHECK(p.K_beta <= 1.0);
      CHECK(p.K_beta >= lower);
      CHECK(p.g_norms.linf <= 1.0);
      CHECK(std::abs(p.vn_coupling - p.m_coupling) < 1e-8 * std::abs(p.m_coupling));
    }
}

TEST_CASE("overlapping supports are rejected") {
  CHECK_THROWS_AS(build_microscopic(RadialPotential::square_well(1.0, 50.0), 2.0, 1.0), PreconditionError);
}

TEST_CASE("pair quadratic form is nonnegative: finite elements vs finite volumes") {
  const auto p = build_microscopic(RadialPotential::square_well(1.0, 1.0), 2.0, 0.5);
  const auto fe = check_pair_positivity(p, 64);
  const double fd = fd_lambda_min(p, 1200);
  CHECK(fe.lambda_min >= -1e-6);
  CHECK(fd >= -1e-4);
  // f_beta is a zero mode of the Neumann problem, so both tend to 0.
  CHECK(std::abs(fe.lambda_min) < 1e-3);
  CHECK(std::abs(fd) < 1e-2);
}

TEST_CASE("g norm report fits need four sizes") {
  const auto V = RadialPotential::square_well(1.0, 1.0);
  std::vector<MicroscopicPair> pairs{build_microscopic(V, 8, 1), build_microscopic(V, 16, 1)};
  CHECK_THROWS_AS(g_norm_report(pairs), DataError);
}

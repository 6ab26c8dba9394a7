#include "doctest.h"

#include <cmath>
#include <random>

#include "gp2d/errors.hpp"
#include "gp2d/gp_propagator.hpp"
#include "gp2d/kernels.hpp"

using namespace gp2d;

namespace {

double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

ExternalField harmonic(double c) {
  return ExternalField::closed_form([c](double x, double y, double) { return c * (x * x + y * y); },
                                    [](double, double, double) { return 0.0; }, true);
}

}  // namespace

TEST_CASE("free Gaussian follows the analytic spreading law") {
  // i d_t phi = -Laplacian phi: phi_t = s^2/(s^2 + 2it) exp(-r^2 / (2 (s^2 + 2it))).
  const Grid2D g(40.0, 128);
  const double s2 = 1.0;
  auto exact = [&](double t) {
    return make_gp_state(
        g, [&](double x, double y) { return s2 / cplx(s2, 2 * t) * std::exp(-(x * x + y * y) / (2.0 * cplx(s2, 2 * t))); },
        false);
  };
  GpState phi = exact(0.0);
  GpPropagator(g, ExternalField::zero(), {0.0, 0.05}).advance(phi, 20);
  CHECK(phi.t == doctest::Approx(1.0));
  CHECK(max_diff(phi.field, exact(1.0).field) < 1e-10);
}

TEST_CASE("constant field only rotates the phase") {
  const Grid2D g(10.0, 32);
  auto init = [](double x, double y) { return std::exp(-(x * x + 2 * y * y) / 2) * std::polar(1.0, 0.7 * x); };
  GpState a = make_gp_state(g, init), b = make_gp_state(g, init);
  const double c = 1.3, dt = 1e-2;
  const auto constant = ExternalField::closed_form([c](double, double, double) { return c; }, {}, true);
  GpPropagator(g, constant, {2.0, dt}).advance(a, 100);
  GpPropagator(g, ExternalField::zero(), {2.0, dt}).advance(b, 100);
  for (auto& z : b.field) z *= std::polar(1.0, -c * 1.0);
  CHECK(max_diff(a.field, b.field) < 1e-10);
}

TEST_CASE("norm is conserved") {
  const Grid2D g(12.0, 48);
  GpState phi = make_gp_state(g, [](double x, double y) { return std::exp(-(x * x + y * y)) * cplx(1, x); });
  GpPropagator(g, harmonic(0.3), {5.0, 1e-3}).advance(phi, 1000);
  CHECK(std::abs(phi.norm() - 1) < 1e-12);
}

TEST_CASE("harmonic ground state energy") {
  // -Laplacian + r^2 has ground energy 2.
  const Grid2D g(16.0, 64);
  const auto seed = make_gp_state(g, [](double x, double y) { return std::exp(-0.3 * (x * x + y * y)) * (1 + 0.1 * x); });
  const auto gs = ground_state(harmonic(1.0), 0.0, {0.0, 1e-2}, seed);
  CHECK(gp_energy(gs, harmonic(1.0), {0.0, 1e-2}) == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("time-dependent field: energy changes by the field power") {
  const Grid2D g(12.0, 48);
  const auto field = ExternalField::closed_form(
      [](double x, double y, double t) { return 0.2 * (1 + 0.5 * std::sin(2 * t)) * (x * x + y * y); },
      [](double x, double y, double t) { return 0.2 * std::cos(2 * t) * (x * x + y * y); });
  GpState phi = make_gp_state(g, [](double x, double y) { return std::exp(-(x * x + y * y) / 2); });
  const GpParams params{1.0, 1e-3};
  GpPropagator prop(g, field, params);
  const double e0 = gp_energy(phi, field, params);
  double work = 0, p_prev = field_power(phi, field);
  for (int k = 0; k < 500; ++k) {
    prop.advance(phi, 1);
    const double p = field_power(phi, field);
    work += 0.5 * (p + p_prev) * params.dt;
    p_prev = p;
  }
  CHECK(std::abs(gp_energy(phi, field, params) - e0 - work) < 1e-5);
}

TEST_CASE("backward step undoes a forward step") {
  const Grid2D g(10.0, 32);
  const GpState phi = make_gp_state(g, [](double x, double y) { return std::exp(-(x * x + y * y) / 2) * cplx(1, y); });
  const GpState fwd = step(phi, harmonic(0.5), {3.0, 1e-2});
  GpState back = step(fwd, harmonic(0.5), {3.0, -1e-2});
  CHECK(max_diff(back.field, phi.field) < 1e-12);
}

TEST_CASE("invalid propagator parameters") {
  const Grid2D g(10.0, 16);
  CHECK_THROWS_AS(GpPropagator(g, ExternalField::zero(), {-1.0, 1e-3}), PreconditionError);
  CHECK_THROWS_AS(GpPropagator(g, ExternalField::zero(), {1.0, 0.0}), PreconditionError);
}

TEST_CASE("serial and parallel pointwise kernels agree exactly") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  std::vector<cplx> psi(5000);
  std::vector<double> A(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) {
    psi[i] = {n(rng), n(rng)};
    A[i] = n(rng);
  }
  auto a = psi, b = psi;
  kernels::nonlinear_phase(a, A, 0.4, 0.01, kernels::Exec::Serial);
  kernels::nonlinear_phase(b, A, 0.4, 0.01, kernels::Exec::Parallel);
  CHECK(max_diff(a, b) == 0.0);
  a = psi;
  b = psi;
  kernels::nonlinear_decay(a, A, 0.4, 0.01, kernels::Exec::Serial);
  kernels::nonlinear_decay(b, A, 0.4, 0.01, kernels::Exec::Parallel);
  CHECK(max_diff(a, b) == 0.0);
}

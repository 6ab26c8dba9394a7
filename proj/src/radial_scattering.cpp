#include "gp2d/radial_scattering.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gp2d/errors.hpp"
#include "gp2d/ode.hpp"
#include "gp2d/quadrature.hpp"

namespace gp2d {
namespace {

constexpr double kPi = std::numbers::pi;

std::size_t interval_index(const std::vector<double>& grid, double x) {
  auto it = std::upper_bound(grid.begin(), grid.end(), x);
  std::size_t i = static_cast<std::size_t>(it - grid.begin());
  if (i == 0) return 0;
  return std::min(i - 1, grid.size() - 2);
}

}  // namespace

double RegularSolution::value(double x) const {
  if (x <= r.front()) return 1.0 + value_at_origin_slope * x * x / 8.0;
  if (x >= r.back()) return u.back() + r.back() * du.back() * std::log(x / r.back());
  const std::size_t i = interval_index(r, x);
  return quad::Hermite{r[i], r[i + 1], u[i], u[i + 1], du[i], du[i + 1]}.value(x);
}

double RegularSolution::derivative(double x) const {
  if (x <= r.front()) return value_at_origin_slope * x / 4.0;
  if (x >= r.back()) return r.back() * du.back() / x;
  const std::size_t i = interval_index(r, x);
  return quad::Hermite{r[i], r[i + 1], u[i], u[i + 1], du[i], du[i + 1]}.derivative(x);
}

RegularSolution solve_regular(const RadialPotential& V, double r_end) {
  const auto bps = V.breakpoints();
  const double support = V.support_radius();
  if (!(r_end >= support * (1 - 1e-14)))
    throw PreconditionError("solve_regular: boundary radius below the potential support");

  RegularSolution sol;
  const double v0 = V(0.0);
  sol.value_at_origin_slope = v0;
  const double r0 = bps.front() * 1e-6;
  const double r02 = r0 * r0;
  const double q = v0 * r02;
  ode::State<5> y{1.0 + q / 8 + q * q / 256, q / 4 + q * q / 64, q / 2, r02 / 2, r02 / 2};
  auto record = [&](double r, const ode::State<5>& s) {
    sol.r.push_back(r);
    sol.u.push_back(s[0]);
    sol.du.push_back(s[1] / r);
    sol.flux_moment.push_back(s[2]);
    sol.first_moment.push_back(s[3]);
    sol.second_moment.push_back(s[4]);
  };
  record(r0, y);

  std::vector<double> edges(bps.begin(), bps.end());
  if (r_end > support) edges.push_back(r_end);
  ode::Options opt;
  opt.max_step = 0.01;
  double lo = r0;
  for (double hi : edges) {
    if (hi <= lo) continue;
    const double lo_in = std::nextafter(lo, hi), hi_in = std::nextafter(hi, lo);
    auto rhs = [&](double t, const ode::State<5>& s, ode::State<5>& ds) {
      const double r = std::exp(t);
      const double r2 = r * r;
      const double v = V(std::clamp(r, lo_in, hi_in));
      ds[0] = s[1];
      ds[1] = 0.5 * r2 * v * s[0];
      ds[2] = r2 * v * s[0];
      ds[3] = r2 * s[0];
      ds[4] = r2 * s[0] * s[0];
    };
    const double t_end = std::log(hi);
    y = ode::dopri5<5>(rhs, std::log(lo), t_end, y, opt, [&](double t, const ode::State<5>& s) {
      if (t == t_end) return;
      record(std::exp(t), s);
    });
    record(hi, y);
    if (hi == support) sol.support_index = sol.r.size() - 1;
    lo = hi;
  }
  return sol;
}

double ScatteringSolution::value(double r) const {
  if (r >= boundary_radius) {
    if (scattering_length <= 0) return 1.0;
    return std::log(r / scattering_length) / std::log(boundary_radius / scattering_length);
  }
  if (r <= r_grid.front()) return s_values.front();
  const std::size_t i = interval_index(r_grid, r);
  return quad::Hermite{r_grid[i], r_grid[i + 1], s_values[i], s_values[i + 1], ds_values[i], ds_values[i + 1]}
      .value(r);
}

ScatteringSolution solve_zero_energy(const RadialPotential& V, double R) {
  if (!(R >= V.support_radius() * (1 - 1e-14)))
    throw PreconditionError("solve_zero_energy: R must be at least the support radius");
  ScatteringSolution sol;
  sol.boundary_radius = R;
  sol.potential = V;
  if (V.is_zero()) {
    for (int i = 0; i <= 64; ++i) {
      sol.r_grid.push_back(R * std::pow(10.0, -6.0 + 6.0 * i / 64.0));
      sol.s_values.push_back(1.0);
      sol.ds_values.push_back(0.0);
    }
    sol.r_grid.back() = R;
    return sol;
  }
  const RegularSolution reg = solve_regular(V, R);
  const double uR = reg.u.back();
  sol.r_grid = reg.r;
  sol.s_values.reserve(reg.u.size());
  sol.ds_values.reserve(reg.u.size());
  for (std::size_t i = 0; i < reg.u.size(); ++i) {
    sol.s_values.push_back(reg.u[i] / uR);
    sol.ds_values.push_back(reg.du[i] / uR);
  }
  sol.s_values.back() = 1.0;
  const std::size_t k = reg.support_index;
  const double rs = reg.r[k];
  sol.scattering_length = rs * std::exp(-reg.u[k] / (rs * reg.du[k]));
  sol.integral_I_ode = 2 * kPi * reg.flux_moment[k] / uR;
  sol.integral_I = integral_I(sol);
  return sol;
}

double integral_I(const ScatteringSolution& sol) {
  const RadialPotential& V = sol.potential;
  if (V.is_zero()) return 0.0;
  const double support = V.support_radius();
  const auto& r = sol.r_grid;
  double sum = 0.5 * V(0.0) * sol.s_values.front() * r.front() * r.front();
  for (std::size_t i = 0; i + 1 < r.size() && r[i] < support; ++i) {
    const quad::Hermite s{r[i], r[i + 1], sol.s_values[i], sol.s_values[i + 1], sol.ds_values[i],
                          sol.ds_values[i + 1]};
    const double lo = std::nextafter(r[i], r[i + 1]), hi = std::nextafter(r[i + 1], r[i]);
    sum += quad::panel(
        quad::gauss4(), [&](double x) { return x * V(std::clamp(x, lo, hi)) * s.value(x); }, r[i], r[i + 1]);
  }
  return 2 * kPi * sum;
}

ScaledIdentity scaled_scattering_identity(const RadialPotential& V, double N, double R) {
  if (N < 0) throw PreconditionError("scaled_scattering_identity: N must be nonnegative");
  const double shrink = std::exp(-N);
  if (2 * N > 700 || shrink * V.support_radius() * 1e-6 < 1e-290) {
    std::ostringstream msg;
    msg << "scaled_scattering_identity: e^-N support (N=" << N << ") is not representable";
    throw ResolutionError(msg.str());
  }
  if (!(R >= shrink * V.support_radius()))
    throw PreconditionError("scaled_scattering_identity: R below the scaled support e^-N * support");
  const RadialPotential VN = N == 0 ? V : V.rescaled(std::exp(2 * N), shrink);
  ScaledIdentity out;
  out.value = solve_zero_energy(VN, R).integral_I;
  if (V.is_zero()) return out;
  const double a = solve_zero_energy(V, V.support_radius()).scattering_length;
  out.predicted = 4 * kPi / (N + std::log(R / a));
  out.relative_error = std::abs(out.value - out.predicted) / std::abs(out.predicted);
  if (out.relative_error > 1e-6) {
    std::ostringstream msg;
    msg << "scaled_scattering_identity: direct " << out.value << " vs predicted " << out.predicted;
    throw ConvergenceError(msg.str());
  }
  return out;
}

}  // namespace gp2d

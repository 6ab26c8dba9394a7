#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>

#include "gp2d/errors.hpp"

namespace gp2d::ode {

struct Options {
  double rtol = 1e-13;
  double atol = 1e-15;
  double max_step = 0.0;  // 0 means unbounded
  double initial_step = 0.0;
  long max_steps = 2'000'000;
};

template <std::size_t K>
using State = std::array<double, K>;

// Dormand-Prince 5(4) with PI step control. Integrates from t0 to t1 (either
// direction); observer(t, y) is invoked after every accepted step.
template <std::size_t K, class Rhs, class Observer>
State<K> dopri5(Rhs&& rhs, double t0, double t1, State<K> y, const Options& opt, Observer&& observer) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  const double span = t1 - t0;
  if (span == 0.0) return y;
  const double dir = span > 0 ? 1.0 : -1.0;
  const double length = std::abs(span);
  double h = opt.initial_step > 0 ? opt.initial_step : length / 100.0;
  if (opt.max_step > 0) h = std::min(h, opt.max_step);
  const double h_min = std::min(1e-14 * std::max(std::abs(t0), std::abs(t1)), 1e-6 * length) + 1e-300;

  State<K> k1, k2, k3, k4, k5, k6, k7, tmp, ynew;
  rhs(t0, y, k1);
  double t = t0;
  double err_prev = 1e-4;
  long steps = 0;
  while (dir * (t1 - t) > 0) {
    if (++steps > opt.max_steps) {
      std::ostringstream msg;
      msg << "dopri5: step limit " << opt.max_steps << " reached at t=" << t << " with h=" << h;
      throw ConvergenceError(msg.str());
    }
    bool last = false;
    if (h >= std::abs(t1 - t)) {
      h = std::abs(t1 - t);
      last = true;
    }
    const double hs = dir * h;
    for (std::size_t i = 0; i < K; ++i) tmp[i] = y[i] + hs * a21 * k1[i];
    rhs(t + c2 * hs, tmp, k2);
    for (std::size_t i = 0; i < K; ++i) tmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + c3 * hs, tmp, k3);
    for (std::size_t i = 0; i < K; ++i) tmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * hs, tmp, k4);
    for (std::size_t i = 0; i < K; ++i)
      tmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(t + c5 * hs, tmp, k5);
    for (std::size_t i = 0; i < K; ++i)
      tmp[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    const double t_new = last ? t1 : t + hs;
    rhs(t_new, tmp, k6);
    for (std::size_t i = 0; i < K; ++i)
      ynew[i] = y[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    rhs(t_new, ynew, k7);

    double err = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
      const double ei = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      err = std::max(err, std::abs(ei) / sc);
    }
    if (!std::isfinite(err)) err = 1e10;

    if (err <= 1.0) {
      t = t_new;
      y = ynew;
      k1 = k7;
      observer(t, y);
      const double fac = err == 0.0 ? 5.0 : 0.9 * std::pow(err, -0.7 / 5) * std::pow(err_prev, 0.4 / 5);
      h *= std::clamp(fac, 0.2, 5.0);
      err_prev = std::max(err, 1e-4);
    } else {
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
    }
    if (opt.max_step > 0) h = std::min(h, opt.max_step);
    if (h < h_min && std::abs(t1 - t) > h_min) {
      std::ostringstream msg;
      msg << "dopri5: step size underflow h=" << h << " at t=" << t << " (error ratio " << err << ")";
      throw ConvergenceError(msg.str());
    }
  }
  return y;
}

template <std::size_t K, class Rhs>
State<K> dopri5(Rhs&& rhs, double t0, double t1, State<K> y, const Options& opt) {
  return dopri5<K>(std::forward<Rhs>(rhs), t0, t1, y, opt, [](double, const State<K>&) {});
}

}  // namespace gp2d::ode

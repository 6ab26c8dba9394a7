#include "gp2d/fit.hpp"

#include <cmath>
#include <sstream>

#include "gp2d/errors.hpp"

namespace gp2d {

PowerLawFit fit_power_law(std::span<const double> N, std::span<const double> y, double log_power) {
  if (N.size() != y.size()) throw DataError("fit_power_law: N and y differ in length");
  if (N.size() < 4) throw DataError("fit_power_law: need at least 4 points");
  const std::size_t n = N.size();
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(y[i] > 0) || !std::isfinite(y[i])) {
      std::ostringstream msg;
      msg << "fit_power_law: nonpositive value y=" << y[i] << " at N=" << N[i];
      throw DataError(msg.str());
    }
    if (!(N[i] > 1)) throw DataError("fit_power_law: N must exceed 1");
    xs[i] = std::log(N[i]);
    ys[i] = std::log(y[i]) - log_power * std::log(xs[i]);
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0) throw DataError("fit_power_law: all N identical");
  PowerLawFit fit;
  fit.exponent = sxy / sxx;
  fit.log_prefactor = my - fit.exponent * mx;
  fit.log_power = log_power;
  double ss = 0;
  fit.residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    fit.residuals[i] = ys[i] - (fit.log_prefactor + fit.exponent * xs[i]);
    ss += fit.residuals[i] * fit.residuals[i];
  }
  fit.stderr_exponent = std::sqrt(ss / static_cast<double>(n - 2) / sxx);
  return fit;
}

}  // namespace gp2d

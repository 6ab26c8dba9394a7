#pragma once

#include <span>
#include <vector>

namespace gp2d {

// y ~ C N^p (ln N)^q with q declared by the caller; p from least squares on
// ln y - q ln ln N against ln N.
struct PowerLawFit {
  double exponent = 0;
  double stderr_exponent = 0;
  double log_prefactor = 0;
  double log_power = 0;
  std::vector<double> residuals;
};

PowerLawFit fit_power_law(std::span<const double> N, std::span<const double> y, double log_power = 0);

}  // namespace gp2d

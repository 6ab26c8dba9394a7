#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "gp2d/grid.hpp"

namespace gp2d {

// Real external potential A_t(x, y). Either closed form (with optional
// analytic time derivative) or tabulated snapshots on a fixed grid with
// cubic (Catmull-Rom) interpolation in time. Values are immutable.
class ExternalField {
 public:
  using Function = std::function<double(double x, double y, double t)>;

  static ExternalField zero();
  static ExternalField closed_form(Function A, Function A_dot = {}, bool is_static = false);
  static ExternalField static_samples(const Grid2D& grid, std::vector<double> values);
  static ExternalField tabulated(const Grid2D& grid, std::vector<double> times,
                                 std::vector<std::vector<double>> snapshots);

  std::vector<double> sample(const Grid2D& grid, double t) const;
  // Analytic derivative when provided, centred differences otherwise.
  std::vector<double> sample_dot(const Grid2D& grid, double t) const;
  bool is_static() const { return static_; }
  bool is_zero() const { return zero_; }
  double sup_norm(const Grid2D& grid, double t) const;

 private:
  struct Table;
  Function A_;
  Function A_dot_;
  std::shared_ptr<const Table> table_;
  bool static_ = true;
  bool zero_ = false;
};

}  // namespace gp2d

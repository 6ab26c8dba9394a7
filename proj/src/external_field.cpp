#include "gp2d/external_field.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gp2d/errors.hpp"

namespace gp2d {

struct ExternalField::Table {
  Grid2D grid;
  std::vector<double> times;
  std::vector<std::vector<double>> snapshots;
};

ExternalField ExternalField::zero() {
  ExternalField f;
  f.A_ = [](double, double, double) { return 0.0; };
  f.A_dot_ = [](double, double, double) { return 0.0; };
  f.zero_ = true;
  return f;
}

ExternalField ExternalField::closed_form(Function A, Function A_dot, bool is_static) {
  if (!A) throw PreconditionError("ExternalField: closed form requires a function");
  ExternalField f;
  f.A_ = std::move(A);
  f.A_dot_ = is_static ? Function([](double, double, double) { return 0.0; }) : std::move(A_dot);
  f.static_ = is_static;
  return f;
}

ExternalField ExternalField::static_samples(const Grid2D& grid, std::vector<double> values) {
  return tabulated(grid, {0.0}, {std::move(values)});
}

ExternalField ExternalField::tabulated(const Grid2D& grid, std::vector<double> times,
                                       std::vector<std::vector<double>> snapshots) {
  if (times.empty() || times.size() != snapshots.size())
    throw PreconditionError("ExternalField: need one snapshot per time");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw PreconditionError("ExternalField: snapshot times must increase");
  for (const auto& s : snapshots) {
    if (s.size() != grid.size()) throw PreconditionError("ExternalField: snapshot size does not match the grid");
    for (double v : s)
      if (!std::isfinite(v)) throw PreconditionError("ExternalField: non-finite sample");
  }
  ExternalField f;
  f.static_ = times.size() == 1;
  f.table_ = std::make_shared<Table>(Table{grid, std::move(times), std::move(snapshots)});
  return f;
}

std::vector<double> ExternalField::sample(const Grid2D& grid, double t) const {
  std::vector<double> out(grid.size(), 0.0);
  if (zero_) return out;
  if (table_) {
    const Table& tb = *table_;
    if (!(tb.grid == grid)) throw PreconditionError("ExternalField: tabulated on a different grid");
    const auto& ts = tb.times;
    if (ts.size() == 1 || t <= ts.front()) return tb.snapshots.front();
    if (t >= ts.back()) return tb.snapshots.back();
    const std::size_t i = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin()) - 1;
    const std::size_t im = i == 0 ? 0 : i - 1;
    const std::size_t ip = i + 1;
    const std::size_t ipp = std::min(i + 2, ts.size() - 1);
    const double h = ts[ip] - ts[i];
    const double u = (t - ts[i]) / h;
    const double u2 = u * u, u3 = u2 * u;
    const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u, h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
    for (std::size_t k = 0; k < out.size(); ++k) {
      const double y0 = tb.snapshots[i][k], y1 = tb.snapshots[ip][k];
      const double d0 = (tb.snapshots[ip][k] - tb.snapshots[im][k]) / (ts[ip] - ts[im]) * h;
      const double d1 = (tb.snapshots[ipp][k] - tb.snapshots[i][k]) / (ts[ipp] - ts[i]) * h;
      out[k] = h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1;
    }
    return out;
  }
  const int n = grid.points();
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix)
      out[static_cast<std::size_t>(iy) * n + ix] = A_(grid.coordinate(ix), grid.coordinate(iy), t);
  return out;
}

std::vector<double> ExternalField::sample_dot(const Grid2D& grid, double t) const {
  if (static_ || zero_) return std::vector<double>(grid.size(), 0.0);
  if (!table_ && A_dot_) {
    std::vector<double> out(grid.size());
    const int n = grid.points();
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix)
        out[static_cast<std::size_t>(iy) * n + ix] = A_dot_(grid.coordinate(ix), grid.coordinate(iy), t);
    return out;
  }
  const double eps = 1e-5;
  auto plus = sample(grid, t + eps);
  const auto minus = sample(grid, t - eps);
  for (std::size_t k = 0; k < plus.size(); ++k) plus[k] = (plus[k] - minus[k]) / (2 * eps);
  return plus;
}

double ExternalField::sup_norm(const Grid2D& grid, double t) const {
  double m = 0;
  for (double v : sample(grid, t)) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace gp2d

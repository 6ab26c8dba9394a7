#include "gp2d/radial_potential.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "gp2d/errors.hpp"
#include "gp2d/quadrature.hpp"

namespace gp2d {

RadialPotential::RadialPotential(Profile profile, double support_radius, std::vector<double> breakpoints,
                                 std::string description)
    : profile_(std::move(profile)),
      support_(support_radius),
      breakpoints_(std::move(breakpoints)),
      description_(std::move(description)) {
  if (!(support_ > 0) || !std::isfinite(support_))
    throw PreconditionError("RadialPotential: support radius must be positive and finite");
  std::erase_if(breakpoints_, [&](double b) { return !(b > 0) || b >= support_; });
  breakpoints_.push_back(support_);
  std::sort(breakpoints_.begin(), breakpoints_.end());
  breakpoints_.erase(std::unique(breakpoints_.begin(), breakpoints_.end()), breakpoints_.end());

  bool all_zero = true;
  double lo = 0.0;
  for (double hi : breakpoints_) {
    for (int i = 0; i <= 32; ++i) {
      const double r = lo + (hi - lo) * i / 32.0;
      const double v = profile_(r);
      if (!(v >= 0) || !std::isfinite(v)) {
        std::ostringstream msg;
        msg << "RadialPotential '" << description_ << "': sample V(" << r << ") = " << v
            << " is negative or not finite";
        throw PreconditionError(msg.str());
      }
      if (v != 0) all_zero = false;
    }
    lo = hi;
  }
  zero_ = all_zero;
}

RadialPotential RadialPotential::square_well(double height, double radius) {
  if (!(height >= 0)) throw PreconditionError("square_well: height must be nonnegative");
  std::ostringstream desc;
  desc << "square_well(height=" << height << ", radius=" << radius << ")";
  return RadialPotential([height, radius](double r) { return r <= radius ? height : 0.0; }, radius, {},
                         desc.str());
}

RadialPotential RadialPotential::zero(double support_radius) {
  return RadialPotential([](double) { return 0.0; }, support_radius, {}, "zero");
}

RadialPotential RadialPotential::from_table(std::vector<double> r, std::vector<double> v, std::string description) {
  if (r.size() != v.size() || r.size() < 2) throw PreconditionError("from_table: need >= 2 (r, V) rows");
  for (std::size_t i = 1; i < r.size(); ++i)
    if (!(r[i] > r[i - 1])) throw PreconditionError("from_table: radii must be strictly increasing");
  if (r.front() < 0) throw PreconditionError("from_table: radii must be nonnegative");
  for (double x : v)
    if (!(x >= 0)) throw PreconditionError("from_table: negative potential sample rejected");
  const double support = r.back();
  std::vector<double> bps(r.begin(), r.end());
  auto profile = [r = std::move(r), v = std::move(v)](double x) {
    if (x <= r.front()) return v.front();
    if (x >= r.back()) return x > r.back() ? 0.0 : v.back();
    const auto it = std::upper_bound(r.begin(), r.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - r.begin()) - 1;
    const double w = (x - r[i]) / (r[i + 1] - r[i]);
    return (1 - w) * v[i] + w * v[i + 1];
  };
  return RadialPotential(std::move(profile), support, std::move(bps), std::move(description));
}

RadialPotential RadialPotential::load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("load_table: cannot open " + path.string());
  std::vector<double> r, v;
  std::string line;
  while (std::getline(in, line)) {
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    std::istringstream row(line);
    double a, b;
    if (row >> a >> b) {
      r.push_back(a);
      v.push_back(b);
    }
  }
  return from_table(std::move(r), std::move(v), "table:" + path.filename().string());
}

RadialPotential RadialPotential::rescaled(double amplitude, double length) const {
  if (!(amplitude >= 0) || !(length > 0)) throw PreconditionError("rescaled: amplitude >= 0 and length > 0");
  std::vector<double> bps;
  bps.reserve(breakpoints_.size());
  for (double b : breakpoints_) bps.push_back(b * length);
  std::ostringstream desc;
  desc << amplitude << "*[" << description_ << "](r/" << length << ")";
  auto inner = profile_;
  const double support = support_;
  RadialPotential out(
      [inner, amplitude, length, support](double r) {
        const double y = r / length;
        return y > support ? 0.0 : amplitude * inner(y);
      },
      support_ * length, std::move(bps), desc.str());
  out.zero_ = zero_ || amplitude == 0.0;
  return out;
}

double RadialPotential::l1_norm() const {
  double sum = 0.0, lo = 0.0;
  for (double hi : breakpoints_) {
    const double a = std::nextafter(lo, hi), b = std::nextafter(hi, lo);
    sum += quad::panel(quad::gauss8(), [&](double r) { return r * profile_(std::clamp(r, a, b)); }, lo, hi);
    lo = hi;
  }
  return 2 * std::numbers::pi * sum;
}

}  // namespace gp2d

#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace gp2d {

// Nonnegative, compactly supported radial profile V(r). Breakpoints mark
// radii where the profile or its derivative may jump; they always end with
// the support radius.
class RadialPotential {
 public:
  using Profile = std::function<double(double)>;

  RadialPotential(Profile profile, double support_radius, std::vector<double> breakpoints,
                  std::string description);

  static RadialPotential square_well(double height, double radius);
  static RadialPotential zero(double support_radius = 1.0);
  // Linear interpolation through (r, V) samples; V = 0 beyond the last radius.
  static RadialPotential from_table(std::vector<double> r, std::vector<double> v,
                                    std::string description = "table");
  // Two whitespace-separated columns per line; '#' starts a comment.
  static RadialPotential load_table(const std::filesystem::path& path);

  double operator()(double r) const { return r > support_ ? 0.0 : profile_(r); }
  double support_radius() const { return support_; }
  std::span<const double> breakpoints() const { return breakpoints_; }
  const std::string& description() const { return description_; }
  bool is_zero() const { return zero_; }

  // x -> amplitude * V(x / length)
  RadialPotential rescaled(double amplitude, double length) const;

  // 2 pi int r V dr, exact for piecewise polynomial profiles of degree <= 14.
  double l1_norm() const;

 private:
  Profile profile_;
  double support_;
  std::vector<double> breakpoints_;
  std::string description_;
  bool zero_ = false;
};

}  // namespace gp2d

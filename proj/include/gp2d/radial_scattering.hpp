#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gp2d/fit.hpp"
#include "gp2d/radial_potential.hpp"

namespace gp2d {

// Regular zero-energy solution u of (1/r)(r u')' = V u / 2 with u(0) = 1,
// sampled on an adaptive grid that is log-spaced near the origin. The
// cumulative moments are running integrals from 0 to r_grid[i].
struct RegularSolution {
  std::vector<double> r, u, du;
  std::vector<double> flux_moment;    // int r V u dr
  std::vector<double> first_moment;   // int r u dr
  std::vector<double> second_moment;  // int r u^2 dr
  double value_at_origin_slope = 0;   // V(0)
  std::size_t support_index = 0;      // r[support_index] == support radius

  double value(double r) const;
  double derivative(double r) const;
};

RegularSolution solve_regular(const RadialPotential& V, double r_end);

struct ScatteringSolution {
  std::vector<double> r_grid;
  std::vector<double> s_values;
  std::vector<double> ds_values;
  double boundary_radius = 0;
  double integral_I = 0;
  double scattering_length = 0;
  // Same integral accumulated alongside the ODE; agrees with integral_I.
  double integral_I_ode = 0;
  RadialPotential potential = RadialPotential::zero();

  double value(double r) const;
};

ScatteringSolution solve_zero_energy(const RadialPotential& V, double R);

// 2 pi int r V s dr by Gauss panels on the solution grid with Hermite
// interpolation of s.
double integral_I(const ScatteringSolution& sol);

struct ScaledIdentity {
  double value = 0;      // int V_N j_{N,R} solved on the scaled problem
  double predicted = 0;  // 4 pi / (N + ln(R/a)) with the unscaled a
  double relative_error = 0;
};

// Throws ResolutionError when e^(-N) scales fall outside double range and
// ConvergenceError when the two sides disagree beyond 1e-6 relative.
ScaledIdentity scaled_scattering_identity(const RadialPotential& V, double N, double R);

struct GNorms {
  double l1 = 0, l2 = 0, linf = 0;
  double l1_error = 0, l2_error = 0;
};

class MicroscopicPair {
 public:
  double N = 0;
  double beta = 0;
  double inner_radius = 0;  // N^-beta
  double R_beta = 0;
  double height = 0;  // 4 pi N^(-1+2 beta)
  double K_beta = 1;
  double scattering_length = 0;
  GNorms g_norms;
  double root_residual = 0;    // int (V_N - M_beta) f_beta
  double vn_coupling = 0;      // N ||V_N f_beta||_1
  double m_coupling = 0;       // N ||M_beta f_beta||_1
  double matching_defect = 0;  // inner value of g from the inward solve vs outward solve
  std::vector<double> scan_trace;  // radii probed while bracketing R_beta
  bool degenerate = false;         // V == 0

  double M(double r) const;
  double V_N(double r) const;
  double f(double r) const;
  double g(double r) const;
  // j_{N, R_beta}(r), the scaled scattering state normalised at R_beta.
  double j(double r) const;
  double core_radius() const;  // e^-N * support(V)

  struct Detail;
  std::shared_ptr<const Detail> detail;
};

MicroscopicPair build_microscopic(const RadialPotential& V, double N, double beta);

// N ||M_beta f_beta||_1 - 4 pi
double coupling_deviation(const MicroscopicPair& pair);
// N ||M_beta||_1 - 4 pi
double height_deviation(const MicroscopicPair& pair);

struct GNormReport {
  PowerLawFit l1;  // after dividing ln N
  PowerLawFit l2;
  PowerLawFit l1_raw;  // no log division
  PowerLawFit l2_raw;
  double max_linf = 0;
  bool linf_bounded = true;
};

GNormReport g_norm_report(std::span<const MicroscopicPair> pairs);

struct PositivityResult {
  double lambda_min = 0;
  std::vector<double> lambda_by_level;
  std::vector<int> nodes_by_level;
  bool nonincreasing = true;
};

// Smallest eigenvalue of int_{r<=R_beta} |psi'|^2 + (V_N - M_beta)|psi|^2/2 on
// radial P1 finite elements over [0, R_beta]; levels double the mesh until
// grid_resolution elements per segment are reached.
PositivityResult check_pair_positivity(const MicroscopicPair& pair, int grid_resolution);

}  // namespace gp2d

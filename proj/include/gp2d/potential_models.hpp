#pragma once

#include <span>
#include <string>
#include <vector>

#include "gp2d/fit.hpp"
#include "gp2d/radial_potential.hpp"

namespace gp2d {

class MicroscopicPair;

enum class Family { W_beta, V_N, U_smeared, M_beta };

const char* family_name(Family f);

// Scaled potential evaluated by closed-form argument transformation.
//   W_beta: N^(-1+2 beta) W(N^beta r)
//   V_N:    e^(2 N s) V(e^(N s) r)
//   U_smeared / M_beta: constant height on [inner, outer] (inner open).
class ScaledPotential {
 public:
  Family family = Family::W_beta;
  RadialPotential base = RadialPotential::zero();
  double N = 1;
  double beta = 0;   // beta for W and M, beta of the smeared W for U
  double beta1 = 0;  // U only
  double s = 1;      // V_N only

  double operator()(double r) const;
  double support_radius() const;
  std::vector<double> breakpoints() const;
  double l1_norm() const;
  double l2_norm() const;
  double linf_norm() const;
  RadialPotential as_radial() const;
  std::string description() const;

  double amplitude() const { return amplitude_; }
  double length() const { return length_; }

 private:
  friend ScaledPotential make_scaled(Family, const RadialPotential&, double, double, double);
  friend ScaledPotential make_disc(Family, double, double, double, double, double);
  double amplitude_ = 1;  // W, V: amplitude; discs: height
  double length_ = 1;     // W, V: length scale; discs: outer radius
  double inner_ = 0;      // discs only
};

ScaledPotential make_scaled(Family family, const RadialPotential& base, double N, double beta, double s = 1.0);
// Flat disc/annulus of the given height; used for U_smeared and M_beta.
ScaledPotential make_disc(Family family, double height, double inner, double outer, double N, double beta);
ScaledPotential make_m_beta(const MicroscopicPair& pair);

// Constants C of the class V_beta realised by U at its own N:
// ||U||_1 <= C1/N, ||U||_2 <= C2 N^(-1+beta), ||U||_inf <= Cinf N^(-1+2 beta), supp <= Cs N^-beta.
struct ClassConstants {
  double c1 = 0, c2 = 0, cinf = 0, csupport = 0;
  bool nonnegative = true;
  double max() const;
};

ClassConstants class_constants(const ScaledPotential& U, double beta);
bool in_class(const ScaledPotential& U, double beta, double C);

// h with Laplacian rho = W_beta - U_{beta1,beta}, vanishing for r >= N^-beta1:
//   h(r) = ln r Q(r) + T(r),  Q(r) = int_0^r r' rho,  T(r) = int_r^inf ln r' rho r'.
class SmearedComparison {
 public:
  struct Norms {
    double linf = 0, l1 = 0, l2 = 0, grad_l2 = 0;
    double linf_error = 0, l1_error = 0, l2_error = 0, grad_l2_error = 0;
  };

  SmearedComparison(const ScaledPotential& W_beta, const ScaledPotential& U, int points_per_decade = 64);

  double h(double r) const { return eval(fine_, r).h; }
  double grad_h(double r) const { return eval(fine_, r).grad; }
  double rho(double r) const;
  double support() const { return delta_; }
  // 2 pi int r rho dr
  double total_charge() const;
  const Norms& norms() const { return norms_; }
  // Max |(1/r)(r h')' - rho| / max|rho| with central differences on a uniform
  // grid of the given size, skipping nodes within two cells of a jump of rho.
  double laplacian_residual(int intervals) const;
  std::vector<double> rho_breakpoints() const { return jumps_; }

 private:
  struct Tables {
    std::vector<double> nodes, Q, T;
  };
  struct Value {
    double h, grad;
  };
  Tables build(int points_per_decade) const;
  Value eval(const Tables& t, double r) const;
  Norms integrate(const Tables& t) const;

  ScaledPotential W_;
  ScaledPotential U_;
  double delta_;
  std::vector<double> jumps_;
  Tables fine_;
  Norms norms_;
};

struct Smeared {
  ScaledPotential U;
  SmearedComparison h;
};

Smeared make_smeared(const ScaledPotential& W_beta, double beta1, int points_per_decade = 64);

struct SmearedNormRow {
  double N = 0;
  SmearedComparison::Norms norms;
  double h0_l2 = 0;
  double gradient_constant = 0;  // max_r |h'(r)| N sqrt(r^2 + N^(-2 beta))
  double total_charge = 0;
  double outside_max = 0;  // max |h| sampled on [N^-beta1, 2 N^-beta1]
};

struct SmearedNormReport {
  std::vector<SmearedNormRow> rows;
  PowerLawFit linf;      // log power 1
  PowerLawFit l1;        // log power 1
  PowerLawFit l2;        // log power 1
  PowerLawFit grad_l2;   // log power 1/2
  PowerLawFit h0_l2;     // log power 0
  PowerLawFit gradient_constant;
  double beta = 0, beta1 = 0;
};

SmearedNormReport smeared_norm_report(const RadialPotential& W, std::span<const double> Ns, double beta,
                                      double beta1);

}  // namespace gp2d

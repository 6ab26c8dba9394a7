#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gp2d/external_field.hpp"
#include "gp2d/grid.hpp"
#include "gp2d/kernels.hpp"

namespace gp2d {

struct GpState {
  Grid2D grid;
  std::vector<cplx> field;
  double t = 0;

  // Discrete L2 norm sqrt(sum |phi|^2 h^2).
  double norm() const;
  double peak_density() const;
};

GpState make_gp_state(const Grid2D& grid, const std::function<cplx(double, double)>& phi, bool normalise = true);

struct GpParams {
  double coupling = 0;  // b_U
  double dt = 1e-3;
};

// i d_t phi = (-Laplacian + A_t) phi + b |phi|^2 phi, Strang split:
// half phase at A(t), exact kinetic step, half phase at A(t + dt).
GpState step(const GpState& state, const ExternalField& field, const GpParams& params);

// <grad phi, grad phi> + <phi, (A_t + b |phi|^2 / 2) phi>
double gp_energy(const GpState& state, const ExternalField& field, const GpParams& params);

// <phi, A_dot phi>
double field_power(const GpState& state, const ExternalField& field);

// Fraction of spectral mass with |k_x| or |k_y| above 2/3 of Nyquist.
double spectral_tail_fraction(const GpState& state);

struct GpWarning {
  double t = 0;
  std::string message;
};

// Reusable stepping workspace with an energy-drift monitor for static fields.
class GpPropagator {
 public:
  GpPropagator(const Grid2D& grid, ExternalField field, GpParams params,
               kernels::Exec exec = kernels::Exec::Parallel);

  void advance(GpState& state, long steps);
  const std::vector<GpWarning>& warnings() const { return warnings_; }
  const GpParams& params() const { return params_; }
  // Relative energy drift that triggers a warning.
  double drift_tolerance = 1e-6;

 private:
  void half_phase(GpState& state, double t);

  Grid2D grid_;
  ExternalField field_;
  GpParams params_;
  kernels::Exec exec_;
  std::shared_ptr<Fft2D> fft_;
  std::vector<cplx> kinetic_;
  std::vector<double> A_cache_;
  std::vector<GpWarning> warnings_;
};

struct GroundStateOptions {
  double dtau = 1e-2;
  double tolerance = 1e-10;  // energy change per step
  long max_iterations = 400000;
  int refinements = 2;  // dtau /= 4 this many times after first convergence
};

GpState ground_state(const ExternalField& field, double t, const GpParams& params, const GpState& seed,
                     const GroundStateOptions& options = {});

}  // namespace gp2d

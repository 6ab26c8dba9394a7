#pragma once

#include <functional>
#include <span>

#include "gp2d/grid.hpp"

namespace gp2d {

struct KrylovOptions {
  int max_dimension = 40;
  double tolerance = 1e-14;  // local error relative to ||v||
  int max_splits = 24;
};

struct KrylovStats {
  int substeps = 0;
  int matvecs = 0;
  double error_estimate = 0;
};

using Operator = std::function<void(std::span<const cplx>, std::span<cplx>)>;

// v <- exp(-i dt H) v for Hermitian H by Lanczos with full
// reorthogonalisation. Halves the step when the a posteriori error estimate
// exceeds the tolerance; throws ConvergenceError after max_splits halvings.
KrylovStats expv(const Operator& H, std::span<cplx> v, double dt, const KrylovOptions& options = {});

}  // namespace gp2d

#include "gp2d/grid.hpp"

#include <fftw3.h>

#include <mutex>
#include <numbers>

#include "gp2d/errors.hpp"

namespace gp2d {
namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

Grid2D::Grid2D(double box_length, int points) : L_(box_length), n_(points) {
  if (!(L_ > 0)) throw PreconditionError("Grid2D: box length must be positive");
  if (n_ < 2) throw PreconditionError("Grid2D: need at least 2 points per axis");
}

double Grid2D::wavenumber(int i) const {
  const int k = 2 * i < n_ ? i : i - n_;
  return 2 * std::numbers::pi * k / L_;
}

struct Fft2D::Plans {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

Fft2D::Fft2D(int n) : n_(n), plans_(std::make_unique<Plans>()) {
  std::vector<cplx> scratch(static_cast<std::size_t>(n) * n);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  std::lock_guard lock(planner_mutex());
  plans_->fwd = fftw_plan_dft_2d(n, n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans_->bwd = fftw_plan_dft_2d(n, n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plans_->fwd || !plans_->bwd) throw std::runtime_error("Fft2D: FFTW planning failed");
}

Fft2D::~Fft2D() {
  std::lock_guard lock(planner_mutex());
  if (plans_->fwd) fftw_destroy_plan(plans_->fwd);
  if (plans_->bwd) fftw_destroy_plan(plans_->bwd);
}

void Fft2D::forward(std::span<cplx> data) const {
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plans_->fwd, buf, buf);
}

void Fft2D::backward(std::span<cplx> data) const {
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plans_->bwd, buf, buf);
}

std::vector<double> laplacian_symbol(const Grid2D& grid) {
  const int n = grid.points();
  std::vector<double> k2(grid.size());
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const double kx = grid.wavenumber(ix), ky = grid.wavenumber(iy);
      k2[static_cast<std::size_t>(iy) * n + ix] = kx * kx + ky * ky;
    }
  return k2;
}

}  // namespace gp2d

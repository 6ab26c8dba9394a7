#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace gp2d {

using cplx = std::complex<double>;

// Periodic square box [-L/2, L/2)^2 with n points per axis, row-major
// (index = iy * n + ix).
class Grid2D {
 public:
  Grid2D(double box_length, int points);

  double length() const { return L_; }
  int points() const { return n_; }
  double spacing() const { return L_ / n_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }
  double coordinate(int i) const { return -0.5 * L_ + i * spacing(); }
  double wavenumber(int i) const;
  // Cell area h^2, the quadrature weight of every node.
  double cell() const { return spacing() * spacing(); }

  bool operator==(const Grid2D& o) const { return L_ == o.L_ && n_ == o.n_; }

 private:
  double L_;
  int n_;
};

// In-place 2D complex FFT on a Grid2D layout. Plans are created under a
// global lock; execution is reentrant through the new-array interface.
class Fft2D {
 public:
  explicit Fft2D(int n);
  ~Fft2D();
  Fft2D(const Fft2D&) = delete;
  Fft2D& operator=(const Fft2D&) = delete;

  void forward(std::span<cplx> data) const;
  // Unnormalised inverse.
  void backward(std::span<cplx> data) const;
  int points() const { return n_; }

 private:
  struct Plans;
  int n_;
  std::unique_ptr<Plans> plans_;
};

// Squared spectral wavenumbers |k|^2 in grid layout.
std::vector<double> laplacian_symbol(const Grid2D& grid);

}  // namespace gp2d

#include "gp2d/kernels.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace gp2d::kernels {

void nonlinear_phase(std::span<cplx> psi, std::span<const double> A, double g, double tau, Exec exec) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(psi.size());
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) psi[k] *= std::polar(1.0, -tau * (A[k] + g * std::norm(psi[k])));
  } else {
    for (std::ptrdiff_t k = 0; k < n; ++k) psi[k] *= std::polar(1.0, -tau * (A[k] + g * std::norm(psi[k])));
  }
}

void nonlinear_decay(std::span<cplx> psi, std::span<const double> A, double g, double tau, Exec exec) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(psi.size());
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) psi[k] *= std::exp(-tau * (A[k] + g * std::norm(psi[k])));
  } else {
    for (std::ptrdiff_t k = 0; k < n; ++k) psi[k] *= std::exp(-tau * (A[k] + g * std::norm(psi[k])));
  }
}

void multiply(std::span<cplx> psi, std::span<const cplx> factor, Exec exec) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(psi.size());
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) psi[k] *= factor[k];
  } else {
    for (std::ptrdiff_t k = 0; k < n; ++k) psi[k] *= factor[k];
  }
}

namespace {

std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace

void apply_hamiltonian(std::span<const cplx> in, std::span<cplx> out, std::span<const double> T, int d, int N,
                       std::span<const double> diag, Exec exec) {
  const std::size_t dim = in.size();
  const std::size_t dd = static_cast<std::size_t>(d);
  if (exec == Exec::Serial) {
    for (std::size_t i = 0; i < dim; ++i) out[i] = diag[i] * in[i];
    for (int j = 0; j < N; ++j) {
      const std::size_t inner = ipow(dd, N - 1 - j);
      const std::size_t outer = dim / (inner * dd);
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t a = 0; a < dd; ++a)
          for (std::size_t b = 0; b < dd; ++b) {
            const double t = T[a * dd + b];
            if (t == 0.0) continue;
            const std::size_t base_a = (o * dd + a) * inner, base_b = (o * dd + b) * inner;
            for (std::size_t i = 0; i < inner; ++i) out[base_a + i] += t * in[base_b + i];
          }
    }
    return;
  }
  // Parallel: each output amplitude is owned by one thread; all particle
  // contributions are gathered in a single pass.
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(dim);
  std::vector<std::size_t> strides(static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j) strides[static_cast<std::size_t>(j)] = ipow(dd, N - 1 - j);
  std::vector<std::size_t> row_start(dd + 1, 0), cols;
  std::vector<double> vals;
  for (std::size_t a = 0; a < dd; ++a) {
    for (std::size_t b = 0; b < dd; ++b)
      if (T[a * dd + b] != 0.0) {
        cols.push_back(b);
        vals.push_back(T[a * dd + b]);
      }
    row_start[a + 1] = cols.size();
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t idx = 0; idx < n; ++idx) {
    const std::size_t i = static_cast<std::size_t>(idx);
    cplx acc = diag[i] * in[i];
    for (int j = 0; j < N; ++j) {
      const std::size_t stride = strides[static_cast<std::size_t>(j)];
      const std::size_t a = (i / stride) % dd;
      const std::size_t base = i - a * stride;
      for (std::size_t k = row_start[a]; k < row_start[a + 1]; ++k) acc += vals[k] * in[base + cols[k] * stride];
    }
    out[i] = acc;
  }
}

void partial_trace_first(std::span<const cplx> psi, int d, std::span<cplx> gamma, Exec exec) {
  const std::size_t dd = static_cast<std::size_t>(d);
  const std::size_t rest = psi.size() / dd;
  const std::ptrdiff_t pairs = static_cast<std::ptrdiff_t>(dd * dd);
  auto entry = [&](std::size_t a, std::size_t b) {
    cplx acc = 0;
    const cplx* pa = psi.data() + a * rest;
    const cplx* pb = psi.data() + b * rest;
    for (std::size_t r = 0; r < rest; ++r) acc += pa[r] * std::conj(pb[r]);
    return acc;
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t p = 0; p < pairs; ++p) {
      const std::size_t a = static_cast<std::size_t>(p) / dd, b = static_cast<std::size_t>(p) % dd;
      gamma[a * dd + b] = entry(a, b);
    }
  } else {
    for (std::size_t a = 0; a < dd; ++a)
      for (std::size_t b = 0; b < dd; ++b) gamma[a * dd + b] = entry(a, b);
  }
}

}  // namespace gp2d::kernels

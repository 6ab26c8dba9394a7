#pragma once

#include <complex>
#include <span>

namespace gp2d::kernels {

using cplx = std::complex<double>;

// Serial is the reference implementation; Parallel uses OpenMP.
enum class Exec { Serial, Parallel };

// psi *= exp(-i tau (A + g |psi|^2)) pointwise.
void nonlinear_phase(std::span<cplx> psi, std::span<const double> A, double g, double tau, Exec exec);
// psi *= exp(-tau (A + g |psi|^2)) pointwise (imaginary time).
void nonlinear_decay(std::span<cplx> psi, std::span<const double> A, double g, double tau, Exec exec);
// psi *= factor pointwise.
void multiply(std::span<cplx> psi, std::span<const cplx> factor, Exec exec);

// out = sum_j T_j in + diag * in for an N-particle tensor with single-particle
// dimension d; T is a real symmetric d x d row-major matrix acting on each
// particle index.
void apply_hamiltonian(std::span<const cplx> in, std::span<cplx> out, std::span<const double> T, int d, int N,
                       std::span<const double> diag, Exec exec);

// gamma(a, b) = sum_rest psi(a, rest) conj(psi(b, rest)), row-major d x d.
void partial_trace_first(std::span<const cplx> psi, int d, std::span<cplx> gamma, Exec exec);

}  // namespace gp2d::kernels

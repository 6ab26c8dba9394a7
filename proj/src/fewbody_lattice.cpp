#include "gp2d/fewbody_lattice.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "gp2d/errors.hpp"
#include "gp2d/radial_scattering.hpp"

namespace gp2d {
namespace {

std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

std::vector<cplx> permuted(const std::vector<cplx>& psi, int d, int N, const std::vector<int>& perm) {
  // out(s_perm[0], ..., s_perm[N-1]) = psi(s_0, ..., s_{N-1})
  std::vector<cplx> out(psi.size());
  std::vector<std::size_t> stride(static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j) stride[static_cast<std::size_t>(j)] = ipow(static_cast<std::size_t>(d), N - 1 - j);
  std::vector<std::size_t> digit(static_cast<std::size_t>(N));
  for (std::size_t idx = 0; idx < psi.size(); ++idx) {
    std::size_t rem = idx;
    for (int j = 0; j < N; ++j) {
      digit[static_cast<std::size_t>(j)] = rem / stride[static_cast<std::size_t>(j)];
      rem %= stride[static_cast<std::size_t>(j)];
    }
    std::size_t target = 0;
    for (int j = 0; j < N; ++j) target += digit[static_cast<std::size_t>(j)] * stride[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])];
    out[target] = psi[idx];
  }
  return out;
}

double l2(const std::vector<cplx>& v) {
  double s = 0;
  for (const auto& z : v) s += std::norm(z);
  return std::sqrt(s);
}

Eigen::MatrixXd spectral_1d(int m, double L, int order) {
  Eigen::MatrixXd D(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      double s = 0;
      for (int i = 0; i < m; ++i) {
        const double k = 2 * std::numbers::pi / L * (2 * i < m ? i : i - m);
        const double phase = k * (a - b) * L / m;
        if (order == 2)
          s += k * k * std::cos(phase);
        else if (2 * i != m)
          s -= k * std::sin(phase);
      }
      D(a, b) = s / m;
    }
  return D;
}

}  // namespace

Lattice2D::Lattice2D(int m, double L) : m_(m), L_(L) {
  if (m < 2) throw PreconditionError("Lattice2D: need at least 2 points per axis");
  if (!(L > 0)) throw PreconditionError("Lattice2D: box length must be positive");
}

int Lattice2D::difference(int a, int b) const {
  const int ax = a % m_, ay = a / m_, bx = b % m_, by = b / m_;
  const int dx = ((ax - bx) % m_ + m_) % m_, dy = ((ay - by) % m_ + m_) % m_;
  return dy * m_ + dx;
}

double Lattice2D::displacement_length(int site) const {
  int dx = site % m_, dy = site / m_;
  if (dx > m_ / 2) dx -= m_;
  if (dy > m_ / 2) dy -= m_;
  return std::hypot(dx, dy) * spacing();
}

std::size_t hilbert_dimension(const Lattice2D& lattice, int N, const FewBodyBudget& budget) {
  if (N < 1 || N > 4) throw PreconditionError("few-body lattice supports 1 <= N <= 4");
  double dim = std::pow(static_cast<double>(lattice.dimension()), N);
  if (dim > static_cast<double>(budget.max_dimension)) {
    std::ostringstream msg;
    msg << "Hilbert dimension " << static_cast<long double>(dim) << " (d=" << lattice.dimension() << ", N=" << N
        << ") exceeds budget " << budget.max_dimension;
    throw SizeError(msg.str());
  }
  return ipow(static_cast<std::size_t>(lattice.dimension()), N);
}

double FewBodyState::norm() const { return l2(amplitudes); }

double FewBodyState::symmetry_defect() const {
  double worst = 0;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      std::vector<int> perm(static_cast<std::size_t>(N));
      std::iota(perm.begin(), perm.end(), 0);
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
      auto p = permuted(amplitudes, lattice.dimension(), N, perm);
      for (std::size_t k = 0; k < p.size(); ++k) p[k] -= amplitudes[k];
      worst = std::max(worst, l2(p));
    }
  return worst;
}

Eigen::MatrixXd kinetic_matrix(const Lattice2D& lattice) {
  const int m = lattice.points();
  const Eigen::MatrixXd T1 = spectral_1d(m, lattice.length(), 2);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m * m, m * m);
  for (int ay = 0; ay < m; ++ay)
    for (int ax = 0; ax < m; ++ax)
      for (int by = 0; by < m; ++by)
        for (int bx = 0; bx < m; ++bx) T(ay * m + ax, by * m + bx) = T1(ax, bx) * I(ay, by) + I(ax, bx) * T1(ay, by);
  return T;
}

Eigen::MatrixXd derivative_matrix(const Lattice2D& lattice, int axis) {
  const int m = lattice.points();
  const Eigen::MatrixXd D1 = spectral_1d(m, lattice.length(), 1);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(m * m, m * m);
  for (int ay = 0; ay < m; ++ay)
    for (int ax = 0; ax < m; ++ax)
      for (int by = 0; by < m; ++by)
        for (int bx = 0; bx < m; ++bx) {
          if (axis == 0 && ay == by) D(ay * m + ax, by * m + bx) = D1(ax, bx);
          if (axis == 1 && ax == bx) D(ay * m + ax, by * m + bx) = D1(ay, by);
        }
  return D;
}

struct DiscreteHamiltonian::Lazy {
  std::once_flag once;
  std::unique_ptr<Spectrum> spectrum;
};

void DiscreteHamiltonian::apply(std::span<const cplx> in, std::span<cplx> out, kernels::Exec exec) const {
  kernels::apply_hamiltonian(in, out, kinetic_flat_, lattice_.dimension(), N_, diag_, exec);
}

Eigen::MatrixXd DiscreteHamiltonian::dense() const {
  const std::size_t dim = dimension();
  if (dim > 4096) throw SizeError("DiscreteHamiltonian::dense: dimension above 4096");
  Eigen::MatrixXd H(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  std::vector<cplx> e(dim, 0.0), col(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    e[j] = 1.0;
    apply(e, col, kernels::Exec::Serial);
    e[j] = 0.0;
    for (std::size_t i = 0; i < dim; ++i) H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i].real();
  }
  return H;
}

const DiscreteHamiltonian::Spectrum& DiscreteHamiltonian::spectrum() const {
  std::call_once(lazy_->once, [&] {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense());
    lazy_->spectrum = std::make_unique<Spectrum>(Spectrum{es.eigenvalues(), es.eigenvectors()});
  });
  return *lazy_->spectrum;
}

DiscreteHamiltonian build_hamiltonian(const Lattice2D& lattice, int N, const std::function<double(double)>& U,
                                      const ExternalField& A, double t, const FewBodyBudget& budget) {
  const std::size_t dim = hilbert_dimension(lattice, N, budget);
  DiscreteHamiltonian H(lattice);
  H.N_ = N;
  H.kinetic_ = kinetic_matrix(lattice);
  const int d = lattice.dimension();
  H.kinetic_flat_.resize(static_cast<std::size_t>(d) * d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) H.kinetic_flat_[static_cast<std::size_t>(a) * d + b] = H.kinetic_(a, b);
  H.pair_.assign(static_cast<std::size_t>(d), 0.0);
  if (U)
    for (int s = 0; s < d; ++s) {
      const double v = U(lattice.displacement_length(s));
      if (!(v >= 0)) throw PreconditionError("build_hamiltonian: pair potential must be nonnegative");
      H.pair_[static_cast<std::size_t>(s)] = v;
    }
  H.external_ = A.sample(lattice.grid(), t);
  H.diag_.assign(dim, 0.0);
  std::vector<int> digit(static_cast<std::size_t>(N));
  for (std::size_t idx = 0; idx < dim; ++idx) {
    std::size_t rem = idx;
    for (int j = N - 1; j >= 0; --j) {
      digit[static_cast<std::size_t>(j)] = static_cast<int>(rem % static_cast<std::size_t>(d));
      rem /= static_cast<std::size_t>(d);
    }
    double v = 0;
    for (int j = 0; j < N; ++j) {
      v += H.external_[static_cast<std::size_t>(digit[static_cast<std::size_t>(j)])];
      for (int k = j + 1; k < N; ++k)
        v += H.pair_[static_cast<std::size_t>(lattice.difference(digit[static_cast<std::size_t>(j)], digit[static_cast<std::size_t>(k)]))];
    }
    H.diag_[idx] = v;
  }
  H.lazy_ = std::make_shared<DiscreteHamiltonian::Lazy>();
  return H;
}

DiscreteHamiltonian build_hamiltonian(const Lattice2D& lattice, int N, const std::optional<ScaledPotential>& U,
                                      const ExternalField& A, double t, const FewBodyBudget& budget) {
  std::function<double(double)> pair;
  if (U) pair = [u = *U](double r) { return u(r); };
  return build_hamiltonian(lattice, N, pair, A, t, budget);
}

FewBodyState propagate(const FewBodyState& state, const DiscreteHamiltonian& H, double dt,
                       const PropagationOptions& options) {
  if (state.amplitudes.size() != H.dimension() || state.N != H.particles())
    throw PreconditionError("propagate: state and Hamiltonian dimensions differ");
  FewBodyState out = state;
  out.t += dt;
  const bool dense = options.method == Propagation::Dense ||
                     (options.method == Propagation::Auto && H.dimension() <= options.dense_limit);
  if (dense) {
    const auto& sp = H.spectrum();
    const Eigen::Index n = static_cast<Eigen::Index>(H.dimension());
    Eigen::VectorXd re(n), im(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      re(i) = state.amplitudes[static_cast<std::size_t>(i)].real();
      im(i) = state.amplitudes[static_cast<std::size_t>(i)].imag();
    }
    const Eigen::VectorXd cr = sp.vectors.transpose() * re, ci = sp.vectors.transpose() * im;
    Eigen::VectorXd yr(n), yi(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const cplx c = cplx(cr(k), ci(k)) * std::polar(1.0, -dt * sp.values(k));
      yr(k) = c.real();
      yi(k) = c.imag();
    }
    const Eigen::VectorXd zr = sp.vectors * yr, zi = sp.vectors * yi;
    for (Eigen::Index i = 0; i < n; ++i) out.amplitudes[static_cast<std::size_t>(i)] = cplx(zr(i), zi(i));
    return out;
  }
  expv([&H](std::span<const cplx> in, std::span<cplx> o) { H.apply(in, o); }, out.amplitudes, dt, options.krylov);
  return out;
}

double energy_per_particle(const FewBodyState& state, const DiscreteHamiltonian& H) {
  std::vector<cplx> Hpsi(state.amplitudes.size());
  H.apply(state.amplitudes, Hpsi);
  cplx s = 0;
  for (std::size_t i = 0; i < Hpsi.size(); ++i) s += std::conj(state.amplitudes[i]) * Hpsi[i];
  return s.real() / state.N;
}

double energy_imaginary_part(const FewBodyState& state, const DiscreteHamiltonian& H) {
  std::vector<cplx> Hpsi(state.amplitudes.size());
  H.apply(state.amplitudes, Hpsi);
  cplx s = 0;
  for (std::size_t i = 0; i < Hpsi.size(); ++i) s += std::conj(state.amplitudes[i]) * Hpsi[i];
  return s.imag();
}

Eigen::VectorXcd orbital_coefficients(const Lattice2D& lattice, std::span<const cplx> phi) {
  if (phi.size() != static_cast<std::size_t>(lattice.dimension()))
    throw PreconditionError("orbital_coefficients: field size does not match the lattice");
  Eigen::VectorXcd v(lattice.dimension());
  const double h = lattice.spacing();
  for (int i = 0; i < lattice.dimension(); ++i) v(i) = phi[static_cast<std::size_t>(i)] * h;
  return v;
}

FewBodyState product_state(const Lattice2D& lattice, int N, std::span<const cplx> phi) {
  const Eigen::VectorXcd v = orbital_coefficients(lattice, phi);
  const std::size_t dim = hilbert_dimension(lattice, N);
  const std::size_t d = static_cast<std::size_t>(lattice.dimension());
  FewBodyState s{lattice, N, std::vector<cplx>(dim, 1.0), 0.0};
  for (std::size_t idx = 0; idx < dim; ++idx) {
    std::size_t rem = idx;
    cplx a = 1.0;
    for (int j = 0; j < N; ++j) {
      a *= v(static_cast<Eigen::Index>(rem % d));
      rem /= d;
    }
    s.amplitudes[idx] = a;
  }
  return s;
}

JastrowResult jastrow_initial_state(std::span<const cplx> phi, const MicroscopicPair* f, const Lattice2D& lattice,
                                    int N) {
  const Eigen::VectorXcd v = orbital_coefficients(lattice, phi);
  if (std::abs(v.norm() - 1) > 1e-10) throw PreconditionError("jastrow_initial_state: phi is not normalised");
  JastrowResult res{product_state(lattice, N, phi), false, {}};
  if (!f) return res;
  if (!(f->R_beta > lattice.spacing())) {
    std::ostringstream msg;
    msg << "pair correlation omitted: R_beta=" << f->R_beta << " below lattice spacing " << lattice.spacing();
    res.warning = msg.str();
    return res;
  }
  const int d = lattice.dimension();
  std::vector<double> F(static_cast<std::size_t>(d));
  for (int s = 0; s < d; ++s) F[static_cast<std::size_t>(s)] = f->f(lattice.displacement_length(s));
  std::vector<int> digit(static_cast<std::size_t>(N));
  for (std::size_t idx = 0; idx < res.state.amplitudes.size(); ++idx) {
    std::size_t rem = idx;
    for (int j = N - 1; j >= 0; --j) {
      digit[static_cast<std::size_t>(j)] = static_cast<int>(rem % static_cast<std::size_t>(d));
      rem /= static_cast<std::size_t>(d);
    }
    double w = 1;
    for (int j = 0; j < N; ++j)
      for (int k = j + 1; k < N; ++k)
        w *= F[static_cast<std::size_t>(lattice.difference(digit[static_cast<std::size_t>(j)], digit[static_cast<std::size_t>(k)]))];
    res.state.amplitudes[idx] *= w;
  }
  const double nrm = res.state.norm();
  for (auto& z : res.state.amplitudes) z /= nrm;
  res.correlated = true;
  return res;
}

FewBodyState symmetrize(const FewBodyState& state) {
  std::vector<int> perm(static_cast<std::size_t>(state.N));
  std::iota(perm.begin(), perm.end(), 0);
  FewBodyState out = state;
  std::fill(out.amplitudes.begin(), out.amplitudes.end(), cplx{});
  do {
    const auto p = permuted(state.amplitudes, state.lattice.dimension(), state.N, perm);
    for (std::size_t k = 0; k < p.size(); ++k) out.amplitudes[k] += p[k];
  } while (std::next_permutation(perm.begin(), perm.end()));
  const double nrm = out.norm();
  if (!(nrm > 0)) throw PreconditionError("symmetrize: state has no bosonic component");
  for (auto& z : out.amplitudes) z /= nrm;
  return out;
}

FewBodyState random_symmetric_state(const Lattice2D& lattice, int N, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  FewBodyState s{lattice, N, std::vector<cplx>(hilbert_dimension(lattice, N)), 0.0};
  for (auto& z : s.amplitudes) z = cplx(gauss(rng), gauss(rng));
  return symmetrize(s);
}

}  // namespace gp2d

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gp2d/external_field.hpp"
#include "gp2d/grid.hpp"
#include "gp2d/kernels.hpp"
#include "gp2d/krylov.hpp"
#include "gp2d/potential_models.hpp"

namespace gp2d {

class MicroscopicPair;

// m x m periodic lattice on [-L/2, L/2)^2; site index = iy * m + ix, matching
// the Grid2D layout so GP fields and lattice states share coordinates.
class Lattice2D {
 public:
  Lattice2D(int m, double L);

  int points() const { return m_; }
  double length() const { return L_; }
  int dimension() const { return m_ * m_; }
  double spacing() const { return L_ / m_; }
  // Matching GP grid; needs an even point count.
  Grid2D grid() const { return Grid2D(L_, m_); }
  // Site index of the periodic difference a - b.
  int difference(int a, int b) const;
  // Minimum-image length of the displacement encoded by a site index.
  double displacement_length(int site) const;
  double distance(int a, int b) const { return displacement_length(difference(a, b)); }

 private:
  int m_;
  double L_;
};

struct FewBodyBudget {
  std::size_t max_dimension = std::size_t{1} << 22;
};

// d^N, throwing SizeError when above budget.
std::size_t hilbert_dimension(const Lattice2D& lattice, int N, const FewBodyBudget& budget = {});

struct FewBodyState {
  Lattice2D lattice;
  int N = 1;
  std::vector<cplx> amplitudes;  // orthonormal coefficients, particle 1 most significant
  double t = 0;

  double norm() const;
  // max_{i<j} || P_ij psi - psi ||
  double symmetry_defect() const;
};

// Spectral -Laplacian on the lattice (identical to the GP kinetic operator).
Eigen::MatrixXd kinetic_matrix(const Lattice2D& lattice);
// Spectral d/dx (axis 0) or d/dy (axis 1); real antisymmetric.
Eigen::MatrixXd derivative_matrix(const Lattice2D& lattice, int axis);

class DiscreteHamiltonian {
 public:
  const Lattice2D& lattice() const { return lattice_; }
  int particles() const { return N_; }
  std::size_t dimension() const { return diag_.size(); }
  const Eigen::MatrixXd& kinetic() const { return kinetic_; }
  // Pair potential indexed by displacement site.
  std::span<const double> pair_table() const { return pair_; }
  std::span<const double> external() const { return external_; }
  std::span<const double> diagonal() const { return diag_; }

  void apply(std::span<const cplx> in, std::span<cplx> out, kernels::Exec exec = kernels::Exec::Parallel) const;
  Eigen::MatrixXd dense() const;

  struct Spectrum {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
  };
  // Computed once on first use; shared between copies.
  const Spectrum& spectrum() const;

 private:
  friend DiscreteHamiltonian build_hamiltonian(const Lattice2D&, int, const std::function<double(double)>&,
                                               const ExternalField&, double, const FewBodyBudget&);
  DiscreteHamiltonian(Lattice2D lattice) : lattice_(lattice) {}
  struct Lazy;
  Lattice2D lattice_;
  int N_ = 1;
  Eigen::MatrixXd kinetic_;
  std::vector<double> kinetic_flat_;
  std::vector<double> pair_;
  std::vector<double> external_;
  std::vector<double> diag_;
  std::shared_ptr<Lazy> lazy_;
};

// Pair potential sampled at minimum-image distances; pass an empty function
// for U = 0.
DiscreteHamiltonian build_hamiltonian(const Lattice2D& lattice, int N, const std::function<double(double)>& U,
                                      const ExternalField& A, double t, const FewBodyBudget& budget = {});
DiscreteHamiltonian build_hamiltonian(const Lattice2D& lattice, int N, const std::optional<ScaledPotential>& U,
                                      const ExternalField& A, double t, const FewBodyBudget& budget = {});

enum class Propagation { Auto, Krylov, Dense };

// Dense is used under Auto when d^N <= dense_limit.
struct PropagationOptions {
  Propagation method = Propagation::Auto;
  std::size_t dense_limit = 1024;
  KrylovOptions krylov;
};

FewBodyState propagate(const FewBodyState& state, const DiscreteHamiltonian& H, double dt,
                       const PropagationOptions& options = {});

double energy_per_particle(const FewBodyState& state, const DiscreteHamiltonian& H);
// Imaginary part of <psi, H psi>, a Hermiticity diagnostic.
double energy_imaginary_part(const FewBodyState& state, const DiscreteHamiltonian& H);

// Orthonormal single-particle coefficients v = phi * h from grid values phi.
Eigen::VectorXcd orbital_coefficients(const Lattice2D& lattice, std::span<const cplx> phi);

FewBodyState product_state(const Lattice2D& lattice, int N, std::span<const cplx> phi);

struct JastrowResult {
  FewBodyState state;
  bool correlated = false;
  std::string warning;
};

JastrowResult jastrow_initial_state(std::span<const cplx> phi, const MicroscopicPair* f, const Lattice2D& lattice,
                                    int N);

// Average over all N! particle permutations, then normalise.
FewBodyState symmetrize(const FewBodyState& state);
// Seeded random bosonic state.
FewBodyState random_symmetric_state(const Lattice2D& lattice, int N, std::uint64_t seed);

}  // namespace gp2d

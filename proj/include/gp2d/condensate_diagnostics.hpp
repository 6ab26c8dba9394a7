#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gp2d/fewbody_lattice.hpp"
#include "gp2d/gp_propagator.hpp"

namespace gp2d {

class MicroscopicPair;

// m(k) of the condensate counting functional, defined for every k >= 0:
// sqrt(k/N) above the crossover N^(1-2 xi), linear (N^(-1+xi) k + N^-xi)/2 below.
double m_weight(double k, int N, double xi);

// Weight w(0..N) with the shift convention w_d(k) = w(k+d), zero out of range.
class WeightFunction {
 public:
  static WeightFunction n(int N);
  static WeightFunction m(int N, double xi = 0.25);
  // m(k) - m(k+1) and m(k) - m(k+2), evaluated from the closed form so the
  // top entries use m beyond N.
  static WeightFunction m_a(int N, double xi = 0.25);
  static WeightFunction m_b(int N, double xi = 0.25);
  static WeightFunction custom(std::string name, std::vector<double> values);

  double operator()(int k) const;
  WeightFunction shifted(int d) const;
  int particles() const { return static_cast<int>(values_.size()) - 1; }
  const std::string& name() const { return name_; }
  std::span<const double> values() const { return values_; }
  double xi() const { return xi_; }
  // ||w^||_op = max_k |w(k)|
  double op_norm() const;

  friend WeightFunction operator*(const WeightFunction& a, const WeightFunction& b);
  friend WeightFunction operator-(const WeightFunction& a, const WeightFunction& b);

 private:
  WeightFunction(std::string name, std::vector<double> values, double xi)
      : name_(std::move(name)), values_(std::move(values)), xi_(xi) {}
  std::string name_;
  std::vector<double> values_;
  double xi_ = 0;
};

// max_k |a(k) - b(k)|, the operator norm of a^ - b^.
double weight_distance(const WeightFunction& a, const WeightFunction& b);

// p = |phi><phi| on the lattice, stored as orthonormal coefficients v = phi h.
class CondensateProjector {
 public:
  // phi in grid units (sum |phi|^2 h^2 = 1); rejected if not normalised to 1e-10.
  CondensateProjector(const Lattice2D& lattice, std::span<const cplx> phi);
  static CondensateProjector from_orbital(const Lattice2D& lattice, const Eigen::VectorXcd& v);

  const Lattice2D& lattice() const { return lattice_; }
  const Eigen::VectorXcd& orbital() const { return v_; }
  Eigen::MatrixXcd p() const { return v_ * v_.adjoint(); }
  Eigen::MatrixXcd q() const;
  // ||phi||_inf and |phi|^2 in grid units.
  double sup_norm() const;
  std::vector<double> density() const;

 private:
  CondensateProjector(const Lattice2D& lattice, Eigen::VectorXcd v) : lattice_(lattice), v_(std::move(v)) {}
  Lattice2D lattice_;
  Eigen::VectorXcd v_;
};

// Matrix-free operators on the d^N amplitude tensor. Particle slots are
// 0-based here (slot 0 is x_1).
namespace manybody {

using Vec = std::vector<cplx>;
using Op = std::function<Vec(const Vec&)>;

Vec apply_p(const CondensateProjector& proj, int N, int slot, const Vec& psi);
Vec apply_q(const CondensateProjector& proj, int N, int slot, const Vec& psi);
// All 2^N products prod_j (p_j or q_j) psi; bit j of the index selects q_j.
std::vector<Vec> components(const CondensateProjector& proj, int N, const Vec& psi);
Vec apply_P(const CondensateProjector& proj, int N, int k, const Vec& psi);
Vec apply_weight(const CondensateProjector& proj, const WeightFunction& w, const Vec& psi);
// psi(..) *= f(s_a, s_b) with f a d x d table (row s_a).
Vec multiply_pair(const Eigen::MatrixXcd& f, int d, int N, int a, int b, const Vec& psi);
// psi(..) *= f(s_a - s_b) with f indexed by lattice displacement.
Vec multiply_difference(const Lattice2D& lattice, std::span<const cplx> f, int N, int a, int b, const Vec& psi);
Vec multiply_single(std::span<const cplx> f, int N, int slot, const Vec& psi);
Vec apply_single(const Eigen::MatrixXcd& A, int N, int slot, const Vec& psi);

cplx inner(const Vec& a, const Vec& b);
double norm(const Vec& a);
Vec operator+(Vec a, const Vec& b);
Vec operator-(Vec a, const Vec& b);
Vec operator*(cplx s, Vec a);

// Column-by-column dense matrix of a linear operator.
Eigen::MatrixXcd dense(const Op& op, std::size_t dim);

}  // namespace manybody

// Partial trace over particles 2..N: gamma(a, b) = sum psi(a, rest) conj(psi(b, rest)).
Eigen::MatrixXcd gamma1(const FewBodyState& state);
// (1/2) sum |eig(gamma - |v><v|)|
double trace_distance(const Eigen::MatrixXcd& gamma, const Eigen::VectorXcd& v);

struct NumberExpectations {
  double n = 0;          // <n^>
  double n2 = 0;         // <n^2> from P(k)
  double n2_trace = 0;   // 1 - <phi|gamma|phi>
  std::vector<double> distribution;  // P(k)
};

NumberExpectations number_expectations(const FewBodyState& state, const CondensateProjector& proj);
double weight_expectation(const FewBodyState& state, const CondensateProjector& proj, const WeightFunction& w);

struct EnergyGap {
  double many_body = 0;  // E_U(Psi)
  double gp = 0;         // E^GP_b(phi)
  double gap = 0;
};

EnergyGap energy_gap(const FewBodyState& state, const DiscreteHamiltonian& H, const GpState& phi,
                     const ExternalField& field, double b);

struct AlphaLess {
  double m_expect = 0;
  double energy_gap = 0;
  double value = 0;
};

AlphaLess alpha_less(const FewBodyState& state, const DiscreteHamiltonian& H, const GpState& phi,
                     const ExternalField& field, double b, double xi = 0.25);

struct AlphaFull {
  double m_expect = 0;
  double energy_gap = 0;
  double correction = 0;        // -N(N-1) Re <Psi, g(x1-x2) r^ Psi>
  double correction_bound = 0;  // N(N-1) ||g p1|| (||m^b|| + 2 ||m^a||)
  double value = 0;
  bool fallback = false;  // g not resolvable on the lattice: value = alpha_less
  std::string note;
};

// Coupling 4 pi; H must carry the V_N (or surrogate) pair interaction.
AlphaFull alpha_full(const FewBodyState& state, const DiscreteHamiltonian& H, const GpState& phi,
                     const ExternalField& field, const MicroscopicPair& pair, double xi = 0.25);

// d/dt <Psi_t, m^{phi_t} Psi_t> four ways.
struct WeightDerivative {
  double finite_difference = 0;  // centred, both Psi and phi propagated
  double commutator = 0;         // i N(N-1)/2 <[Z, m^]>
  double r_form = 0;             // -N(N-1) Im <Psi, Z r^ Psi>
  double split_terms[3] = {0, 0, 0};
  double split_sum = 0;
  double residual = 0;  // |finite_difference - commutator|
};

WeightDerivative ddt_weight_identity(const FewBodyState& state, const GpState& phi,
                                     const std::function<double(double)>& U, double b, const ExternalField& field,
                                     double dt, const WeightFunction& w, const PropagationOptions& options = {});

struct AlgebraCheck {
  std::string name;
  std::uint64_t seed = 0;
  int N = 0, m = 0;
  double deviation = 0;  // identity: max abs entry; inequality: lhs - rhs
  double tolerance = 0;
  bool passed = false;
};

struct AlgebraReport {
  std::vector<AlgebraCheck> checks;
  bool all_passed() const;
  std::string tap() const;
  std::string json() const;
};

struct AlgebraInstance {
  int N = 2;
  int m = 3;
  std::uint64_t seed = 0;
};

// Projector/weight calculus identities and inequalities as dense matrices
// on one seeded random instance (N <= 3).
AlgebraReport operator_algebra_checks(const AlgebraInstance& instance, double tolerance = 1e-10,
                                      std::size_t op_norm_limit = 256);
// 'count' instances cycling over (N, m) in shapes, seeds base_seed + i;
// instances run in parallel.
AlgebraReport operator_algebra_suite(std::size_t count, std::uint64_t base_seed,
                                     const std::vector<std::pair<int, int>>& shapes = {{2, 3}, {2, 4}, {2, 5},
                                                                                        {3, 2}, {3, 3}},
                                     double tolerance = 1e-10);

struct CutoffIndicators {
  double exponent = 0;   // d
  double threshold = 0;  // N^-d
  std::size_t disc_sites = 0;
  double disc_area = 0;  // disc_sites * h^2
  bool degenerate = false;  // threshold below spacing: only coincident sites
  double pair_p = 0, pair_p_bound = 0;      // ||1_a12 p1||, ||phi||_inf sqrt(area)
  double union_p = 0, union_p_bound = 0;    // ||1_A1 p1||, ||phi||_inf sqrt((N-1) area)
  double commutator = 0, commutator_bound = 0;  // ||[1_a12, p2]||, 2 ||phi||_inf sqrt(area)
  double union_state = 0;  // ||1_A1 Psi||
  double b_state = 0;      // ||1_B1 Psi|| (0 when N < 3)
};

CutoffIndicators cutoff_indicators(const FewBodyState& state, const CondensateProjector& proj, double d_exponent);

struct DiagnosticsReport {
  double t = 0;
  Eigen::MatrixXcd gamma1;
  double trace_distance = 0;
  NumberExpectations numbers;
  double m_expect = 0;
  double energy_gap = 0;
  double alpha_less = 0;
  std::optional<AlphaFull> alpha_full;
  std::string json() const;
};

DiagnosticsReport diagnose(const FewBodyState& state, const DiscreteHamiltonian& H, const GpState& phi,
                           const ExternalField& field, double b, double xi = 0.25,
                           const MicroscopicPair* pair = nullptr);

}  // namespace gp2d

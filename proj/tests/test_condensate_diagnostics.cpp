#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "gp2d/condensate_diagnostics.hpp"
#include "gp2d/errors.hpp"
#include "gp2d/radial_scattering.hpp"

using namespace gp2d;

namespace {

GpState orbital_on(const Lattice2D& lat, double kx = 0.3) {
  return make_gp_state(lat.grid(), [kx](double x, double y) {
    return std::exp(-(x * x + 1.3 * y * y) / 3) * std::polar(1.0, kx * x);
  });
}

// (1 - lambda) |phi>^N + lambda * random, normalised and symmetric.
FewBodyState depleted(const Lattice2D& lat, int N, const GpState& phi, double lambda, std::uint64_t seed) {
  FewBodyState s = product_state(lat, N, phi.field);
  const FewBodyState r = random_symmetric_state(lat, N, seed);
  for (std::size_t i = 0; i < s.amplitudes.size(); ++i)
    s.amplitudes[i] = (1 - lambda) * s.amplitudes[i] + lambda * r.amplitudes[i];
  const double n = s.norm();
  for (auto& z : s.amplitudes) z /= n;
  return s;
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
  Eigen::MatrixXcd K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

double op_norm(const Eigen::MatrixXcd& A) {
  return Eigen::JacobiSVD<Eigen::MatrixXcd>(A).singularValues()(0);
}

}  // namespace

TEST_CASE("weight m: crossover, shifts and the n-distance bound") {
  for (int N : {1, 2, 3, 10, 100, 1000}) {
    const auto m = WeightFunction::m(N, 0.25), n = WeightFunction::n(N);
    CAPTURE(N);
    CHECK(weight_distance(m, n) <= std::pow(N, -0.25) + 1e-15);
    CHECK(m.shifted(1)(N) == 0.0);
    CHECK(m.shifted(-1)(0) == 0.0);
    CHECK(m.shifted(2)(0) == m(2));
  }
  CHECK(m_weight(0, 16, 0.25) == doctest::Approx(0.5 * std::pow(16.0, -0.25)));
  CHECK(m_weight(4, 16, 0.25) == doctest::Approx(0.5));  // 4 >= 16^(1/2)
  CHECK_THROWS_AS(WeightFunction::m(4, 0.5), PreconditionError);
}

TEST_CASE("gamma1 of a product state is the orbital projector") {
  const Lattice2D lat(4, 5.0);
  const auto phi = orbital_on(lat);
  const auto psi = product_state(lat, 3, phi.field);
  const CondensateProjector proj(lat, phi.field);
  const Eigen::MatrixXcd g = gamma1(psi);
  CHECK((g - proj.p()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(trace_distance(g, proj.orbital()) < 1e-13);
  const auto nums = number_expectations(psi, proj);
  CHECK(nums.n < 1e-14);
  CHECK(nums.distribution[0] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("trace distance of a diagonal example") {
  Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(3, 3);
  g(0, 0) = 0.7;
  g(1, 1) = 0.2;
  g(2, 2) = 0.1;
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(3);
  v(0) = 1;
  // eig(g - |v><v|) = {-0.3, 0.2, 0.1}
  CHECK(trace_distance(g, v) == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("gamma1 is a density matrix and <n^2> has two routes") {
  const Lattice2D lat(4, 4.0);
  const auto phi = orbital_on(lat);
  const CondensateProjector proj(lat, phi.field);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (int N : {2, 3}) {
      const auto psi = depleted(lat, N, phi, 0.3, seed);
      const Eigen::MatrixXcd g = gamma1(psi);
      CHECK(std::abs(g.trace() - 1.0) < 1e-13);
      CHECK((g - g.adjoint()).cwiseAbs().maxCoeff() < 1e-15);
      CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(g).eigenvalues().minCoeff() > -1e-14);
      const auto nums = number_expectations(psi, proj);
      CHECK(std::abs(nums.n2 - nums.n2_trace) < 1e-12);
    }
  }
}

TEST_CASE("finite-size equivalence: alpha small forces condensation") {
  const Lattice2D lat(4, 4.0);
  const auto phi = orbital_on(lat);
  const CondensateProjector proj(lat, phi.field);
  const int N = 3;
  const double xi = 0.25;
  for (double lambda : {0.0, 0.01, 0.05, 0.2, 0.5, 1.0}) {
    const auto psi = depleted(lat, N, phi, lambda, 7);
    const auto nums = number_expectations(psi, proj);
    const double m = weight_expectation(psi, proj, WeightFunction::m(N, xi));
    double excited = 0;
    for (std::size_t k = 1; k < nums.distribution.size(); ++k) excited += nums.distribution[k];
    CAPTURE(lambda);
    CHECK(m >= m_weight(1, N, xi) * excited - 1e-14);
    CHECK(nums.n2 <= nums.n + 1e-14);
    CHECK(trace_distance(gamma1(psi), proj.orbital()) <= std::sqrt(2 * nums.n2) + 1e-14);
  }
}

TEST_CASE("alpha^< of a non-interacting product state is m(0)") {
  const Lattice2D lat(4, 5.0);
  const auto phi = orbital_on(lat);
  const auto psi = product_state(lat, 2, phi.field);
  const auto H = build_hamiltonian(lat, 2, std::function<double(double)>{}, ExternalField::zero(), 0.0);
  const auto a = alpha_less(psi, H, phi, ExternalField::zero(), 0.0, 0.25);
  CHECK(a.energy_gap < 1e-12);
  CHECK(a.m_expect == doctest::Approx(m_weight(0, 2, 0.25)).epsilon(1e-13));
}

TEST_CASE("alpha with g = 0 reduces to alpha^<") {
  const Lattice2D lat(4, 2.0);
  const auto phi = orbital_on(lat);
  const auto pair = build_microscopic(RadialPotential::zero(1.0), 2.0, 0.5);
  const auto psi = depleted(lat, 2, phi, 0.2, 4);
  const auto H = build_hamiltonian(lat, 2, std::function<double(double)>{}, ExternalField::zero(), 0.0);
  const auto full = alpha_full(psi, H, phi, ExternalField::zero(), pair, 0.25);
  const auto less = alpha_less(psi, H, phi, ExternalField::zero(), 4 * std::numbers::pi, 0.25);
  CHECK_FALSE(full.fallback);
  CHECK(full.correction == 0.0);
  CHECK(full.value == less.value);
}

TEST_CASE("cutoff indicators match dense operator norms") {
  const Lattice2D lat(4, 2.0);
  const auto phi = orbital_on(lat, 0.8);
  const CondensateProjector proj(lat, phi.field);
  const auto psi = depleted(lat, 2, phi, 0.4, 2);
  const auto c = cutoff_indicators(psi, proj, 0.0);  // threshold 1, spacing 0.5
  const int d = lat.dimension();
  Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(d * d, d * d);
  for (int x1 = 0; x1 < d; ++x1)
    for (int x2 = 0; x2 < d; ++x2)
      if (lat.distance(x1, x2) < 1.0) D(x1 * d + x2, x1 * d + x2) = 1;
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(d, d);
  const Eigen::MatrixXcd P1 = kron(proj.p(), I), P2 = kron(I, proj.p());
  CHECK(c.commutator == doctest::Approx(op_norm(D * P2 - P2 * D)).epsilon(1e-10));
  CHECK(c.pair_p == doctest::Approx(op_norm(D * P1)).epsilon(1e-10));
  CHECK(c.union_p == doctest::Approx(c.pair_p).epsilon(1e-14));  // N = 2: A_1 = a_12
  CHECK(c.pair_p <= c.pair_p_bound);
  CHECK(c.commutator <= c.commutator_bound);
  Eigen::VectorXcd v(d * d);
  for (int i = 0; i < d * d; ++i) v(i) = psi.amplitudes[static_cast<std::size_t>(i)];
  CHECK(c.union_state == doctest::Approx((D * v).norm()).epsilon(1e-12));
}

TEST_CASE("derivative identity: four routes agree") {
  const Lattice2D lat(4, 5.0);
  const auto phi = orbital_on(lat);
  const auto field = ExternalField::closed_form([](double x, double y, double) { return 0.2 * (x * x + y * y); }, {},
                                                true);
  const auto psi = random_symmetric_state(lat, 2, 3);
  const auto U = [](double r) { return r < 1.5 ? 1.0 : 0.0; };
  const auto w = ddt_weight_identity(psi, phi, U, 3.0, field, 1e-3, WeightFunction::m(2));
  CHECK(std::abs(w.commutator - w.r_form) < 1e-12);
  CHECK(std::abs(w.commutator - w.split_sum) < 1e-12);
  CHECK(w.residual < 1e-5);
}

TEST_CASE("one operator-algebra instance per shape passes") {
  for (auto [N, m] : std::vector<std::pair<int, int>>{{2, 3}, {3, 2}}) {
    const auto rep = operator_algebra_checks({N, m, 99});
    for (const auto& c : rep.checks) {
      CAPTURE(c.name);
      CHECK(c.passed);
    }
    CHECK(rep.tap().rfind("1..", 0) == 0);
  }
}

TEST_CASE("projector rejects an unnormalised orbital") {
  const Lattice2D lat(4, 4.0);
  std::vector<cplx> phi(16, 1.0);
  CHECK_THROWS_AS(CondensateProjector(lat, phi), PreconditionError);
}

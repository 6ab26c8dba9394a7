#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "json.hpp"

#include "gp2d/condensate_diagnostics.hpp"
#include "gp2d/errors.hpp"

namespace gp2d {

using namespace manybody;

namespace {

double max_abs(const Eigen::MatrixXcd& A) { return A.size() ? std::sqrt(A.cwiseAbs2().maxCoeff()) : 0.0; }

double op_norm(const Eigen::MatrixXcd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A.adjoint() * A, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

class Checker {
 public:
  Checker(const AlgebraInstance& inst, double tol) : inst_(inst), tol_(tol) {}

  void identity(const std::string& name, double deviation) { add(name, deviation, deviation <= tol_); }
  // lhs <= rhs, reported as lhs - rhs
  void inequality(const std::string& name, double lhs, double rhs) { add(name, lhs - rhs, lhs <= rhs + tol_); }

  AlgebraReport report;

 private:
  void add(const std::string& name, double dev, bool ok) {
    report.checks.push_back({name, inst_.seed, inst_.N, inst_.m, dev, tol_, ok});
  }
  AlgebraInstance inst_;
  double tol_;
};

}  // namespace

AlgebraReport operator_algebra_checks(const AlgebraInstance& inst, double tol, std::size_t op_norm_limit) {
  const int N = inst.N;
  if (N < 2 || N > 3) throw PreconditionError("operator_algebra_checks: needs 2 <= N <= 3");
  std::mt19937_64 rng(inst.seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const Lattice2D lat(inst.m, static_cast<double>(inst.m));
  const int d = lat.dimension();
  const std::size_t dim = hilbert_dimension(lat, N);

  Eigen::VectorXcd v(d);
  for (int a = 0; a < d; ++a) v(a) = cplx(gauss(rng), gauss(rng));
  v.normalize();
  const auto proj = CondensateProjector::from_orbital(lat, v);

  const double xi = 0.05 + 0.4 * unif(rng);
  const auto m = WeightFunction::m(N, xi);
  std::vector<double> rv(static_cast<std::size_t>(N) + 1), fv(static_cast<std::size_t>(N) + 1);
  for (auto& x : rv) x = unif(rng);
  for (auto& x : fv) x = unif(rng);
  const auto r = WeightFunction::custom("r", rv);
  const auto fw = WeightFunction::custom("f", fv);
  const auto n = WeightFunction::n(N);

  Eigen::MatrixXcd fpair(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) fpair(a, b) = unif(rng) - 0.5;
  std::vector<cplx> fdiff(static_cast<std::size_t>(d)), gdiff(static_cast<std::size_t>(d)), hdiff(static_cast<std::size_t>(d));
  for (int s = 0; s < d; ++s) {
    fdiff[static_cast<std::size_t>(s)] = cplx(gauss(rng), gauss(rng));
    gdiff[static_cast<std::size_t>(s)] = cplx(gauss(rng), gauss(rng));
    hdiff[static_cast<std::size_t>(s)] = cplx(gauss(rng), gauss(rng));
  }
  const Eigen::MatrixXcd D = derivative_matrix(lat, 0).cast<cplx>();
  const FewBodyState psi_state = random_symmetric_state(lat, N, inst.seed ^ 0x9e3779b97f4a7c15ULL);
  const Vec& psi = psi_state.amplitudes;

  Checker c(inst, tol);
  auto M = [&](const Op& op) { return dense(op, dim); };
  // Max entry of the difference of two operators, column by column.
  auto gap = [&](const Op& a, const Op& b) {
    double worst = 0;
    Vec e(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      e[j] = 1.0;
      const Vec x = a(e), y = b(e);
      e[j] = 0.0;
      for (std::size_t i = 0; i < dim; ++i) worst = std::max(worst, std::norm(x[i] - y[i]));
    }
    return std::sqrt(worst);
  };
  auto P = [&](int j) { return Op([&, j](const Vec& x) { return apply_p(proj, N, j, x); }); };
  auto Qo = [&](int j) { return Op([&, j](const Vec& x) { return apply_q(proj, N, j, x); }); };
  auto W = [&](const WeightFunction& w) { return Op([&, w](const Vec& x) { return apply_weight(proj, w, x); }); };
  // Diagonal multiplication operators, tabulated once.
  auto diagonal = [](Vec table) {
    return [t = std::move(table)](const Vec& x) {
      Vec y(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = t[i] * x[i];
      return y;
    };
  };
  const Op F = diagonal(multiply_pair(fpair, d, N, 0, 1, Vec(dim, 1.0)));
  const Op Fdiff = diagonal(multiply_difference(lat, fdiff, N, 0, 1, Vec(dim, 1.0)));

  // Single-particle projector algebra.
  {
    const Eigen::MatrixXcd p = proj.p(), q = proj.q(), I = Eigen::MatrixXcd::Identity(d, d);
    c.identity("projector_idempotent", std::max(max_abs(p * p - p), max_abs(q * q - q)));
    c.identity("projector_orthogonal", max_abs(p * q));
    c.identity("projector_complete", max_abs(p + q - I));
  }

  // Weight operators commute with each other and with p_j, q_j, P_k. For
  // Hermitian A, B: AB = BA exactly when AB is Hermitian.
  {
    auto then = [](Op a, Op b) { return Op([a, b](const Vec& x) { return a(b(x)); }); };
    auto skew = [&](const Op& op) {
      const Eigen::MatrixXcd X = M(op);
      return max_abs(X - X.adjoint());
    };
    {
      const Eigen::MatrixXcd X = M(then(W(m), W(r))), Y = M(W(m * r));
      c.identity("weight_product", std::max(max_abs(X - Y), max_abs(X.adjoint() - Y)));
    }
    for (int j = 0; j < N; ++j) {
      c.identity("weight_commutes_p" + std::to_string(j + 1), skew(then(W(m), P(j))));
      c.identity("weight_commutes_q" + std::to_string(j + 1), skew(then(W(m), Qo(j))));
    }
    for (int k = 0; k <= N; ++k) {
      const Op Pk = [&, k](const Vec& x) { return apply_P(proj, N, k, x); };
      c.identity("weight_commutes_P" + std::to_string(k), skew(then(W(m), Pk)));
    }
    c.identity("partition_of_unity", gap(
                                         [&](const Vec& x) {
                                           Vec s(x.size());
                                           for (int k = 0; k <= N; ++k) s = s + apply_P(proj, N, k, x);
                                           return s;
                                         },
                                         [](const Vec& x) { return x; }));
    c.identity("number_operator_square", gap(then(W(n), W(n)), [&](const Vec& x) {
                 Vec s(x.size());
                 for (int j = 0; j < N; ++j) s = s + apply_q(proj, N, j, x);
                 return (1.0 / N) * s;
               }));
  }

  // Shift rule m Q_j f Q_k = Q_j f m_{j-k} Q_k with Q in {p1p2, p1q2, q1p2, q1q2}.
  {
    struct Pattern {
      const char* name;
      bool q1, q2;
      int count;
    };
    const Pattern pats[] = {{"pp", false, false, 0}, {"pq", false, true, 1}, {"qp", true, false, 1}, {"qq", true, true, 2}};
    auto Qpat = [&](const Pattern& pt, const Vec& x) {
      Vec y = pt.q1 ? apply_q(proj, N, 0, x) : apply_p(proj, N, 0, x);
      return pt.q2 ? apply_q(proj, N, 1, y) : apply_p(proj, N, 1, y);
    };
    for (const auto& a : pats)
      for (const auto& b : pats) {
        const auto shifted = m.shifted(a.count - b.count);
        c.identity(std::string("shift_rule_") + a.name + "_" + b.name,
                   gap([&](const Vec& x) { return apply_weight(proj, m, Qpat(a, F(Qpat(b, x)))); },
                       [&](const Vec& x) { return Qpat(a, F(apply_weight(proj, shifted, Qpat(b, x)))); }));
      }
    for (int j = 0; j <= 1; ++j)
      for (int k = 0; k <= 1; ++k) {
        auto T = [&](int which, const Vec& x) { return which ? apply_q(proj, N, 0, x) : apply_p(proj, N, 0, x); };
        const auto shifted = m.shifted(j - k);
        c.identity("shift_rule_gradient_" + std::to_string(j) + std::to_string(k),
                   gap([&](const Vec& x) { return apply_weight(proj, m, T(j, apply_single(D, N, 0, T(k, x)))); },
                       [&](const Vec& x) { return T(j, apply_single(D, N, 0, apply_weight(proj, shifted, T(k, x)))); }));
      }
  }

  // [f, m] = [f, p1p2 (m - m_2) + (p1q2 + q1p2)(m - m_1)]
  {
    const auto m2 = m - m.shifted(2), m1 = m - m.shifted(1);
    auto R = [&](const Vec& x) {
      const Vec p1 = apply_p(proj, N, 0, x), q1 = x - p1;
      const Vec p1p2 = apply_p(proj, N, 1, p1), p1q2 = p1 - p1p2, q1p2 = apply_p(proj, N, 1, q1);
      return apply_weight(proj, m2, p1p2) + apply_weight(proj, m1, p1q2 + q1p2);
    };
    c.identity("commutator_expansion", gap([&](const Vec& x) { return F(apply_weight(proj, m, x)) - apply_weight(proj, m, F(x)); },
                                           [&](const Vec& x) { return F(R(x)) - R(F(x)); }));
  }

  // p1 f(x1 - x2) p1 = p1 (f * |phi|^2)(x2)
  {
    std::vector<cplx> conv(static_cast<std::size_t>(d));
    for (int x2 = 0; x2 < d; ++x2) {
      cplx s = 0;
      for (int a = 0; a < d; ++a) s += fdiff[static_cast<std::size_t>(lat.difference(a, x2))] * std::norm(v(a));
      conv[static_cast<std::size_t>(x2)] = s;
    }
    c.identity("convolution_identity",
               gap([&](const Vec& x) { return apply_p(proj, N, 0, Fdiff(apply_p(proj, N, 0, x))); },
                   [&](const Vec& x) { return apply_p(proj, N, 0, multiply_single(conv, N, 1, x)); }));
  }

  // Operator-norm bounds, in grid units: ||f||_1 = sum |f| h^2, ||phi||_inf = max|v| / h.
  if (dim <= op_norm_limit) {
    const double h = lat.spacing(), vmax = v.cwiseAbs().maxCoeff();
    const double phi_inf = vmax / h;
    double f1 = 0, g2 = 0, hh2 = 0;
    for (int s = 0; s < d; ++s) {
      f1 += std::abs(fdiff[static_cast<std::size_t>(s)]) * h * h;
      g2 += std::norm(gdiff[static_cast<std::size_t>(s)]) * h * h;
      hh2 += std::norm(hdiff[static_cast<std::size_t>(s)]) * h * h;
    }
    const Eigen::VectorXcd Dphi = D * (v / h);
    const double grad_inf = Dphi.cwiseAbs().maxCoeff();
    const double pfp = op_norm(M([&](const Vec& x) {
      return apply_p(proj, N, 0, multiply_difference(lat, fdiff, N, 0, 1, apply_p(proj, N, 0, x)));
    }));
    c.inequality("pfp_norm_bound", pfp, f1 * phi_inf * phi_inf);
    const double gp = op_norm(M([&](const Vec& x) { return multiply_difference(lat, gdiff, N, 0, 1, apply_p(proj, N, 0, x)); }));
    c.inequality("gp_norm_bound", gp, std::sqrt(g2) * phi_inf);
    const double hdp = op_norm(M([&](const Vec& x) {
      return multiply_difference(lat, hdiff, N, 0, 1, apply_single(D, N, 0, apply_p(proj, N, 0, x)));
    }));
    c.inequality("gradient_p_norm_bound", hdp, std::sqrt(hh2) * grad_inf);
  }

  // Depletion inequalities on a random symmetric state.
  {
    const Vec q1 = apply_q(proj, N, 0, psi), q1q2 = apply_q(proj, N, 1, q1);
    const double lhs1 = std::pow(norm(apply_weight(proj, fw, q1)), 2);
    const double rhs1 = std::pow(norm(apply_weight(proj, fw * n, psi)), 2);
    c.inequality("depletion_single", lhs1, rhs1);
    const double lhs2 = std::pow(norm(apply_weight(proj, fw, q1q2)), 2);
    const double rhs2 = static_cast<double>(N) / (N - 1) * std::pow(norm(apply_weight(proj, fw * n * n, psi)), 2);
    c.inequality("depletion_pair", lhs2, rhs2);

    const Vec q2 = apply_q(proj, N, 1, psi);
    const double grad_q2 = norm(apply_single(D, N, 1, q2));
    const double lhs3 = norm(apply_single(D, N, 1, apply_weight(proj, fw, q2)));
    c.inequality("gradient_weight_single", lhs3, 2 * fw.op_norm() * grad_q2);
    const Vec q1q2b = apply_q(proj, N, 0, q2);
    const double lhs4 = norm(apply_single(D, N, 1, apply_weight(proj, fw, q1q2b)));
    const double C = std::sqrt(static_cast<double>(N) / (N - 1));
    const double rhs4 = C * ((fw.shifted(1) * n).op_norm() + (fw * n).op_norm()) * grad_q2;
    c.inequality("gradient_weight_pair", lhs4, rhs4);
  }

  // Number distribution on the same state.
  {
    const auto ne = number_expectations(psi_state, proj);
    double total = 0;
    for (double p : ne.distribution) total += p;
    c.identity("distribution_sum", std::abs(total - 1));
    c.identity("depletion_two_routes", std::abs(ne.n2 - ne.n2_trace));
    c.inequality("weight_gap", weight_distance(m, n), std::pow(static_cast<double>(N), -xi));
  }
  return c.report;
}

AlgebraReport operator_algebra_suite(std::size_t count, std::uint64_t base_seed,
                                     const std::vector<std::pair<int, int>>& shapes, double tolerance) {
  if (shapes.empty()) throw PreconditionError("operator_algebra_suite: no instance shapes");
  std::vector<AlgebraReport> parts(count);
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(count); ++i) {
    const auto& [N, m] = shapes[static_cast<std::size_t>(i) % shapes.size()];
    parts[static_cast<std::size_t>(i)] = operator_algebra_checks({N, m, base_seed + static_cast<std::uint64_t>(i)}, tolerance);
  }
  AlgebraReport all;
  for (auto& p : parts) all.checks.insert(all.checks.end(), p.checks.begin(), p.checks.end());
  return all;
}

bool AlgebraReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const AlgebraCheck& c) { return c.passed; });
}

std::string AlgebraReport::tap() const {
  std::ostringstream os;
  os << "1.." << checks.size() << "\n";
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const auto& c = checks[i];
    os << (c.passed ? "ok " : "not ok ") << i + 1 << " - " << c.name << " N=" << c.N << " m=" << c.m
       << " seed=" << c.seed << " deviation=" << c.deviation << "\n";
  }
  return os.str();
}

std::string AlgebraReport::json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : checks)
    j.push_back({{"name", c.name}, {"seed", c.seed}, {"N", c.N}, {"m", c.m}, {"deviation", c.deviation},
                 {"tolerance", c.tolerance}, {"passed", c.passed}});
  return j.dump(2);
}

}  // namespace gp2d

#include "gp2d/krylov.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <vector>

#include "gp2d/errors.hpp"

namespace gp2d {
namespace {

cplx dot(std::span<const cplx> a, std::span<const cplx> b) {
  cplx s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

double nrm(std::span<const cplx> a) { return std::sqrt(std::real(dot(a, a))); }

// One attempt: returns the error estimate, writes the result into out.
double attempt(const Operator& H, std::span<const cplx> v, double dt, int m_max, std::vector<cplx>& out,
               KrylovStats& stats) {
  const std::size_t n = v.size();
  const double beta0 = nrm(v);
  out.assign(n, cplx{});
  if (beta0 == 0) return 0;
  std::vector<std::vector<cplx>> V;
  V.emplace_back(v.begin(), v.end());
  for (auto& z : V[0]) z /= beta0;
  std::vector<double> alpha, beta;
  std::vector<cplx> w(n);
  double tail = 0;
  int m = 0;
  for (int j = 0; j < m_max; ++j) {
    H(V[j], w);
    ++stats.matvecs;
    alpha.push_back(std::real(dot(V[j], w)));
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : V) {
        const cplx c = dot(q, w);
        for (std::size_t i = 0; i < n; ++i) w[i] -= c * q[i];
      }
    const double b = nrm(w);
    m = j + 1;
    double scale = 0;
    for (double a : alpha) scale = std::max(scale, std::abs(a));
    if (b <= 1e-14 * std::max(scale, 1.0)) {
      tail = 0;
      break;
    }
    tail = b;
    if (j + 1 == m_max) break;
    beta.push_back(b);
    V.emplace_back(w);
    for (auto& z : V.back()) z /= b;
  }
  Eigen::VectorXd d(m), e(std::max(m - 1, 0));
  for (int i = 0; i < m; ++i) d(i) = alpha[static_cast<std::size_t>(i)];
  for (int i = 0; i + 1 < m; ++i) e(i) = beta[static_cast<std::size_t>(i)];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
  const Eigen::MatrixXd& Q = es.eigenvectors();
  Eigen::VectorXcd coeff(m);
  for (int i = 0; i < m; ++i) {
    cplx s = 0;
    for (int k = 0; k < m; ++k) s += Q(i, k) * std::polar(1.0, -dt * es.eigenvalues()(k)) * Q(0, k);
    coeff(i) = s;
  }
  for (int i = 0; i < m; ++i) {
    const cplx c = beta0 * coeff(i);
    const auto& q = V[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < n; ++k) out[k] += c * q[k];
  }
  return beta0 * tail * std::abs(coeff(m - 1));
}

void advance(const Operator& H, std::span<cplx> v, double dt, const KrylovOptions& opt, int depth,
             KrylovStats& stats) {
  std::vector<cplx> out;
  const double err = attempt(H, v, dt, opt.max_dimension, out, stats);
  if (err <= opt.tolerance * std::max(nrm(v), 1e-300)) {
    std::copy(out.begin(), out.end(), v.begin());
    ++stats.substeps;
    stats.error_estimate = std::max(stats.error_estimate, err);
    return;
  }
  if (depth >= opt.max_splits) {
    std::ostringstream msg;
    msg << "expv: Krylov error " << err << " above tolerance after " << depth << " step halvings (dt=" << dt << ")";
    throw ConvergenceError(msg.str());
  }
  advance(H, v, dt / 2, opt, depth + 1, stats);
  advance(H, v, dt / 2, opt, depth + 1, stats);
}

}  // namespace

KrylovStats expv(const Operator& H, std::span<cplx> v, double dt, const KrylovOptions& options) {
  KrylovStats stats;
  advance(H, v, dt, options, 0, stats);
  return stats;
}

}  // namespace gp2d

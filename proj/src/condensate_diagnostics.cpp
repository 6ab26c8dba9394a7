#include "gp2d/condensate_diagnostics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"

#include "gp2d/errors.hpp"
#include "gp2d/radial_scattering.hpp"

namespace gp2d {

using manybody::Vec;

namespace {

std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// Visit every fibre of the tensor along one particle slot.
template <class F>
void for_each_fibre(std::size_t dim, int d, int N, int slot, F&& f) {
  const std::size_t stride = ipow(static_cast<std::size_t>(d), N - 1 - slot);
  const std::size_t block = stride * static_cast<std::size_t>(d);
  for (std::size_t outer = 0; outer < dim; outer += block)
    for (std::size_t inner = 0; inner < stride; ++inner) f(outer + inner, stride);
}

void digits(std::size_t idx, int d, int N, std::vector<int>& out) {
  out.resize(static_cast<std::size_t>(N));
  for (int j = N - 1; j >= 0; --j) {
    out[static_cast<std::size_t>(j)] = static_cast<int>(idx % static_cast<std::size_t>(d));
    idx /= static_cast<std::size_t>(d);
  }
}

void require_same_lattice(const Lattice2D& lattice, const GpState& phi) {
  if (!(phi.grid == lattice.grid())) throw PreconditionError("GP field and few-body lattice use different grids");
}

}  // namespace

// ---------------------------------------------------------------- weights

double m_weight(double k, int N, double xi) {
  if (!(xi > 0 && xi < 0.5)) throw PreconditionError("weight m: xi must lie in (0, 1/2)");
  const double n = N;
  if (k >= std::pow(n, 1 - 2 * xi)) return std::sqrt(k / n);
  return 0.5 * (std::pow(n, -1 + xi) * k + std::pow(n, -xi));
}

WeightFunction WeightFunction::n(int N) {
  if (N < 1) throw PreconditionError("weight n: N must be positive");
  std::vector<double> v(static_cast<std::size_t>(N) + 1);
  for (int k = 0; k <= N; ++k) v[static_cast<std::size_t>(k)] = std::sqrt(static_cast<double>(k) / N);
  return {"n", std::move(v), 0.0};
}

WeightFunction WeightFunction::m(int N, double xi) {
  std::vector<double> v(static_cast<std::size_t>(N) + 1);
  for (int k = 0; k <= N; ++k) v[static_cast<std::size_t>(k)] = m_weight(k, N, xi);
  return {"m", std::move(v), xi};
}

WeightFunction WeightFunction::m_a(int N, double xi) {
  std::vector<double> v(static_cast<std::size_t>(N) + 1);
  for (int k = 0; k <= N; ++k) v[static_cast<std::size_t>(k)] = m_weight(k, N, xi) - m_weight(k + 1, N, xi);
  return {"m^a", std::move(v), xi};
}

WeightFunction WeightFunction::m_b(int N, double xi) {
  std::vector<double> v(static_cast<std::size_t>(N) + 1);
  for (int k = 0; k <= N; ++k) v[static_cast<std::size_t>(k)] = m_weight(k, N, xi) - m_weight(k + 2, N, xi);
  return {"m^b", std::move(v), xi};
}

WeightFunction WeightFunction::custom(std::string name, std::vector<double> values) {
  if (values.empty()) throw PreconditionError("custom weight needs values for k = 0..N");
  return {std::move(name), std::move(values), 0.0};
}

double WeightFunction::operator()(int k) const {
  return k < 0 || k > particles() ? 0.0 : values_[static_cast<std::size_t>(k)];
}

WeightFunction WeightFunction::shifted(int d) const {
  std::vector<double> v(values_.size());
  for (int k = 0; k <= particles(); ++k) v[static_cast<std::size_t>(k)] = (*this)(k + d);
  std::ostringstream nm;
  nm << name_ << "_" << d;
  return {nm.str(), std::move(v), xi_};
}

double WeightFunction::op_norm() const {
  double m = 0;
  for (double w : values_) m = std::max(m, std::abs(w));
  return m;
}

WeightFunction operator*(const WeightFunction& a, const WeightFunction& b) {
  if (a.particles() != b.particles()) throw PreconditionError("weights for different N");
  std::vector<double> v(a.values_.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = a.values_[k] * b.values_[k];
  return {a.name_ + "*" + b.name_, std::move(v), a.xi_};
}

WeightFunction operator-(const WeightFunction& a, const WeightFunction& b) {
  if (a.particles() != b.particles()) throw PreconditionError("weights for different N");
  std::vector<double> v(a.values_.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = a.values_[k] - b.values_[k];
  return {a.name_ + "-" + b.name_, std::move(v), a.xi_};
}

double weight_distance(const WeightFunction& a, const WeightFunction& b) { return (a - b).op_norm(); }

// ---------------------------------------------------------------- projector

CondensateProjector::CondensateProjector(const Lattice2D& lattice, std::span<const cplx> phi)
    : lattice_(lattice), v_(orbital_coefficients(lattice, phi)) {
  if (std::abs(v_.norm() - 1) > 1e-10) throw PreconditionError("CondensateProjector: phi is not normalised");
}

CondensateProjector CondensateProjector::from_orbital(const Lattice2D& lattice, const Eigen::VectorXcd& v) {
  if (v.size() != lattice.dimension()) throw PreconditionError("CondensateProjector: orbital size mismatch");
  if (std::abs(v.norm() - 1) > 1e-10) throw PreconditionError("CondensateProjector: orbital is not normalised");
  return CondensateProjector(lattice, v);
}

Eigen::MatrixXcd CondensateProjector::q() const {
  return Eigen::MatrixXcd::Identity(v_.size(), v_.size()) - p();
}

double CondensateProjector::sup_norm() const { return v_.cwiseAbs().maxCoeff() / lattice_.spacing(); }

std::vector<double> CondensateProjector::density() const {
  std::vector<double> rho(static_cast<std::size_t>(v_.size()));
  const double h2 = lattice_.spacing() * lattice_.spacing();
  for (Eigen::Index i = 0; i < v_.size(); ++i) rho[static_cast<std::size_t>(i)] = std::norm(v_(i)) / h2;
  return rho;
}

// ---------------------------------------------------------------- many-body operators

namespace manybody {

namespace {

// out = p_slot in. The inner index runs over the contiguous trailing slots.
void project_slot(const Eigen::VectorXcd& v, int N, int slot, const cplx* in, cplx* out, std::size_t dim,
                  std::vector<cplx>& acc) {
  const int d = static_cast<int>(v.size());
  const std::size_t stride = ipow(static_cast<std::size_t>(d), N - 1 - slot);
  const std::size_t block = stride * static_cast<std::size_t>(d);
  if (stride == 1) {
    for (std::size_t outer = 0; outer < dim; outer += block) {
      cplx c = 0;
      for (int a = 0; a < d; ++a) c += std::conj(v(a)) * in[outer + static_cast<std::size_t>(a)];
      for (int a = 0; a < d; ++a) out[outer + static_cast<std::size_t>(a)] = v(a) * c;
    }
    return;
  }
  acc.resize(stride);
  for (std::size_t outer = 0; outer < dim; outer += block) {
    std::fill(acc.begin(), acc.end(), cplx{});
    for (int a = 0; a < d; ++a) {
      const cplx w = std::conj(v(a));
      const cplx* row = in + outer + static_cast<std::size_t>(a) * stride;
      for (std::size_t i = 0; i < stride; ++i) acc[i] += w * row[i];
    }
    for (int a = 0; a < d; ++a) {
      const cplx w = v(a);
      cplx* row = out + outer + static_cast<std::size_t>(a) * stride;
      for (std::size_t i = 0; i < stride; ++i) row[i] = w * acc[i];
    }
  }
}

struct WeightWorkspace {
  std::vector<Vec> p, q;
  std::vector<cplx> acc;
};

// Depth-first expansion of prod_j (p_j + q_j); the last slot folds both
// branches into out += w(c+1) x + (w(c) - w(c+1)) p x.
void weight_recurse(const Eigen::VectorXcd& v, const WeightFunction& w, int N, int slot, int count, const Vec& x,
                    Vec& out, WeightWorkspace& ws) {
  const int d = static_cast<int>(v.size());
  const std::size_t dim = x.size();
  const std::size_t stride = ipow(static_cast<std::size_t>(d), N - 1 - slot);
  const std::size_t block = stride * static_cast<std::size_t>(d);
  ws.acc.resize(stride);
  auto contract = [&](std::size_t outer) {
    std::fill(ws.acc.begin(), ws.acc.end(), cplx{});
    for (int a = 0; a < d; ++a) {
      const cplx c = std::conj(v(a));
      const cplx* row = x.data() + outer + static_cast<std::size_t>(a) * stride;
      for (std::size_t i = 0; i < stride; ++i) ws.acc[i] += c * row[i];
    }
  };
  if (slot == N - 1) {
    const double w1 = w(count + 1), dw = w(count) - w1;
    if (stride == 1) {
      for (std::size_t outer = 0; outer < dim; outer += block) {
        const cplx* xs = x.data() + outer;
        cplx c = 0;
        for (int a = 0; a < d; ++a) c += std::conj(v(a)) * xs[a];
        c *= dw;
        cplx* o = out.data() + outer;
        for (int a = 0; a < d; ++a) o[a] += w1 * xs[a] + v(a) * c;
      }
      return;
    }
    for (std::size_t outer = 0; outer < dim; outer += block) {
      contract(outer);
      for (int a = 0; a < d; ++a) {
        const cplx c = dw * v(a);
        const std::size_t off = outer + static_cast<std::size_t>(a) * stride;
        for (std::size_t i = 0; i < stride; ++i) out[off + i] += w1 * x[off + i] + c * ws.acc[i];
      }
    }
    return;
  }
  Vec& p = ws.p[static_cast<std::size_t>(slot)];
  Vec& q = ws.q[static_cast<std::size_t>(slot)];
  for (std::size_t outer = 0; outer < dim; outer += block) {
    contract(outer);
    for (int a = 0; a < d; ++a) {
      const cplx c = v(a);
      const std::size_t off = outer + static_cast<std::size_t>(a) * stride;
      for (std::size_t i = 0; i < stride; ++i) {
        p[off + i] = c * ws.acc[i];
        q[off + i] = x[off + i] - p[off + i];
      }
    }
  }
  weight_recurse(v, w, N, slot + 1, count, p, out, ws);
  weight_recurse(v, w, N, slot + 1, count + 1, q, out, ws);
}

}  // namespace

Vec apply_p(const CondensateProjector& proj, int N, int slot, const Vec& psi) {
  Vec out(psi.size());
  thread_local std::vector<cplx> acc;
  project_slot(proj.orbital(), N, slot, psi.data(), out.data(), psi.size(), acc);
  return out;
}

Vec apply_q(const CondensateProjector& proj, int N, int slot, const Vec& psi) {
  Vec out = apply_p(proj, N, slot, psi);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = psi[i] - out[i];
  return out;
}

std::vector<Vec> components(const CondensateProjector& proj, int N, const Vec& psi) {
  std::vector<Vec> level{psi};
  for (int j = 0; j < N; ++j) {
    std::vector<Vec> next(level.size() * 2);
    for (std::size_t mask = 0; mask < level.size(); ++mask) {
      next[mask] = apply_p(proj, N, j, level[mask]);
      next[mask | (std::size_t{1} << j)] = level[mask] - next[mask];
    }
    level = std::move(next);
  }
  return level;
}

Vec apply_P(const CondensateProjector& proj, int N, int k, const Vec& psi) {
  Vec out(psi.size());
  if (k < 0 || k > N) return out;
  const auto comp = components(proj, N, psi);
  for (std::size_t mask = 0; mask < comp.size(); ++mask)
    if (std::popcount(mask) == k) out = std::move(out) + comp[mask];
  return out;
}

Vec apply_weight(const CondensateProjector& proj, const WeightFunction& w, const Vec& psi) {
  const int N = w.particles();
  thread_local WeightWorkspace ws;
  ws.p.resize(static_cast<std::size_t>(N));
  ws.q.resize(static_cast<std::size_t>(N));
  for (auto& b : ws.p) b.resize(psi.size());
  for (auto& b : ws.q) b.resize(psi.size());
  Vec out(psi.size());
  weight_recurse(proj.orbital(), w, N, 0, 0, psi, out, ws);
  return out;
}

Vec multiply_pair(const Eigen::MatrixXcd& f, int d, int N, int a, int b, const Vec& psi) {
  Vec out(psi.size());
  std::vector<int> s;
  for (std::size_t idx = 0; idx < psi.size(); ++idx) {
    digits(idx, d, N, s);
    out[idx] = f(s[static_cast<std::size_t>(a)], s[static_cast<std::size_t>(b)]) * psi[idx];
  }
  return out;
}

Vec multiply_difference(const Lattice2D& lattice, std::span<const cplx> f, int N, int a, int b, const Vec& psi) {
  Vec out(psi.size());
  std::vector<int> s;
  for (std::size_t idx = 0; idx < psi.size(); ++idx) {
    digits(idx, lattice.dimension(), N, s);
    out[idx] = f[static_cast<std::size_t>(lattice.difference(s[static_cast<std::size_t>(a)], s[static_cast<std::size_t>(b)]))] * psi[idx];
  }
  return out;
}

Vec multiply_single(std::span<const cplx> f, int N, int slot, const Vec& psi) {
  Vec out(psi.size());
  const int d = static_cast<int>(f.size());
  for_each_fibre(psi.size(), d, N, slot, [&](std::size_t base, std::size_t stride) {
    for (int a = 0; a < d; ++a) out[base + static_cast<std::size_t>(a) * stride] = f[static_cast<std::size_t>(a)] * psi[base + static_cast<std::size_t>(a) * stride];
  });
  return out;
}

Vec apply_single(const Eigen::MatrixXcd& A, int N, int slot, const Vec& psi) {
  Vec out(psi.size());
  const int d = static_cast<int>(A.rows());
  std::vector<cplx> fibre(static_cast<std::size_t>(d));
  for_each_fibre(psi.size(), d, N, slot, [&](std::size_t base, std::size_t stride) {
    for (int a = 0; a < d; ++a) fibre[static_cast<std::size_t>(a)] = psi[base + static_cast<std::size_t>(a) * stride];
    for (int a = 0; a < d; ++a) {
      cplx s = 0;
      for (int b = 0; b < d; ++b) s += A(a, b) * fibre[static_cast<std::size_t>(b)];
      out[base + static_cast<std::size_t>(a) * stride] = s;
    }
  });
  return out;
}

cplx inner(const Vec& a, const Vec& b) {
  cplx s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

double norm(const Vec& a) { return std::sqrt(std::real(inner(a, a))); }

Vec operator+(Vec a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

Vec operator-(Vec a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

Vec operator*(cplx s, Vec a) {
  for (auto& z : a) z *= s;
  return a;
}

Eigen::MatrixXcd dense(const Op& op, std::size_t dim) {
  Eigen::MatrixXcd M(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  Vec e(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    e[j] = 1.0;
    const Vec col = op(e);
    e[j] = 0.0;
    for (std::size_t i = 0; i < dim; ++i) M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
  }
  return M;
}

}  // namespace manybody

using namespace manybody;

// ---------------------------------------------------------------- observables

Eigen::MatrixXcd gamma1(const FewBodyState& state) {
  const int d = state.lattice.dimension();
  std::vector<cplx> g(static_cast<std::size_t>(d) * d);
  kernels::partial_trace_first(state.amplitudes, d, g, kernels::Exec::Parallel);
  Eigen::MatrixXcd G(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) G(a, b) = g[static_cast<std::size_t>(a) * d + b];
  return G;
}

double trace_distance(const Eigen::MatrixXcd& gamma, const Eigen::VectorXcd& v) {
  const Eigen::MatrixXcd D = gamma - v * v.adjoint();
  const Eigen::MatrixXcd H = 0.5 * (D + D.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

NumberExpectations number_expectations(const FewBodyState& state, const CondensateProjector& proj) {
  const int N = state.N;
  if (N > 4) throw SizeError("number_expectations: the 2^N expansion is limited to N <= 4");
  NumberExpectations out;
  out.distribution.assign(static_cast<std::size_t>(N) + 1, 0.0);
  const auto comp = components(proj, N, state.amplitudes);
  for (std::size_t mask = 0; mask < comp.size(); ++mask)
    out.distribution[static_cast<std::size_t>(std::popcount(mask))] += std::real(inner(state.amplitudes, comp[mask]));
  for (int k = 0; k <= N; ++k) {
    const double P = out.distribution[static_cast<std::size_t>(k)];
    out.n += std::sqrt(static_cast<double>(k) / N) * P;
    out.n2 += static_cast<double>(k) / N * P;
  }
  const auto& v = proj.orbital();
  out.n2_trace = 1.0 - std::real(v.dot(gamma1(state) * v));
  return out;
}

double weight_expectation(const FewBodyState& state, const CondensateProjector& proj, const WeightFunction& w) {
  if (w.particles() != state.N) throw PreconditionError("weight_expectation: weight built for a different N");
  const auto P = number_expectations(state, proj).distribution;
  double s = 0;
  for (int k = 0; k <= state.N; ++k) s += w(k) * P[static_cast<std::size_t>(k)];
  return s;
}

EnergyGap energy_gap(const FewBodyState& state, const DiscreteHamiltonian& H, const GpState& phi,
                     const ExternalField& field, double b) {
  require_same_lattice(state.lattice, phi);
  EnergyGap e;
  e.many_body = energy_per_particle(state, H);
  GpState at = phi;
  at.t = state.t;
  e.gp = gp_energy(at, field, GpParams{b, 1e-3});
  e.gap = std::abs(e.many_body - e.gp);
  return e;
}

AlphaLess alpha_less(const FewBodyState& state, const DiscreteHamiltonian& H, const GpState& phi,
                     const ExternalField& field, double b, double xi) {
  const CondensateProjector proj(state.lattice, phi.field);
  AlphaLess a;
  a.m_expect = weight_expectation(state, proj, WeightFunction::m(state.N, xi));
  a.energy_gap = energy_gap(state, H, phi, field, b).gap;
  a.value = a.m_expect + a.energy_gap;
  return a;
}

AlphaFull alpha_full(const FewBodyState& state, const DiscreteHamiltonian& H, const GpState& phi,
                     const ExternalField& field, const MicroscopicPair& pair, double xi) {
  const int N = state.N;
  const Lattice2D& lat = state.lattice;
  const AlphaLess less = alpha_less(state, H, phi, field, 4 * std::numbers::pi, xi);
  AlphaFull a;
  a.m_expect = less.m_expect;
  a.energy_gap = less.energy_gap;
  a.value = less.value;
  if (N < 2) return a;
  if (!(pair.R_beta > lat.spacing())) {
    std::ostringstream msg;
    msg << "g not resolvable: R_beta=" << pair.R_beta << " <= spacing " << lat.spacing();
    a.fallback = true;
    a.note = msg.str();
    return a;
  }
  const CondensateProjector proj(lat, phi.field);
  std::vector<cplx> g(static_cast<std::size_t>(lat.dimension()));
  double g2 = 0;
  for (int s = 0; s < lat.dimension(); ++s) {
    g[static_cast<std::size_t>(s)] = pair.g(lat.displacement_length(s));
    g2 += std::norm(g[static_cast<std::size_t>(s)]);
  }
  const auto ma = WeightFunction::m_a(N, xi), mb = WeightFunction::m_b(N, xi);
  const Vec& psi = state.amplitudes;
  const Vec p1 = apply_p(proj, N, 0, psi), q1 = psi - p1;
  const Vec p1p2 = apply_p(proj, N, 1, p1), p1q2 = p1 - p1p2;
  const Vec q1p2 = apply_p(proj, N, 1, q1);
  const Vec r = apply_weight(proj, mb, p1p2) + apply_weight(proj, ma, p1q2 + q1p2);
  const Vec gr = multiply_difference(lat, g, N, 0, 1, r);
  a.correction = -static_cast<double>(N) * (N - 1) * std::real(inner(psi, gr));
  a.correction_bound = static_cast<double>(N) * (N - 1) * std::sqrt(g2) * proj.orbital().cwiseAbs().maxCoeff() *
                       (mb.op_norm() + 2 * ma.op_norm());
  a.value = less.value + a.correction;
  return a;
}

// ---------------------------------------------------------------- time derivative identity

WeightDerivative ddt_weight_identity(const FewBodyState& state, const GpState& phi,
                                     const std::function<double(double)>& U, double b, const ExternalField& field,
                                     double dt, const WeightFunction& w, const PropagationOptions& options) {
  const int N = state.N;
  if (N < 2) throw PreconditionError("ddt_weight_identity: needs N >= 2");
  if (!(dt > 0)) throw PreconditionError("ddt_weight_identity: dt must be positive");
  if (w.particles() != N) throw PreconditionError("ddt_weight_identity: weight built for a different N");
  const Lattice2D& lat = state.lattice;
  require_same_lattice(lat, phi);

  auto expectation = [&](const FewBodyState& s, const GpState& f) {
    const CondensateProjector proj(lat, f.field);
    return std::real(inner(s.amplitudes, apply_weight(proj, w, s.amplitudes)));
  };
  auto evolve = [&](double h) {
    const auto H = build_hamiltonian(lat, N, U, field, state.t + 0.5 * h);
    FewBodyState s = propagate(state, H, h, options);
    GpState f = phi;
    f.t = state.t;
    GpPropagator(phi.grid, field, GpParams{b, h}, kernels::Exec::Serial).advance(f, 1);
    return expectation(s, f);
  };
  WeightDerivative out;
  out.finite_difference = (evolve(dt) - evolve(-dt)) / (2 * dt);

  const auto H = build_hamiltonian(lat, N, U, field, state.t);
  const CondensateProjector proj(lat, phi.field);
  const auto rho = proj.density();
  const int d = lat.dimension();
  Eigen::MatrixXcd Z(d, d), Wm(d, d);
  for (int s1 = 0; s1 < d; ++s1)
    for (int s2 = 0; s2 < d; ++s2) {
      const double u = H.pair_table()[static_cast<std::size_t>(lat.difference(s1, s2))];
      Wm(s1, s2) = u;
      Z(s1, s2) = u - b / (N - 1) * (rho[static_cast<std::size_t>(s1)] + rho[static_cast<std::size_t>(s2)]);
    }
  const Vec& psi = state.amplitudes;
  const double pairs = static_cast<double>(N) * (N - 1);
  auto Zop = [&](const Vec& x) { return multiply_pair(Z, d, N, 0, 1, x); };

  const Vec Zpsi = Zop(psi), mpsi = apply_weight(proj, w, psi);
  const cplx comm = inner(psi, Zop(mpsi)) - inner(psi, apply_weight(proj, w, Zpsi));
  out.commutator = std::real(cplx(0, 0.5 * pairs) * comm);

  const auto wa = w - w.shifted(1), wb = w - w.shifted(2);
  const Vec p1 = apply_p(proj, N, 0, psi), q1 = psi - p1;
  const Vec p1p2 = apply_p(proj, N, 1, p1), p1q2 = p1 - p1p2;
  const Vec q1p2 = apply_p(proj, N, 1, q1);
  const Vec r = apply_weight(proj, wb, p1p2) + apply_weight(proj, wa, p1q2 + q1p2);
  out.r_form = -pairs * std::imag(inner(psi, Zop(r)));

  // <Psi, Q_j X Q_k Psi> = <Q_j Psi, X Q_k Psi> for orthogonal projections.
  auto slot2 = [&](const Vec& x, bool q) { return q ? apply_q(proj, N, 1, x) : apply_p(proj, N, 1, x); };
  auto slot1 = [&](const Vec& x, bool q) { return q ? apply_q(proj, N, 0, x) : apply_p(proj, N, 0, x); };
  auto Q = [&](const Vec& x, bool q1_, bool q2_) { return slot2(slot1(x, q1_), q2_); };
  const auto wa_m1 = wa.shifted(-1), wb_m2 = wb.shifted(-2);
  const Vec pq = Q(psi, false, true), qq = Q(psi, true, true);
  out.split_terms[0] = -2 * pairs * std::imag(inner(pq, apply_weight(proj, wa_m1, Zop(p1p2))));
  out.split_terms[1] = -pairs * std::imag(inner(qq, apply_weight(proj, wb_m2, multiply_pair(Wm, d, N, 0, 1, p1p2))));
  out.split_terms[2] = -2 * pairs * std::imag(inner(qq, apply_weight(proj, wa_m1, Zop(pq))));
  out.split_sum = out.split_terms[0] + out.split_terms[1] + out.split_terms[2];
  out.residual = std::abs(out.finite_difference - out.commutator);
  return out;
}

// ---------------------------------------------------------------- cutoff indicators

CutoffIndicators cutoff_indicators(const FewBodyState& state, const CondensateProjector& proj, double d_exponent) {
  const int N = state.N;
  if (N < 2 || N > 4) throw PreconditionError("cutoff_indicators: needs 2 <= N <= 4");
  const Lattice2D& lat = state.lattice;
  const int d = lat.dimension();
  CutoffIndicators c;
  c.exponent = d_exponent;
  c.threshold = std::pow(static_cast<double>(N), -d_exponent);
  std::vector<char> near(static_cast<std::size_t>(d));
  for (int s = 0; s < d; ++s) {
    near[static_cast<std::size_t>(s)] = lat.displacement_length(s) < c.threshold;
    c.disc_sites += static_cast<std::size_t>(near[static_cast<std::size_t>(s)]);
  }
  c.degenerate = c.threshold <= lat.spacing();
  const double h2 = lat.spacing() * lat.spacing();
  c.disc_area = static_cast<double>(c.disc_sites) * h2;
  const double sup = proj.sup_norm();
  c.pair_p_bound = sup * std::sqrt(c.disc_area);
  c.union_p_bound = sup * std::sqrt((N - 1) * c.disc_area);
  c.commutator_bound = 2 * sup * std::sqrt(c.disc_area);

  const auto& v = proj.orbital();
  // ||D p1||^2 = max over x2..xN of sum_x1 D |v(x1)|^2 for diagonal D.
  const std::size_t rest = ipow(static_cast<std::size_t>(d), N - 1);
  std::vector<int> s;
  double pair_max = 0, union_max = 0, comm_max = 0;
  for (std::size_t r = 0; r < rest; ++r) {
    digits(r, d, N - 1, s);
    double pair_sum = 0, union_sum = 0;
    for (int x1 = 0; x1 < d; ++x1) {
      const double w = std::norm(v(x1));
      if (near[static_cast<std::size_t>(lat.difference(x1, s[0]))]) pair_sum += w;
      bool any = false;
      for (int k = 0; k < N - 1; ++k) any = any || near[static_cast<std::size_t>(lat.difference(x1, s[static_cast<std::size_t>(k)]))];
      if (any) union_sum += w;
    }
    pair_max = std::max(pair_max, pair_sum);
    union_max = std::max(union_max, union_sum);
  }
  // [1_a12, p2] at fixed x1 is |x><y| - |y><x| with x = D v, y = (1 - D) v.
  for (int x1 = 0; x1 < d; ++x1) {
    double a = 0;
    for (int x2 = 0; x2 < d; ++x2)
      if (near[static_cast<std::size_t>(lat.difference(x1, x2))]) a += std::norm(v(x2));
    comm_max = std::max(comm_max, std::sqrt(std::max(0.0, a * (1 - a))));
  }
  c.pair_p = std::sqrt(pair_max);
  c.union_p = std::sqrt(union_max);
  c.commutator = comm_max;

  double in_union = 0, in_b = 0;
  std::vector<int> all;
  for (std::size_t idx = 0; idx < state.amplitudes.size(); ++idx) {
    digits(idx, d, N, all);
    const double w = std::norm(state.amplitudes[idx]);
    bool A = false, B = false;
    for (int k = 1; k < N; ++k) A = A || near[static_cast<std::size_t>(lat.difference(all[0], all[static_cast<std::size_t>(k)]))];
    for (int k = 1; k < N; ++k)
      for (int l = k + 1; l < N; ++l)
        B = B || near[static_cast<std::size_t>(lat.difference(all[static_cast<std::size_t>(k)], all[static_cast<std::size_t>(l)]))];
    if (A) in_union += w;
    if (B) in_b += w;
  }
  c.union_state = std::sqrt(in_union);
  c.b_state = std::sqrt(in_b);
  return c;
}

// ---------------------------------------------------------------- report

DiagnosticsReport diagnose(const FewBodyState& state, const DiscreteHamiltonian& H, const GpState& phi,
                           const ExternalField& field, double b, double xi, const MicroscopicPair* pair) {
  require_same_lattice(state.lattice, phi);
  const CondensateProjector proj(state.lattice, phi.field);
  DiagnosticsReport r;
  r.t = state.t;
  r.gamma1 = gamma1(state);
  r.trace_distance = trace_distance(r.gamma1, proj.orbital());
  r.numbers = number_expectations(state, proj);
  r.m_expect = weight_expectation(state, proj, WeightFunction::m(state.N, xi));
  r.energy_gap = energy_gap(state, H, phi, field, b).gap;
  r.alpha_less = r.m_expect + r.energy_gap;
  if (pair) r.alpha_full = alpha_full(state, H, phi, field, *pair, xi);
  return r;
}

std::string DiagnosticsReport::json() const {
  nlohmann::json j;
  j["t"] = t;
  const Eigen::Index d = gamma1.rows();
  j["gamma1"]["dimension"] = d;
  std::vector<double> re, im;
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) {
      re.push_back(gamma1(a, b).real());
      im.push_back(gamma1(a, b).imag());
    }
  j["gamma1"]["real"] = re;
  j["gamma1"]["imag"] = im;
  j["trace"] = gamma1.trace().real();
  j["trace_distance"] = trace_distance;
  j["n_expect"] = numbers.n;
  j["n2_expect"] = numbers.n2;
  j["n2_from_gamma"] = numbers.n2_trace;
  j["P"] = numbers.distribution;
  j["m_expect"] = m_expect;
  j["energy_gap"] = energy_gap;
  j["alpha_less"] = alpha_less;
  if (alpha_full) {
    j["alpha_full"] = alpha_full->value;
    j["correction_term"] = alpha_full->correction;
    j["correction_bound"] = alpha_full->correction_bound;
    j["alpha_full_fallback"] = alpha_full->fallback;
    if (!alpha_full->note.empty()) j["alpha_full_note"] = alpha_full->note;
  }
  return j.dump(2);
}

}  // namespace gp2d

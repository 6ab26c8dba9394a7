#include "gp2d/potential_models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gp2d/errors.hpp"
#include "gp2d/quadrature.hpp"
#include "gp2d/radial_scattering.hpp"

namespace gp2d {
namespace {

constexpr double kPi = std::numbers::pi;

template <class F>
double radial_integral(const std::vector<double>& bps, F&& f) {
  double sum = 0, lo = 0;
  for (double hi : bps) {
    const double a = std::nextafter(lo, hi), b = std::nextafter(hi, lo);
    sum += quad::panel(quad::gauss8(), [&](double r) { return f(std::clamp(r, a, b)); }, lo, hi);
    lo = hi;
  }
  return sum;
}

}  // namespace

const char* family_name(Family f) {
  switch (f) {
    case Family::W_beta: return "W_beta";
    case Family::V_N: return "V_N";
    case Family::U_smeared: return "U_smeared";
    case Family::M_beta: return "M_beta";
  }
  return "?";
}

double ScaledPotential::operator()(double r) const {
  switch (family) {
    case Family::W_beta:
    case Family::V_N: {
      const double y = r / length_;
      return y > base.support_radius() ? 0.0 : amplitude_ * base(y);
    }
    case Family::U_smeared: return r < length_ ? amplitude_ : 0.0;
    case Family::M_beta: return (r > inner_ && r <= length_) ? amplitude_ : 0.0;
  }
  return 0.0;
}

double ScaledPotential::support_radius() const {
  if (family == Family::W_beta || family == Family::V_N) return base.support_radius() * length_;
  return length_;
}

std::vector<double> ScaledPotential::breakpoints() const {
  std::vector<double> out;
  if (family == Family::W_beta || family == Family::V_N) {
    for (double b : base.breakpoints()) out.push_back(b * length_);
  } else {
    if (inner_ > 0) out.push_back(inner_);
    out.push_back(length_);
  }
  return out;
}

double ScaledPotential::l1_norm() const {
  return 2 * kPi * radial_integral(breakpoints(), [&](double r) { return r * (*this)(r); });
}

double ScaledPotential::l2_norm() const {
  return std::sqrt(2 * kPi * radial_integral(breakpoints(), [&](double r) {
                     const double v = (*this)(r);
                     return r * v * v;
                   }));
}

double ScaledPotential::linf_norm() const {
  double m = 0, lo = 0;
  for (double hi : breakpoints()) {
    for (int i = 0; i <= 64; ++i) {
      const double r = std::clamp(lo + (hi - lo) * i / 64.0, std::nextafter(lo, hi), std::nextafter(hi, lo));
      m = std::max(m, std::abs((*this)(r)));
    }
    lo = hi;
  }
  return m;
}

RadialPotential ScaledPotential::as_radial() const {
  auto self = *this;
  return RadialPotential([self](double r) { return self(r); }, support_radius(), breakpoints(), description());
}

std::string ScaledPotential::description() const {
  std::ostringstream out;
  out << family_name(family) << "(N=" << N;
  if (family == Family::V_N)
    out << ", s=" << s;
  else
    out << ", beta=" << beta;
  if (family == Family::U_smeared) out << ", beta1=" << beta1;
  if (family == Family::W_beta || family == Family::V_N) out << ", base=" << base.description();
  out << ")";
  return out.str();
}

ScaledPotential make_scaled(Family family, const RadialPotential& base, double N, double beta, double s) {
  if (!(N >= 1)) throw PreconditionError("make_scaled: N must be at least 1");
  ScaledPotential p;
  p.family = family;
  p.base = base;
  p.N = N;
  p.beta = beta;
  p.s = s;
  switch (family) {
    case Family::W_beta:
      if (!(beta > 0)) throw PreconditionError("make_scaled: beta must be positive for W_beta");
      p.amplitude_ = std::pow(N, -1 + 2 * beta);
      p.length_ = std::pow(N, -beta);
      break;
    case Family::V_N:
      if (!(s > 0)) throw PreconditionError("make_scaled: s must be positive for V_N");
      if (2 * N * s > 700) throw ResolutionError("make_scaled: e^(2 N s) overflows double precision");
      p.amplitude_ = std::exp(2 * N * s);
      p.length_ = std::exp(-N * s);
      break;
    default:
      throw PreconditionError("make_scaled: use make_smeared or make_m_beta for flat families");
  }
  return p;
}

ScaledPotential make_disc(Family family, double height, double inner, double outer, double N, double beta) {
  if (family != Family::U_smeared && family != Family::M_beta)
    throw PreconditionError("make_disc: only U_smeared and M_beta are flat");
  if (!(outer > inner) || inner < 0 || !(height >= 0)) throw PreconditionError("make_disc: invalid geometry");
  ScaledPotential p;
  p.family = family;
  p.N = N;
  p.beta = beta;
  p.amplitude_ = height;
  p.length_ = outer;
  p.inner_ = inner;
  return p;
}

ScaledPotential make_m_beta(const MicroscopicPair& pair) {
  if (pair.degenerate || !(pair.R_beta > pair.inner_radius))
    return make_disc(Family::M_beta, 0.0, pair.inner_radius, pair.inner_radius * (1 + 1e-12), pair.N, pair.beta);
  return make_disc(Family::M_beta, pair.height, pair.inner_radius, pair.R_beta, pair.N, pair.beta);
}

double ClassConstants::max() const { return std::max({c1, c2, cinf, csupport}); }

ClassConstants class_constants(const ScaledPotential& U, double beta) {
  ClassConstants c;
  const double N = U.N;
  c.c1 = U.l1_norm() * N;
  c.c2 = U.l2_norm() * std::pow(N, 1 - beta);
  c.cinf = U.linf_norm() * std::pow(N, 1 - 2 * beta);
  c.csupport = U.support_radius() * std::pow(N, beta);
  double lo = 0;
  for (double hi : U.breakpoints()) {
    for (int i = 0; i <= 32; ++i)
      if (U(lo + (hi - lo) * i / 32.0) < 0) c.nonnegative = false;
    lo = hi;
  }
  return c;
}

bool in_class(const ScaledPotential& U, double beta, double C) {
  const auto c = class_constants(U, beta);
  return c.nonnegative && c.max() <= C;
}

SmearedComparison::SmearedComparison(const ScaledPotential& W_beta, const ScaledPotential& U, int points_per_decade)
    : W_(W_beta), U_(U), delta_(U.support_radius()) {
  if (points_per_decade < 8) throw PreconditionError("SmearedComparison: need >= 8 points per decade");
  jumps_ = W_.breakpoints();
  jumps_.push_back(delta_);
  std::sort(jumps_.begin(), jumps_.end());
  jumps_.erase(std::unique(jumps_.begin(), jumps_.end()), jumps_.end());
  std::erase_if(jumps_, [&](double b) { return b > delta_; });
  if (std::abs(total_charge()) > 1e-12 * W_.l1_norm())
    throw ConvergenceError("SmearedComparison: total charge of W_beta - U does not vanish");
  fine_ = build(points_per_decade);
  const Tables coarse = build(points_per_decade / 2);
  norms_ = integrate(fine_);
  const Norms half = integrate(coarse);
  norms_.linf_error = std::abs(norms_.linf - half.linf);
  norms_.l1_error = std::abs(norms_.l1 - half.l1);
  norms_.l2_error = std::abs(norms_.l2 - half.l2);
  norms_.grad_l2_error = std::abs(norms_.grad_l2 - half.grad_l2);
}

double SmearedComparison::rho(double r) const { return W_(r) - U_(r); }

double SmearedComparison::total_charge() const {
  return 2 * kPi * radial_integral(jumps_, [&](double r) { return r * rho(r); });
}

SmearedComparison::Tables SmearedComparison::build(int ppd) const {
  Tables t;
  const double r_min = 1e-6 * jumps_.front();
  t.nodes.push_back(0.0);
  const int n = static_cast<int>(std::ceil(std::log10(delta_ / r_min) * ppd));
  for (int i = 0; i <= n; ++i) t.nodes.push_back(r_min * std::pow(delta_ / r_min, static_cast<double>(i) / n));
  t.nodes.insert(t.nodes.end(), jumps_.begin(), jumps_.end());
  std::sort(t.nodes.begin(), t.nodes.end());
  t.nodes.erase(std::unique(t.nodes.begin(), t.nodes.end(),
                            [](double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(a, b); }),
                t.nodes.end());
  t.nodes.back() = delta_;
  const std::size_t m = t.nodes.size();
  t.Q.assign(m, 0.0);
  t.T.assign(m, 0.0);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double a = std::nextafter(t.nodes[i], t.nodes[i + 1]), b = std::nextafter(t.nodes[i + 1], t.nodes[i]);
    t.Q[i + 1] = t.Q[i] + quad::panel(quad::gauss8(), [&](double r) { return r * rho(std::clamp(r, a, b)); },
                                      t.nodes[i], t.nodes[i + 1]);
  }
  for (std::size_t i = m - 1; i-- > 0;) {
    const double a = std::nextafter(t.nodes[i], t.nodes[i + 1]), b = std::nextafter(t.nodes[i + 1], t.nodes[i]);
    t.T[i] = t.T[i + 1] + quad::panel(
                              quad::gauss8(),
                              [&](double r) { return std::log(r) * r * rho(std::clamp(r, a, b)); }, t.nodes[i],
                              t.nodes[i + 1]);
  }
  return t;
}

SmearedComparison::Value SmearedComparison::eval(const Tables& t, double r) const {
  if (r >= delta_) return {0.0, 0.0};
  if (r <= 0) return {t.T.front(), 0.0};
  auto it = std::upper_bound(t.nodes.begin(), t.nodes.end(), r);
  const std::size_t i = static_cast<std::size_t>(it - t.nodes.begin()) - 1;
  const double lo = t.nodes[i], hi = t.nodes[i + 1];
  const double a = std::nextafter(lo, hi), b = std::nextafter(hi, lo);
  const double q = t.Q[i] + quad::panel(quad::gauss8(), [&](double x) { return x * rho(std::clamp(x, a, b)); }, lo, r);
  const double tt =
      t.T[i + 1] + quad::panel(quad::gauss8(), [&](double x) { return std::log(x) * x * rho(std::clamp(x, a, b)); },
                               r, hi);
  return {std::log(r) * q + tt, q / r};
}

SmearedComparison::Norms SmearedComparison::integrate(const Tables& t) const {
  Norms n;
  n.linf = std::abs(t.T.front());
  double s1 = 0, s2 = 0, sg = 0;
  for (std::size_t i = 0; i + 1 < t.nodes.size(); ++i) {
    const double lo = t.nodes[i], hi = t.nodes[i + 1];
    const auto& g = quad::gauss8();
    for (std::size_t k = 0; k < 8; ++k) {
      const double r = 0.5 * (lo + hi) + 0.5 * (hi - lo) * g.nodes[k];
      const double w = 0.5 * (hi - lo) * g.weights[k] * r;
      const Value v = eval(t, r);
      n.linf = std::max(n.linf, std::abs(v.h));
      s1 += w * std::abs(v.h);
      s2 += w * v.h * v.h;
      sg += w * v.grad * v.grad;
    }
  }
  n.l1 = 2 * kPi * s1;
  n.l2 = std::sqrt(2 * kPi * s2);
  n.grad_l2 = std::sqrt(2 * kPi * sg);
  return n;
}

double SmearedComparison::laplacian_residual(int intervals) const {
  if (intervals < 8) throw PreconditionError("laplacian_residual: need at least 8 intervals");
  const double dx = delta_ / intervals;
  std::vector<double> hv(static_cast<std::size_t>(intervals) + 1);
  for (int i = 0; i <= intervals; ++i) hv[i] = h(i * dx);
  double scale = 0;
  for (double b : jumps_) scale = std::max({scale, std::abs(rho(0.5 * b)), std::abs(rho(std::nextafter(b, 0.0)))});
  double worst = 0;
  for (int i = 1; i < intervals; ++i) {
    const double r = i * dx;
    bool near_jump = false;
    for (double b : jumps_)
      if (std::abs(r - b) <= 2 * dx) near_jump = true;
    if (near_jump) continue;
    const double lap = ((r + dx / 2) * (hv[i + 1] - hv[i]) - (r - dx / 2) * (hv[i] - hv[i - 1])) / (dx * dx * r);
    worst = std::max(worst, std::abs(lap - rho(r)));
  }
  return worst / scale;
}

Smeared make_smeared(const ScaledPotential& W_beta, double beta1, int points_per_decade) {
  if (W_beta.family != Family::W_beta) throw PreconditionError("make_smeared: expects a W_beta potential");
  if (!(beta1 >= 0 && beta1 <= W_beta.beta)) throw PreconditionError("make_smeared: need 0 <= beta1 <= beta");
  const double N = W_beta.N;
  const double delta = std::pow(N, -beta1);
  if (!(delta > W_beta.support_radius()) && beta1 < W_beta.beta)
    throw PreconditionError("make_smeared: smearing radius does not exceed the support of W_beta");
  const double height = W_beta.l1_norm() * std::pow(N, 2 * beta1) / kPi;
  ScaledPotential U = make_disc(Family::U_smeared, height, 0.0, delta, N, W_beta.beta);
  U.beta1 = beta1;
  U.base = W_beta.base;
  return {U, SmearedComparison(W_beta, U, points_per_decade)};
}

SmearedNormReport smeared_norm_report(const RadialPotential& W, std::span<const double> Ns, double beta,
                                      double beta1) {
  if (Ns.size() < 4) throw DataError("smeared_norm_report: need at least 4 values of N");
  SmearedNormReport rep;
  rep.beta = beta;
  rep.beta1 = beta1;
  std::vector<double> linf, l1, l2, grad, h0, gc;
  for (double N : Ns) {
    const ScaledPotential Wb = make_scaled(Family::W_beta, W, N, beta);
    const Smeared sm = make_smeared(Wb, beta1);
    const Smeared sm0 = make_smeared(Wb, 0.0);
    SmearedNormRow row;
    row.N = N;
    row.norms = sm.h.norms();
    row.h0_l2 = sm0.h.norms().l2;
    row.total_charge = sm.h.total_charge();
    const double delta = sm.h.support();
    for (int i = 0; i <= 64; ++i) row.outside_max = std::max(row.outside_max, std::abs(sm.h.h(delta * (1 + i / 64.0))));
    const double rb = std::pow(N, -beta);
    for (int i = 0; i <= 400; ++i) {
      const double r = delta * std::pow(1e-6, 1 - i / 400.0);
      row.gradient_constant =
          std::max(row.gradient_constant, std::abs(sm.h.grad_h(r)) * N * std::sqrt(r * r + rb * rb));
    }
    rep.rows.push_back(row);
    linf.push_back(row.norms.linf);
    l1.push_back(row.norms.l1);
    l2.push_back(row.norms.l2);
    grad.push_back(row.norms.grad_l2);
    h0.push_back(row.h0_l2);
    gc.push_back(row.gradient_constant);
  }
  rep.linf = fit_power_law(Ns, linf, 1.0);
  rep.l1 = fit_power_law(Ns, l1, 1.0);
  rep.l2 = fit_power_law(Ns, l2, 1.0);
  rep.grad_l2 = fit_power_law(Ns, grad, 0.5);
  rep.h0_l2 = fit_power_law(Ns, h0, 0.0);
  rep.gradient_constant = fit_power_law(Ns, gc, 0.0);
  return rep;
}

}  // namespace gp2d

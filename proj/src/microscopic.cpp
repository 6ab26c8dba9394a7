#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gp2d/errors.hpp"
#include "gp2d/ode.hpp"
#include "gp2d/quadrature.hpp"
#include "gp2d/radial_scattering.hpp"

namespace gp2d {
namespace {

constexpr double kPi = std::numbers::pi;

// Grid function with Hermite interpolation, increasing abscissae.
struct Profile {
  std::vector<double> x, y, dy;

  double value(double t) const {
    auto it = std::upper_bound(x.begin(), x.end(), t);
    std::size_t i = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
    i = std::min(i, x.size() - 2);
    return quad::Hermite{x[i], x[i + 1], y[i], y[i + 1], dy[i], dy[i + 1]}.value(t);
  }

  // int x * value^power over the grid, using only every stride-th node.
  double moment(int power, std::size_t stride) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < x.size(); i += stride) idx.push_back(i);
    if (idx.back() != x.size() - 1) idx.push_back(x.size() - 1);
    double sum = 0;
    for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
      const std::size_t i = idx[k], j = idx[k + 1];
      const quad::Hermite h{x[i], x[j], y[i], y[j], dy[i], dy[j]};
      sum += quad::panel(quad::gauss8(), [&](double t) { return t * std::pow(h.value(t), power); }, x[i], x[j]);
    }
    return sum;
  }
};

}  // namespace

struct MicroscopicPair::Detail {
  RadialPotential base = RadialPotential::zero();
  RegularSolution core;
  double c = 0;          // flux normalisation of the unscaled solution
  double log_shift = 0;  // N - ln a, so the unnormalised f is log_shift + ln r outside the core
  double fR = 1;         // unnormalised f at R_beta
  double core_radius = 0;
  double scale = 0;  // e^N, zero when it overflows
  double g_inner = 0;
  Profile f_ann;  // unnormalised f on rho = r / N^-beta
  Profile g_ann;  // g on rho
};

double MicroscopicPair::core_radius() const { return detail->core_radius; }

double MicroscopicPair::M(double r) const {
  return (!degenerate && r > inner_radius && r <= R_beta) ? height : 0.0;
}

double MicroscopicPair::V_N(double r) const {
  const Detail& d = *detail;
  if (d.scale == 0 || r > d.core_radius) return 0.0;
  return d.scale * d.scale * d.base(d.scale * r);
}

double MicroscopicPair::f(double r) const {
  const Detail& d = *detail;
  if (degenerate || r >= R_beta) return 1.0;
  if (r >= inner_radius) return d.f_ann.value(r / inner_radius) / d.fR;
  if (r >= d.core_radius) return (d.log_shift + std::log(r)) / d.fR;
  return d.c * d.core.value(d.scale * r) / d.fR;
}

double MicroscopicPair::g(double r) const {
  const Detail& d = *detail;
  if (degenerate || r >= R_beta) return 0.0;
  if (r >= inner_radius) return d.g_ann.value(r / inner_radius);
  if (r >= d.core_radius) return d.g_inner + std::log(inner_radius / r) / d.fR;
  return 1.0 - d.c * d.core.value(d.scale * r) / d.fR;
}

double MicroscopicPair::j(double r) const {
  const Detail& d = *detail;
  if (degenerate) return 1.0;
  const double denom = d.log_shift + std::log(R_beta);
  if (r >= d.core_radius) return (d.log_shift + std::log(r)) / denom;
  return d.c * d.core.value(d.scale * r) / denom;
}

MicroscopicPair build_microscopic(const RadialPotential& V, double N, double beta) {
  if (!(N >= 2)) throw PreconditionError("build_microscopic: N must be at least 2");
  if (!(beta > 0)) throw PreconditionError("build_microscopic: beta must be positive");
  MicroscopicPair pair;
  auto detail = std::make_shared<MicroscopicPair::Detail>();
  detail->base = V;
  pair.N = N;
  pair.beta = beta;
  pair.inner_radius = std::pow(N, -beta);
  pair.height = 4 * kPi * std::pow(N, -1 + 2 * beta);
  detail->scale = N < 700 ? std::exp(N) : 0.0;
  detail->core_radius = std::exp(-N) * V.support_radius();
  if (!(pair.inner_radius > detail->core_radius)) {
    std::ostringstream msg;
    msg << "build_microscopic: supports overlap, N^-beta=" << pair.inner_radius
        << " <= e^-N support=" << detail->core_radius;
    throw PreconditionError(msg.str());
  }
  if (V.is_zero()) {
    pair.degenerate = true;
    pair.R_beta = pair.inner_radius;
    pair.detail = detail;
    return pair;
  }

  const double r1 = pair.inner_radius;
  detail->core = solve_regular(V, V.support_radius());
  const RegularSolution& core = detail->core;
  const std::size_t ks = core.support_index;
  const double rs = core.r[ks];
  detail->c = 1.0 / (rs * core.du[ks]);
  const double a = rs * std::exp(-core.u[ks] / (rs * core.du[ks]));
  pair.scattering_length = a;
  detail->log_shift = N - std::log(a);
  const double F0 = detail->log_shift + std::log(r1);

  // Annulus in rho = r / r1: f'' + f'/rho = -kappa^2 f, kappa^2 = 2 pi / N.
  const double kappa2 = 2 * kPi / N;
  auto forward = [kappa2](double rho, const ode::State<3>& y, ode::State<3>& dy) {
    dy[0] = y[1];
    dy[1] = -y[1] / rho - kappa2 * y[0];
    dy[2] = rho * y[0];
  };
  ode::Options opt;
  const ode::State<3> start{F0, 1.0, 0.0};

  double lo = 1.0, hi = 0.0;
  ode::State<3> y_lo = start;
  double step = 1e-3;
  while (true) {
    const double probe = lo + step;
    pair.scan_trace.push_back(probe * r1);
    const ode::State<3> y_probe = ode::dopri5<3>(forward, lo, probe, y_lo, opt);
    if (y_probe[1] <= 0) {
      hi = probe;
      break;
    }
    lo = probe;
    y_lo = y_probe;
    step *= 2;
    if (probe > 1e6) {
      std::ostringstream msg;
      msg << "build_microscopic: no sign change of f' up to rho=" << probe << "; scan:";
      for (double s : pair.scan_trace) msg << ' ' << s;
      throw ConvergenceError(msg.str());
    }
  }
  while (hi - lo > 1e-13 * hi) {
    const double mid = 0.5 * (lo + hi);
    const ode::State<3> y_mid = ode::dopri5<3>(forward, lo, mid, y_lo, opt);
    if (y_mid[1] > 0) {
      lo = mid;
      y_lo = y_mid;
    } else {
      hi = mid;
    }
  }
  const double rho_star = 0.5 * (lo + hi);
  pair.R_beta = rho_star * r1;

  Profile& fa = detail->f_ann;
  ode::Options rec = opt;
  rec.max_step = (rho_star - 1) / 256;
  auto push_f = [&](double rho, const ode::State<3>& y) {
    fa.x.push_back(rho);
    fa.y.push_back(y[0]);
    fa.dy.push_back(y[1]);
  };
  push_f(1.0, start);
  const ode::State<3> yR = ode::dopri5<3>(forward, 1.0, rho_star, start, rec, push_f);
  const double fR = yR[0];
  detail->fR = fR;
  const double sigma1 = yR[2];

  // Inward solve for g = 1 - f/fR: g'' + g'/rho = kappa^2 (1 - g), g(R) = g'(R) = 0.
  auto inward = [kappa2](double rho, const ode::State<4>& y, ode::State<4>& dy) {
    dy[0] = y[1];
    dy[1] = -y[1] / rho + kappa2 * (1 - y[0]);
    dy[2] = rho * y[0];
    dy[3] = rho * y[0] * y[0];
  };
  Profile ga;
  auto push_g = [&](double rho, const ode::State<4>& y) {
    ga.x.push_back(rho);
    ga.y.push_back(y[0]);
    ga.dy.push_back(y[1]);
  };
  const ode::State<4> g_end{0, 0, 0, 0};
  push_g(rho_star, g_end);
  const ode::State<4> y1 = ode::dopri5<4>(inward, rho_star, 1.0, g_end, rec, push_g);
  std::reverse(ga.x.begin(), ga.x.end());
  std::reverse(ga.y.begin(), ga.y.end());
  std::reverse(ga.dy.begin(), ga.dy.end());
  ga.x.front() = 1.0;
  detail->g_ann = ga;
  const double g1 = y1[0];
  detail->g_inner = g1;
  pair.matching_defect = std::abs(g1 - (1 - F0 / fR));

  // Norms of g: annulus from the inward solve, log region in closed form, core
  // via the unscaled moments.
  const double ann1 = r1 * r1 * (-y1[2]);
  const double ann2 = r1 * r1 * (-y1[3]);
  const double ann1_half = r1 * r1 * ga.moment(1, 2);
  const double ann2_half = r1 * r1 * ga.moment(2, 2);
  const double ann1_full = r1 * r1 * ga.moment(1, 1);
  const double ann2_full = r1 * r1 * ga.moment(2, 1);

  const double rc = detail->core_radius;
  const double Lc = rc > 0 ? std::log(r1 / rc) : 0.0;
  auto F1 = [](double r, double L) { return r * r / 2 * L + r * r / 4; };
  auto F2 = [](double r, double L) { return r * r / 2 * L * L + r * r / 2 * L + r * r / 4; };
  const double intL1 = F1(r1, 0) - (rc > 0 ? F1(rc, Lc) : 0.0);
  const double intL2 = F2(r1, 0) - (rc > 0 ? F2(rc, Lc) : 0.0);
  const double log1 = g1 * (r1 * r1 - rc * rc) / 2 + intL1 / fR;
  const double log2 = g1 * g1 * (r1 * r1 - rc * rc) / 2 + 2 * g1 * intL1 / fR + intL2 / (fR * fR);

  double core1 = 0, core2 = 0;
  if (detail->scale > 0) {
    const double e2 = std::exp(-2 * N);
    const double cf = detail->c / fR;
    const double m1 = core.first_moment[ks], m2 = core.second_moment[ks];
    core1 = e2 * (rs * rs / 2 - cf * m1);
    core2 = e2 * (rs * rs / 2 - 2 * cf * m1 + cf * cf * m2);
  }
  pair.g_norms.l1 = 2 * kPi * (ann1 + log1 + core1);
  pair.g_norms.l2 = std::sqrt(2 * kPi * (ann2 + log2 + core2));
  pair.g_norms.linf = 1 - detail->c / fR;
  pair.g_norms.l1_error = 2 * kPi * (std::abs(ann1_full - ann1_half) + std::abs(ann1_full - ann1));
  pair.g_norms.l2_error =
      std::sqrt(2 * kPi * (std::abs(ann2_full - ann2_half) + std::abs(ann2_full - ann2))) ;

  const double flux = core.flux_moment[ks];
  pair.vn_coupling = 2 * kPi * N * detail->c * flux / fR;
  pair.m_coupling = 8 * kPi * kPi * sigma1 / fR;
  pair.root_residual = (2 * kPi * detail->c * flux - 8 * kPi * kPi * sigma1 / N) / fR;
  pair.K_beta = fR / (detail->log_shift + std::log(pair.R_beta));
  pair.detail = detail;
  return pair;
}

double coupling_deviation(const MicroscopicPair& pair) { return pair.m_coupling - 4 * kPi; }

double height_deviation(const MicroscopicPair& pair) {
  if (pair.degenerate) return -4 * kPi;
  const double rho = pair.R_beta / pair.inner_radius;
  return 4 * kPi * kPi * (rho * rho - 1) - 4 * kPi;
}

GNormReport g_norm_report(std::span<const MicroscopicPair> pairs) {
  if (pairs.size() < 4) throw DataError("g_norm_report: need at least 4 values of N");
  std::vector<double> Ns, l1, l2;
  GNormReport rep;
  for (const auto& p : pairs) {
    if (p.beta != pairs.front().beta) throw DataError("g_norm_report: beta must be fixed across the sweep");
    Ns.push_back(p.N);
    l1.push_back(p.g_norms.l1);
    l2.push_back(p.g_norms.l2);
    rep.max_linf = std::max(rep.max_linf, p.g_norms.linf);
  }
  rep.linf_bounded = rep.max_linf <= 1.0;
  rep.l1 = fit_power_law(Ns, l1, 1.0);
  rep.l2 = fit_power_law(Ns, l2, 1.0);
  rep.l1_raw = fit_power_law(Ns, l1, 0.0);
  rep.l2_raw = fit_power_law(Ns, l2, 0.0);
  return rep;
}

namespace {

struct Tridiagonal {
  std::vector<double> diag, off;  // off[i] couples i and i+1
};

std::vector<double> solve_tridiagonal(const Tridiagonal& m, std::vector<double> rhs) {
  const std::size_t n = m.diag.size();
  std::vector<double> c(n, 0.0), d(n, 0.0);
  c[0] = n > 1 ? m.off[0] / m.diag[0] : 0.0;
  d[0] = rhs[0] / m.diag[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double denom = m.diag[i] - m.off[i - 1] * c[i - 1];
    if (i + 1 < n) c[i] = m.off[i] / denom;
    d[i] = (rhs[i] - m.off[i - 1] * d[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) d[i] -= c[i] * d[i + 1];
  return d;
}

struct RadialForm {
  std::vector<double> nodes;
  std::function<double(double)> weight;  // (V_N - M)/2

  template <class F>
  void for_each_element(F&& f) const {
    for (std::size_t e = 0; e + 1 < nodes.size(); ++e) f(e, nodes[e], nodes[e + 1]);
  }

  Tridiagonal stiffness(double shift) const {
    Tridiagonal m{std::vector<double>(nodes.size(), 0.0), std::vector<double>(nodes.size() - 1, 0.0)};
    for_each_element([&](std::size_t e, double ra, double rb) {
      const double h = rb - ra;
      const double k = (ra + rb) / (2 * h);
      const double lo = std::nextafter(ra, rb), hi = std::nextafter(rb, ra);
      double aa = 0, ab = 0, bb = 0;
      const auto& g = quad::gauss4();
      for (std::size_t q = 0; q < 4; ++q) {
        const double r = 0.5 * (ra + rb) + 0.5 * h * g.nodes[q];
        const double w = 0.5 * h * g.weights[q] * r * (weight(std::clamp(r, lo, hi)) + shift);
        const double pa = (rb - r) / h, pb = (r - ra) / h;
        aa += w * pa * pa;
        ab += w * pa * pb;
        bb += w * pb * pb;
      }
      m.diag[e] += k + aa;
      m.diag[e + 1] += k + bb;
      m.off[e] += -k + ab;
    });
    return m;
  }

  // Elementwise Rayleigh quotient: every kinetic contribution is a square.
  double rayleigh(const std::vector<double>& x) const {
    double num = 0, den = 0;
    for_each_element([&](std::size_t e, double ra, double rb) {
      const double h = rb - ra;
      const double dx = x[e + 1] - x[e];
      num += dx * dx * (ra + rb) / (2 * h);
      const double lo = std::nextafter(ra, rb), hi = std::nextafter(rb, ra);
      const auto& g = quad::gauss4();
      for (std::size_t q = 0; q < 4; ++q) {
        const double r = 0.5 * (ra + rb) + 0.5 * h * g.nodes[q];
        const double v = (x[e] * (rb - r) + x[e + 1] * (r - ra)) / h;
        const double w = 0.5 * h * g.weights[q] * r * v * v;
        num += w * weight(std::clamp(r, lo, hi));
        den += w;
      }
    });
    return num / den;
  }

  std::vector<double> mass_times(const std::vector<double>& x) const {
    std::vector<double> out(x.size(), 0.0);
    for_each_element([&](std::size_t e, double ra, double rb) {
      const double h = rb - ra;
      // exact P1 mass matrix with weight r
      const double maa = h * (3 * ra + rb) / 12, mab = h * (ra + rb) / 12, mbb = h * (ra + 3 * rb) / 12;
      out[e] += maa * x[e] + mab * x[e + 1];
      out[e + 1] += mab * x[e] + mbb * x[e + 1];
    });
    return out;
  }
};

std::vector<double> segment_nodes(double lo, double hi, int elements, bool geometric) {
  std::vector<double> out;
  for (int i = 0; i < elements; ++i) {
    const double t = static_cast<double>(i) / elements;
    out.push_back(geometric ? lo * std::pow(hi / lo, t) : lo + (hi - lo) * t);
  }
  return out;
}

}  // namespace

PositivityResult check_pair_positivity(const MicroscopicPair& pair, int grid_resolution) {
  if (grid_resolution < 1) throw PreconditionError("check_pair_positivity: grid_resolution must be >= 1");
  const auto& d = *pair.detail;
  const double R = pair.R_beta;
  const double rc = d.core_radius;
  if (!pair.degenerate && rc < 1e-12 * R) {
    std::ostringstream msg;
    msg << "check_pair_positivity: core e^-N support=" << rc << " spans more than 12 decades below R_beta="
        << R << "; restrict to small N";
    throw ResolutionError(msg.str());
  }
  struct Segment {
    double lo, hi;
    int elements;
    bool geometric;
  };
  std::vector<Segment> segs;
  if (!pair.degenerate) {
    double lo = 0;
    for (double b : d.base.breakpoints()) {
      segs.push_back({lo, b * rc / d.base.support_radius(), 4, false});
      lo = segs.back().hi;
    }
    const int decades = static_cast<int>(std::ceil(std::log10(pair.inner_radius / rc)));
    segs.push_back({rc, pair.inner_radius, 8 * std::max(decades, 1), true});
    segs.push_back({pair.inner_radius, R, 8, false});
  } else {
    segs.push_back({0.0, R, 8, false});
  }

  RadialForm form;
  form.weight = [&pair](double r) { return 0.5 * (pair.V_N(r) - pair.M(r)); };
  PositivityResult res;
  for (int level = 1; level <= grid_resolution; level *= 2) {
    form.nodes.clear();
    for (const auto& s : segs) {
      auto part = segment_nodes(s.lo, s.hi, s.elements * level, s.geometric);
      form.nodes.insert(form.nodes.end(), part.begin(), part.end());
    }
    form.nodes.push_back(R);

    const double shift = 1.0 / (R * R);
    Tridiagonal A = form.stiffness(shift);
    std::vector<double> x(form.nodes.size(), 1.0);
    double lambda = form.rayleigh(x);
    for (int it = 0; it < 500; ++it) {
      x = solve_tridiagonal(A, form.mass_times(x));
      double norm = 0;
      for (double v : x) norm = std::max(norm, std::abs(v));
      for (double& v : x) v /= norm;
      const double next = form.rayleigh(x);
      const bool done = std::abs(next - lambda) <= 1e-15 * std::max(std::abs(next), shift);
      lambda = next;
      if (done) break;
    }
    if (!res.lambda_by_level.empty() && lambda > res.lambda_by_level.back()) res.nonincreasing = false;
    res.lambda_by_level.push_back(lambda);
    res.nodes_by_level.push_back(static_cast<int>(form.nodes.size()));
  }
  res.lambda_min = res.lambda_by_level.back();
  return res;
}

}  // namespace gp2d

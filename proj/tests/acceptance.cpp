// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "gp2d/condensate_diagnostics.hpp"
#include "gp2d/experiment.hpp"
#include "gp2d/fewbody_lattice.hpp"
#include "gp2d/gp_propagator.hpp"
#include "gp2d/potential_models.hpp"
#include "gp2d/radial_scattering.hpp"

using namespace gp2d;
constexpr double kPi = std::numbers::pi;

namespace {

// Tolerances.
constexpr double kBesselRel = 1e-8;
constexpr double kRIndependence = 1e-6;
constexpr double kIdentityRel = 1e-8;
constexpr double kRootResidual = 1e-10;
constexpr double kExponentMicro = 0.1;
constexpr double kStableC = 1.05;
constexpr double kExponentNorm = 0.15;
constexpr double kOutside = 1e-10;
constexpr double kLaplacianOrder = 2.0, kLaplacianOrderTol = 0.05;
constexpr double kPositivity = -1e-6;
constexpr double kGpNorm = 1e-12;
constexpr double kDriftRatio = 4.0, kDriftRatioTol = 0.5;
constexpr double kPhase = 1e-10;
constexpr double kUnitarity = 1e-10;
constexpr double kSpectrum = 1e-10;
constexpr double kFactor = 1e-10;
constexpr double kDdtResidual = 1e-5;
constexpr double kDdtOrder = 2.0, kDdtOrderTol = 0.3;
constexpr double kN2Routes = 1e-12;

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }
};

int failures = 0;

void report(int id, const char* title, bool ok, const std::string& detail) {
  if (!ok) ++failures;
  std::printf("%s %2d %s: %s\n", ok ? "PASS" : "FAIL", id, title, detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double bessel_scattering_length(double V0, double R0) {
  const double k = std::sqrt(V0 / 2);
  return R0 * std::exp(-std::cyl_bessel_i(0.0, k * R0) / (k * R0 * std::cyl_bessel_i(1.0, k * R0)));
}

double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

ExternalField harmonic(double c) {
  return ExternalField::closed_form([c](double x, double y, double) { return c * (x * x + y * y); },
                                    [](double, double, double) { return 0.0; }, true);
}

void scattering_oracle() {
  Stopwatch sw;
  double worst = 0, spread = 0;
  for (double V0 : {0.5, 1.0, 4.0, 20.0}) {
    const auto V = RadialPotential::square_well(V0, 1.0);
    const double a = bessel_scattering_length(V0, 1.0);
    const double a2 = solve_zero_energy(V, 2.0).scattering_length, a4 = solve_zero_energy(V, 4.0).scattering_length;
    worst = std::max({worst, std::abs(a2 - a) / a, std::abs(a4 - a) / a});
    spread = std::max(spread, std::abs(a2 - a4) / a);
  }
  const double t = sw.seconds();
  report(1, "scattering oracle", worst < kBesselRel && spread < kRIndependence && t < 1.0,
         fmt("max rel err vs Bessel %.2e (< %.0e), R-spread %.2e (< %.0e), %.3f s (< 1 s)", worst, kBesselRel, spread,
             kRIndependence, t));
}

void identity_I() {
  double worst = 0;
  std::vector<RadialPotential> potentials{
      RadialPotential::square_well(0.5, 1.0), RadialPotential::square_well(1.0, 1.0),
      RadialPotential::square_well(20.0, 1.0),
      RadialPotential::from_table({0, 0.5, 1.0, 1.5}, {3.0, 2.0, 0.5, 0.0}, "ramp"),
      RadialPotential::from_table({0, 0.3, 0.6, 1.0}, {0.0, 5.0, 1.0, 0.0}, "shell")};
  int solved = 0;
  for (const auto& V : potentials)
    for (double R : {2.0, 4.0, 10.0}) {
      const auto sol = solve_zero_energy(V, R);
      const double pred = 4 * kPi / std::log(R / sol.scattering_length);
      worst = std::max(worst, std::abs(sol.integral_I - pred) / pred);
      ++solved;
    }
  for (double N : {8.0, 16.0, 32.0, 64.0}) {
    worst = std::max(worst, scaled_scattering_identity(RadialPotential::square_well(1.0, 1.0), N, 2.0).relative_error);
    ++solved;
  }
  report(2, "identity I = 4pi/ln(R/a)", worst < kIdentityRel,
         fmt("%d solves, max rel err %.2e (< %.0e)", solved, worst, kIdentityRel));
}

void microscopic() {
  Stopwatch sw;
  const auto V = RadialPotential::square_well(1.0, 1.0);
  const std::vector<double> Ns{8, 16, 32, 64};
  double residual = 0, k_violation = 0, exp_dev = 0, c_ratio = 0;
  for (double beta : {0.5, 1.0}) {
    std::vector<double> R, C;
    for (double N : Ns) {
      const auto p = build_microscopic(V, N, beta);
      residual = std::max(residual, std::abs(p.root_residual));
      const double lower = 1 + std::log(p.inner_radius / p.R_beta) / (N + std::log(p.R_beta / p.scattering_length));
      k_violation = std::max({k_violation, p.K_beta - 1, lower - p.K_beta});
      R.push_back(p.R_beta);
      C.push_back(std::abs(coupling_deviation(p)) * N / std::log(N));
    }
    exp_dev = std::max(exp_dev, std::abs(fit_power_law(Ns, R).exponent + beta));
    const double lo = std::max(C[0], C[1]), hi = std::max(C[2], C[3]);
    c_ratio = std::max(c_ratio, hi / lo);
  }
  const double t = sw.seconds();
  report(3, "microscopic construction",
         residual < kRootResidual && k_violation <= 0 && exp_dev <= kExponentMicro && c_ratio <= kStableC && t < 30,
         fmt("root residual %.2e, K bound violation %.2e, |R exponent + beta| %.3f (<= %.1f), C upper/lower %.3f "
             "(<= %.2f), %.2f s",
             residual, k_violation, exp_dev, kExponentMicro, c_ratio, kStableC, t));
}

void g_norms() {
  const auto V = RadialPotential::square_well(1.0, 1.0);
  const std::vector<double> Ns{1 << 14, 1 << 16, 1 << 18, 1 << 20};
  double worst = 0;
  std::string detail;
  for (double beta : {0.5, 1.0}) {
    std::vector<MicroscopicPair> ps;
    for (double N : Ns) ps.push_back(build_microscopic(V, N, beta));
    const auto r = g_norm_report(ps);
    const double d1 = std::abs(r.l1.exponent + 1 + 2 * beta), d2 = std::abs(r.l2.exponent + 1 + beta);
    worst = std::max({worst, d1, d2});
    detail += fmt("beta=%g L1 %.3f L2 %.3f; ", beta, r.l1.exponent, r.l2.exponent);
  }
  report(4, "g_beta norm exponents", worst <= kExponentNorm,
         detail + fmt("N=2^14..2^20, max deviation %.3f (<= %.2f)", worst, kExponentNorm));
}

void smearing() {
  const auto W = RadialPotential::square_well(1.0, 1.0);
  const double beta = 1.0, beta1 = 0.5;
  const auto sm = make_smeared(make_scaled(Family::W_beta, W, 16.0, beta), beta1);
  double order = INFINITY;
  // Levels before the ~1e-8 floor set by the tabulated h.
  double prev = sm.h.laplacian_residual(800);
  for (int n : {1600, 3200}) {
    const double cur = sm.h.laplacian_residual(n);
    order = std::min(order, std::log2(prev / cur));
    prev = cur;
  }
  std::vector<double> Ns;
  for (int e = 12; e <= 28; e += 4) Ns.push_back(std::ldexp(1.0, e));
  const auto r = smeared_norm_report(W, Ns, beta, beta1);
  double outside = 0;
  for (const auto& row : r.rows) outside = std::max(outside, row.outside_max);
  const double dev = std::max({std::abs(r.linf.exponent + 1), std::abs(r.l1.exponent + 1 + 2 * beta1),
                               std::abs(r.l2.exponent + 1 + beta1), std::abs(r.grad_l2.exponent + 1),
                               std::abs(r.h0_l2.exponent + 1)});
  report(5, "smearing comparison", order >= kLaplacianOrder - kLaplacianOrderTol && outside <= kOutside && dev <= kExponentNorm,
         fmt("Laplacian order %.3f (>= 2 - %.2f), max |h| outside %.1e, norm exponents linf %.3f l1 %.3f l2 %.3f grad %.3f "
             "h0 %.3f, max deviation %.3f (<= %.2f)",
             order, kLaplacianOrderTol, outside, r.linf.exponent, r.l1.exponent, r.l2.exponent, r.grad_l2.exponent, r.h0_l2.exponent, dev,
             kExponentNorm));
}

void positivity() {
  const auto V = RadialPotential::square_well(1.0, 1.0);
  double lam = INFINITY;
  bool converged = true;
  for (double beta : {0.5, 1.0})
    for (double N : {2.0, 4.0, 8.0}) {
      const auto r = check_pair_positivity(build_microscopic(V, N, beta), 64);
      lam = std::min(lam, r.lambda_min);
      converged = converged && r.nonincreasing;
    }
  report(6, "pair positivity", lam >= kPositivity && converged,
         fmt("min eigenvalue %.3e (>= %.0e) over N in {2,4,8}, beta in {0.5,1}; refinement monotone %s", lam,
             kPositivity, converged ? "yes" : "no"));
}

double energy_drift(double dt, double T) {
  const Grid2D g(12.0, 48);
  GpState phi = make_gp_state(g, [](double x, double y) { return std::exp(-(x * x + y * y) / 2) * std::polar(1.0, 0.5 * x); });
  const GpParams params{2.0, dt};
  const double e0 = gp_energy(phi, harmonic(0.5), params);
  GpPropagator prop(g, harmonic(0.5), params);
  double drift = 0;
  const long steps = std::lround(T / dt), stride = steps / 20;
  for (long k = 0; k < steps; k += stride) {
    prop.advance(phi, stride);
    drift = std::max(drift, std::abs(gp_energy(phi, harmonic(0.5), params) - e0));
  }
  return drift;
}

void gp_propagator() {
  const Grid2D g(12.0, 48);
  GpState phi = make_gp_state(g, [](double x, double y) { return std::exp(-(x * x + y * y)) * cplx(1, x); });
  GpPropagator(g, harmonic(0.3), {5.0, 1e-3}).advance(phi, 10000);
  const double norm_drift = std::abs(phi.norm() - 1);

  const double d1 = energy_drift(0.02, 1.0), d2 = energy_drift(0.01, 1.0);
  const double ratio = d1 / d2;

  const Grid2D gc(10.0, 32);
  auto init = [](double x, double y) { return std::exp(-(x * x + 2 * y * y) / 2) * std::polar(1.0, 0.7 * x); };
  GpState a = make_gp_state(gc, init), b = make_gp_state(gc, init);
  const double c = 1.3;
  GpPropagator(gc, ExternalField::closed_form([c](double, double, double) { return c; }, {}, true), {2.0, 1e-2})
      .advance(a, 100);
  GpPropagator(gc, ExternalField::zero(), {2.0, 1e-2}).advance(b, 100);
  for (auto& z : b.field) z *= std::polar(1.0, -c);
  const double phase = max_diff(a.field, b.field);

  report(7, "GP propagator",
         norm_drift < kGpNorm && std::abs(ratio - kDriftRatio) <= kDriftRatioTol && phase < kPhase,
         fmt("norm drift %.2e over 1e4 steps (< %.0e), energy drift ratio %.3f (4 +- 0.5), constant-field phase %.2e",
             norm_drift, kGpNorm, ratio, phase));
}

void fewbody() {
  const auto kWell = [](double r) { return r < 1.2 ? 0.8 : 0.0; };
  const auto trap = ExternalField::closed_form([](double x, double y, double) { return 0.3 * (x * x + y * y + 0.3 * x); },
                                               {}, true);
  // Unitarity.
  const Lattice2D lat6(6, 6.0);
  const auto H = build_hamiltonian(lat6, 2, kWell, trap, 0.0);
  FewBodyState psi = random_symmetric_state(lat6, 2, 3);
  for (int k = 0; k < 1000; ++k) psi = propagate(psi, H, 0.01);
  const double unitarity = std::abs(psi.norm() - 1);

  // N = 1 spectrum against an independently assembled dense operator.
  const int m = 6;
  const double L = 7.0;
  const Lattice2D lat(m, L);
  const auto H1 = build_hamiltonian(lat, 1, std::function<double(double)>{}, trap, 0.0);
  const int d = m * m;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(d, d);
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q) {
      const double dx = (p % m - q % m) * L / m, dy = (p / m - q / m) * L / m;
      double s = 0;
      for (int i = -m / 2; i < m / 2; ++i)
        for (int j = -m / 2; j < m / 2; ++j) {
          const double kx = 2 * kPi * i / L, ky = 2 * kPi * j / L;
          s += (kx * kx + ky * ky) * std::cos(kx * dx + ky * dy);
        }
      T(p, q) = s / (m * m);
    }
  const auto A = trap.sample(lat.grid(), 0.0);
  for (int p = 0; p < d; ++p) T(p, p) += A[static_cast<std::size_t>(p)];
  const Eigen::VectorXd ref = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(T, Eigen::EigenvaluesOnly).eigenvalues();
  const double spectrum = (ref - H1.spectrum().values).cwiseAbs().maxCoeff();

  // Factorisation without interaction.
  const auto phi = make_gp_state(lat6.grid(), [](double x, double y) {
    return std::exp(-(x * x + y * y) / 2) * std::polar(1.0, 0.4 * x - 0.2 * y);
  });
  const auto F1 = build_hamiltonian(lat6, 1, std::function<double(double)>{}, trap, 0.0);
  const auto F2 = build_hamiltonian(lat6, 2, std::function<double(double)>{}, trap, 0.0);
  FewBodyState one = product_state(lat6, 1, phi.field), two = product_state(lat6, 2, phi.field);
  for (int k = 0; k < 20; ++k) {
    one = propagate(one, F1, 0.05);
    two = propagate(two, F2, 0.05);
  }
  std::vector<cplx> phi_t(one.amplitudes.size());
  for (std::size_t i = 0; i < phi_t.size(); ++i) phi_t[i] = one.amplitudes[i] / lat6.spacing();
  const double factor = max_diff(two.amplitudes, product_state(lat6, 2, phi_t).amplitudes);

  // m = 8, N = 2 run: build, 100 Krylov steps, diagnostics.
  Stopwatch sw;
  const Lattice2D lat8(8, 8.0);
  const auto H8 = build_hamiltonian(lat8, 2, kWell, trap, 0.0);
  const auto phi8 = make_gp_state(lat8.grid(), [](double x, double y) { return std::exp(-(x * x + y * y) / 2); });
  FewBodyState psi8 = product_state(lat8, 2, phi8.field);
  for (int k = 0; k < 100; ++k) psi8 = propagate(psi8, H8, 0.01);
  (void)gamma1(psi8);
  const double t8 = sw.seconds();

  report(8, "few-body propagator",
         unitarity < kUnitarity && spectrum < kSpectrum && factor < kFactor && t8 < 60,
         fmt("norm drift %.2e over 1e3 steps, N=1 spectrum %.2e, factorisation %.2e (all < 1e-10), m=8 N=2 run "
             "%.2f s (< 60 s)",
             unitarity, spectrum, factor, t8));
}

void algebra() {
  Stopwatch sw;
  const auto rep = operator_algebra_suite(100, 1000);
  std::size_t failed = 0;
  double worst = -INFINITY;
  for (const auto& c : rep.checks) {
    failed += !c.passed;
    worst = std::max(worst, c.deviation);
  }
  const double t = sw.seconds();
  report(9, "operator-algebra suite", rep.all_passed() && t < 120,
         fmt("%zu checks on 100 instances, %zu failed, largest deviation %.2e, %.1f s (< 120 s)", rep.checks.size(),
             failed, worst, t));
}

void derivative_identity() {
  const Lattice2D lat(6, 6.0);
  const auto Wb = make_scaled(Family::W_beta, RadialPotential::square_well(4.0, 2.0), 2.0, 0.5);
  const auto field = harmonic(0.25);
  const auto phi = make_gp_state(lat.grid(), [](double x, double y) {
    return std::exp(-(x * x + y * y) / 2) * std::polar(1.0, 0.4 * x);
  });
  const auto psi = random_symmetric_state(lat, 2, 5);
  const auto U = [&](double r) { return Wb(r); };
  const double b = 4 * kPi;
  const auto w2 = ddt_weight_identity(psi, phi, U, b, field, 2e-4, WeightFunction::m(2));
  const auto w1 = ddt_weight_identity(psi, phi, U, b, field, 1e-4, WeightFunction::m(2));
  const double order = std::log2(w2.residual / w1.residual);
  report(10, "derivative identity", w1.residual < kDdtResidual && std::abs(order - kDdtOrder) <= kDdtOrderTol,
         fmt("d/dt <m> = %.6e, residual %.2e at dt=1e-4 (< %.0e), observed order %.2f (2 +- %.1f)", w1.commutator,
             w1.residual, kDdtResidual, order, kDdtOrderTol));
}

void diagnostics() {
  const Lattice2D lat(4, 4.0);
  const auto phi = make_gp_state(lat.grid(), [](double x, double y) {
    return std::exp(-(x * x + 1.3 * y * y) / 3) * std::polar(1.0, 0.3 * x);
  });
  const CondensateProjector proj(lat, phi.field);
  double routes = 0;
  for (int N : {1, 2, 3})
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      FewBodyState s = product_state(lat, N, phi.field);
      const FewBodyState r = random_symmetric_state(lat, N, seed);
      const double lambda = 0.1 * static_cast<double>(seed);
      for (std::size_t i = 0; i < s.amplitudes.size(); ++i)
        s.amplitudes[i] = (1 - lambda) * s.amplitudes[i] + lambda * r.amplitudes[i];
      const double n = s.norm();
      for (auto& z : s.amplitudes) z /= n;
      const auto nums = number_expectations(s, proj);
      routes = std::max(routes, std::abs(nums.n2 - nums.n2_trace));
    }
  double excess = -INFINITY;
  for (int N : {1, 2, 3, 4, 10, 100, 1000, 100000})
    for (double xi : {0.1, 0.25, 0.4})
      excess = std::max(excess, weight_distance(WeightFunction::m(N, xi), WeightFunction::n(N)) - std::pow(N, -xi));
  report(11, "diagnostics consistency", routes < kN2Routes && excess <= 0,
         fmt("<n^2> route mismatch %.2e (< %.0e), max(||m - n|| - N^-xi) = %.2e (<= 0)", routes, kN2Routes, excess));
}

void compare_smoke(const std::filesystem::path& config) {
  auto c = ExperimentConfig::load(config);
  c.output = std::filesystem::temp_directory_path() / "gp2d_acceptance_compare";
  std::filesystem::remove_all(c.output);
  const auto m = run(c);
  bool ok = false;
  double worst = NAN;
  for (const auto& a : m.assertions)
    if (a.name == "gronwall_trend") {
      ok = a.passed;
      worst = a.value;
    }
  report(12, "compare Gronwall trend", ok && m.passed(),
         fmt("fitted C = %.4g, ln(alpha + eps) slope %.4g, max alpha^< / bound - 1 = %.3e (<= 1e-12), all run assertions %s",
             m.results.value("gronwall_C", NAN), m.results.value("alpha_growth_rate", NAN), worst, m.passed() ? "pass" : "fail"));
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path configs = argc > 1 ? argv[1] : GP2D_CONFIG_DIR;
  const std::vector<std::function<void()>> criteria{
      scattering_oracle, identity_I, microscopic, g_norms, smearing, positivity, gp_propagator,
      fewbody,           algebra,    derivative_identity, diagnostics,
      [&] { compare_smoke(configs / "compare.json"); }};
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      report(static_cast<int>(i + 1), "exception", false, e.what());
    }
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures ? 1 : 0;
}

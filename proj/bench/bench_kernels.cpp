// Serial reference vs OpenMP kernels: few-body matvec, GP pointwise phase,
// partial trace. Prints best-of-k wall times and the max deviation between
// the two paths.
//
//   bench_kernels [m] [N] [repeats]

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include "gp2d/fewbody_lattice.hpp"
#include "gp2d/kernels.hpp"

using namespace gp2d;
using kernels::Exec;

namespace {

template <class F>
double best_of(int repeats, F&& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

void report(const char* name, double serial, double parallel, double diff) {
  std::printf("%-22s serial %9.3f ms  parallel %9.3f ms  speedup %5.2f  max|diff| %.2e\n", name, 1e3 * serial,
              1e3 * parallel, serial / parallel, diff);
}

}  // namespace

int main(int argc, char** argv) {
  const int m = argc > 1 ? std::atoi(argv[1]) : 8;
  const int N = argc > 2 ? std::atoi(argv[2]) : 3;
  const int repeats = argc > 3 ? std::atoi(argv[3]) : 5;
  std::printf("threads %d, lattice %dx%d, N = %d\n", omp_get_max_threads(), m, m, N);

  const Lattice2D lat(m, m);
  const auto H = build_hamiltonian(
      lat, N, [](double r) { return r < 1.5 ? 1.0 : 0.0; },
      ExternalField::closed_form([](double x, double y, double) { return 0.1 * (x * x + y * y); }, {}, true), 0.0);
  const std::size_t dim = H.dimension();
  const int d = lat.dimension();

  std::mt19937_64 rng(42);
  std::normal_distribution<double> gauss;
  std::vector<cplx> psi(dim);
  for (auto& z : psi) z = {gauss(rng), gauss(rng)};

  std::vector<double> T(H.kinetic().data(), H.kinetic().data() + H.kinetic().size());
  std::vector<cplx> out_s(dim), out_p(dim);
  const double ts = best_of(repeats, [&] { kernels::apply_hamiltonian(psi, out_s, T, d, N, H.diagonal(), Exec::Serial); });
  const double tp =
      best_of(repeats, [&] { kernels::apply_hamiltonian(psi, out_p, T, d, N, H.diagonal(), Exec::Parallel); });
  report("apply_hamiltonian", ts, tp, max_diff(out_s, out_p));

  std::vector<cplx> gs(static_cast<std::size_t>(d) * d), gp(gs.size());
  const double rs = best_of(repeats, [&] { kernels::partial_trace_first(psi, d, gs, Exec::Serial); });
  const double rp = best_of(repeats, [&] { kernels::partial_trace_first(psi, d, gp, Exec::Parallel); });
  report("partial_trace_first", rs, rp, max_diff(gs, gp));

  const std::size_t n2 = 512 * 512;
  std::vector<cplx> field(n2);
  std::vector<double> A(n2);
  for (std::size_t i = 0; i < n2; ++i) {
    field[i] = {gauss(rng), gauss(rng)};
    A[i] = gauss(rng);
  }
  auto fs = field, fp = field;
  const double ps = best_of(repeats, [&] { fs = field; kernels::nonlinear_phase(fs, A, 0.7, 1e-3, Exec::Serial); });
  const double pp = best_of(repeats, [&] { fp = field; kernels::nonlinear_phase(fp, A, 0.7, 1e-3, Exec::Parallel); });
  report("nonlinear_phase 512^2", ps, pp, max_diff(fs, fp));
  return 0;
}

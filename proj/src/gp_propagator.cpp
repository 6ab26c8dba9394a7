#include "gp2d/gp_propagator.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "gp2d/errors.hpp"

namespace gp2d {
namespace {

std::shared_ptr<Fft2D> shared_fft(int n) {
  static std::mutex m;
  static std::map<int, std::shared_ptr<Fft2D>> cache;
  std::lock_guard lock(m);
  auto& slot = cache[n];
  if (!slot) slot = std::make_shared<Fft2D>(n);
  return slot;
}

double sum_norm2(const std::vector<cplx>& v) {
  double s = 0;
  for (const auto& z : v) s += std::norm(z);
  return s;
}

void normalise(GpState& s) {
  const double nrm = s.norm();
  if (!(nrm > 0)) throw PreconditionError("GpState: cannot normalise a zero field");
  for (auto& z : s.field) z /= nrm;
}

}  // namespace

double GpState::norm() const { return std::sqrt(sum_norm2(field) * grid.cell()); }

double GpState::peak_density() const {
  double m = 0;
  for (const auto& z : field) m = std::max(m, std::norm(z));
  return m;
}

GpState make_gp_state(const Grid2D& grid, const std::function<cplx(double, double)>& phi, bool normalise_field) {
  GpState s{grid, std::vector<cplx>(grid.size()), 0.0};
  const int n = grid.points();
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix)
      s.field[static_cast<std::size_t>(iy) * n + ix] = phi(grid.coordinate(ix), grid.coordinate(iy));
  if (normalise_field) normalise(s);
  return s;
}

GpPropagator::GpPropagator(const Grid2D& grid, ExternalField field, GpParams params, kernels::Exec exec)
    : grid_(grid), field_(std::move(field)), params_(params), exec_(exec), fft_(shared_fft(grid.points())) {
  if (!(params_.coupling >= 0)) throw PreconditionError("GpParams: coupling must be nonnegative");
  if (params_.dt == 0 || !std::isfinite(params_.dt)) throw PreconditionError("GpParams: dt must be finite and nonzero");
  const auto k2 = laplacian_symbol(grid_);
  const double inv = 1.0 / static_cast<double>(grid_.size());
  kinetic_.resize(k2.size());
  for (std::size_t k = 0; k < k2.size(); ++k) kinetic_[k] = std::polar(inv, -params_.dt * k2[k]);
  if (field_.is_static()) A_cache_ = field_.sample(grid_, 0.0);
}

void GpPropagator::half_phase(GpState& state, double t) {
  if (!field_.is_static()) A_cache_ = field_.sample(grid_, t);
  kernels::nonlinear_phase(state.field, A_cache_, params_.coupling, 0.5 * params_.dt, exec_);
}

void GpPropagator::advance(GpState& state, long steps) {
  if (!(state.grid == grid_)) throw PreconditionError("GpPropagator: state lives on a different grid");
  const bool monitor = field_.is_static() && steps > 0;
  const double e0 = monitor ? gp_energy(state, field_, params_) : 0.0;
  for (long s = 0; s < steps; ++s) {
    half_phase(state, state.t);
    fft_->forward(state.field);
    kernels::multiply(state.field, kinetic_, exec_);
    fft_->backward(state.field);
    half_phase(state, state.t + params_.dt);
    state.t += params_.dt;
  }
  if (monitor) {
    const double e1 = gp_energy(state, field_, params_);
    const double drift = std::abs(e1 - e0) / std::max(1.0, std::abs(e0));
    if (drift > drift_tolerance) {
      std::ostringstream msg;
      msg << "energy drift " << drift << " over " << steps << " steps of dt=" << params_.dt
          << " exceeds " << drift_tolerance << "; reduce dt";
      warnings_.push_back({state.t, msg.str()});
    }
  }
}

GpState step(const GpState& state, const ExternalField& field, const GpParams& params) {
  GpState out = state;
  GpPropagator(state.grid, field, params).advance(out, 1);
  return out;
}

double gp_energy(const GpState& state, const ExternalField& field, const GpParams& params) {
  const Grid2D& g = state.grid;
  std::vector<cplx> hat = state.field;
  shared_fft(g.points())->forward(hat);
  const auto k2 = laplacian_symbol(g);
  double kin = 0;
  for (std::size_t k = 0; k < hat.size(); ++k) kin += k2[k] * std::norm(hat[k]);
  kin *= g.cell() / static_cast<double>(g.size());
  const auto A = field.sample(g, state.t);
  double pot = 0;
  for (std::size_t k = 0; k < state.field.size(); ++k) {
    const double rho = std::norm(state.field[k]);
    pot += (A[k] + 0.5 * params.coupling * rho) * rho;
  }
  return kin + pot * g.cell();
}

double field_power(const GpState& state, const ExternalField& field) {
  const auto Ad = field.sample_dot(state.grid, state.t);
  double s = 0;
  for (std::size_t k = 0; k < Ad.size(); ++k) s += Ad[k] * std::norm(state.field[k]);
  return s * state.grid.cell();
}

double spectral_tail_fraction(const GpState& state) {
  const Grid2D& g = state.grid;
  std::vector<cplx> hat = state.field;
  shared_fft(g.points())->forward(hat);
  const int n = g.points();
  const double cut = (2.0 / 3.0) * (n / 2);
  double tail = 0, total = 0;
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const int kx = ix < n / 2 ? ix : n - ix, ky = iy < n / 2 ? iy : n - iy;
      const double w = std::norm(hat[static_cast<std::size_t>(iy) * n + ix]);
      total += w;
      if (kx > cut || ky > cut) tail += w;
    }
  return total > 0 ? tail / total : 0.0;
}

GpState ground_state(const ExternalField& field, double t, const GpParams& params, const GpState& seed,
                     const GroundStateOptions& options) {
  const Grid2D& g = seed.grid;
  auto fft = shared_fft(g.points());
  const auto k2 = laplacian_symbol(g);
  const auto A = field.sample(g, t);
  const ExternalField frozen = ExternalField::static_samples(g, A);
  GpState cur = seed;
  cur.t = t;
  normalise(cur);
  double dtau = options.dtau;
  double energy = gp_energy(cur, frozen, params);
  std::vector<double> decay(k2.size());
  auto rebuild = [&] {
    for (std::size_t k = 0; k < k2.size(); ++k) decay[k] = std::exp(-dtau * k2[k]) / static_cast<double>(g.size());
  };
  rebuild();
  int refinements_left = options.refinements;
  int reductions = 0;
  for (long it = 0; it < options.max_iterations; ++it) {
    GpState next = cur;
    kernels::nonlinear_decay(next.field, A, params.coupling, 0.5 * dtau, kernels::Exec::Serial);
    fft->forward(next.field);
    for (std::size_t k = 0; k < decay.size(); ++k) next.field[k] *= decay[k];
    fft->backward(next.field);
    kernels::nonlinear_decay(next.field, A, params.coupling, 0.5 * dtau, kernels::Exec::Serial);
    normalise(next);
    const double e_next = gp_energy(next, frozen, params);
    if (e_next > energy + 1e-13 * std::max(1.0, std::abs(energy))) {
      if (++reductions > 30) {
        std::ostringstream msg;
        msg << "ground_state: energy increases at dtau=" << dtau << " (E=" << energy << " -> " << e_next << ")";
        throw ConvergenceError(msg.str());
      }
      dtau *= 0.5;
      rebuild();
      continue;
    }
    const double change = energy - e_next;
    cur = std::move(next);
    energy = e_next;
    if (change < options.tolerance) {
      if (refinements_left-- <= 0) return cur;
      dtau *= 0.25;
      rebuild();
    }
  }
  throw ConvergenceError("ground_state: iteration limit reached");
}

}  // namespace gp2d

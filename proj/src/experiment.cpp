#include "gp2d/experiment.hpp"

#include <fftw3.h>
#include <omp.h>

#include <Eigen/Core>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <type_traits>

#include "gp2d/condensate_diagnostics.hpp"
#include "gp2d/fewbody_lattice.hpp"
#include "gp2d/gp_propagator.hpp"
#include "gp2d/io.hpp"
#include "gp2d/potential_models.hpp"
#include "gp2d/radial_scattering.hpp"

namespace gp2d {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;
constexpr const char* kVersion = "0.1.0";

const std::set<std::string> kScenarios{"scattering", "microscopic", "smearing", "gp", "fewbody", "compare"};

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  bool has(const std::string& k) const { return j_.contains(k); }
  void skip(const std::string& k) { seen_.insert(k); }

  template <class T>
  void get(const std::string& k, T& out) {
    seen_.insert(k);
    if (!j_.contains(k)) return;
    const json& v = j_.at(k);
    if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0))
        throw ConfigError(key(k), "expected a nonnegative integer");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(key(k), "expected an integer");
    }
    try {
      out = v.get<T>();
    } catch (const json::exception&) {
      throw ConfigError(key(k), "wrong type (" + std::string(j_.at(k).type_name()) + ")");
    }
  }

  // Number or array of numbers.
  void get_list(const std::string& k, std::vector<double>& out) {
    seen_.insert(k);
    if (!j_.contains(k)) return;
    const json& v = j_.at(k);
    if (v.is_number()) {
      out = {v.get<double>()};
      return;
    }
    if (!v.is_array()) throw ConfigError(key(k), "expected a number or an array of numbers");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(key(k) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
  }

  Reader child(const std::string& k) {
    seen_.insert(k);
    static const json empty = json::object();
    return Reader(j_.contains(k) ? j_.at(k) : empty, key(k));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(key(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& path, const std::string& message) {
  if (!ok) throw ConfigError(path, message);
}

std::string indexed(const std::string& k, std::size_t i) { return k + "[" + std::to_string(i) + "]"; }

// Module preconditions raised during a run are reported against the
// parameter that fed them.
template <class F>
auto at_path(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const PreconditionError& e) {
    throw ConfigError(path, e.what());
  } catch (const ResolutionError& e) {
    throw ConfigError(path, e.what());
  } catch (const SizeError& e) {
    throw ConfigError(path, e.what());
  }
}

// Runs body(i) for i in [0, n) across threads; the first exception by index
// is rethrown so failures are deterministic.
template <class F>
void parallel_sweep(std::size_t n, F&& body) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

RadialPotential PotentialSpec::build() const {
  if (type == "table") return RadialPotential::load_table(table);
  return RadialPotential::square_well(height, radius);
}

ExternalField FieldSpec::build() const {
  if (type == "zero") return ExternalField::zero();
  const double c = strength;
  if (type == "constant")
    return ExternalField::closed_form([c](double, double, double) { return c; },
                                      [](double, double, double) { return 0.0; }, true);
  const double e = drive, w = frequency;
  if (is_static())
    return ExternalField::closed_form([c](double x, double y, double) { return c * (x * x + y * y); },
                                      [](double, double, double) { return 0.0; }, true);
  return ExternalField::closed_form(
      [c, e, w](double x, double y, double t) { return c * (1 + e * std::sin(w * t)) * (x * x + y * y); },
      [c, e, w](double x, double y, double t) { return c * e * w * std::cos(w * t) * (x * x + y * y); }, false);
}

long TimeSpec::steps() const { return std::lround(t_end / dt); }

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  Reader r(j, "");
  r.get("scenario", c.scenario);
  require(kScenarios.count(c.scenario), "scenario",
          "must be one of scattering, microscopic, smearing, gp, fewbody, compare");
  {
    Reader p = r.child("potential");
    p.get("type", c.potential.type);
    p.get("height", c.potential.height);
    p.get("radius", c.potential.radius);
    p.get("table", c.potential.table);
    p.finish();
    require(c.potential.type == "square_well" || c.potential.type == "table", "potential.type",
            "must be square_well or table");
    if (c.potential.type == "table") {
      require(!c.potential.table.empty(), "potential.table", "path required for type table");
      require(fs::exists(c.potential.table), "potential.table", "file not found: " + c.potential.table);
    } else {
      require(c.potential.height >= 0 && std::isfinite(c.potential.height), "potential.height",
              "must be finite and nonnegative");
      require(c.potential.radius > 0 && std::isfinite(c.potential.radius), "potential.radius",
              "must be positive");
    }
  }
  r.get_list("N", c.N);
  r.get_list("beta", c.beta);
  r.get("beta1", c.beta1);
  r.get("xi", c.xi);
  r.get("s", c.s);
  r.get_list("R", c.R);
  r.get("particles", c.particles);
  r.get("interaction", c.interaction);
  if (r.has("coupling") && !j.at("coupling").is_null()) {
    double b = 0;
    r.get("coupling", b);
    c.coupling = b;
  }
  {
    Reader g = r.child("grid");
    g.get("L", c.grid_L);
    g.get("n", c.grid_n);
    g.finish();
  }
  {
    Reader l = r.child("lattice");
    l.get("m", c.lattice_m);
    l.get("L", c.lattice_L);
    l.finish();
  }
  {
    Reader f = r.child("field");
    f.get("type", c.field.type);
    f.get("strength", c.field.strength);
    f.get("drive", c.field.drive);
    f.get("frequency", c.field.frequency);
    f.finish();
  }
  {
    Reader i = r.child("initial");
    i.get("type", c.initial.type);
    i.get("width", c.initial.width);
    i.get("x0", c.initial.x0);
    i.get("y0", c.initial.y0);
    i.get("kx", c.initial.kx);
    i.get("ky", c.initial.ky);
    i.finish();
  }
  {
    Reader t = r.child("time");
    t.get("t_end", c.time.t_end);
    t.get("dt", c.time.dt);
    t.get("gp_substeps", c.time.gp_substeps);
    t.get("samples", c.time.samples);
    t.finish();
  }
  r.get("positivity_resolution", c.positivity_resolution);
  r.get("points_per_decade", c.points_per_decade);
  r.get("epsilon", c.epsilon);
  r.get("propagation", c.propagation);
  std::string out = c.output.string();
  r.get("output", out);
  c.output = out;
  if (r.has("seed") && !j.at("seed").is_null()) {
    std::uint64_t s = 0;
    r.get("seed", s);
    c.seed = s;
  }
  r.skip("coupling");
  r.skip("seed");
  r.finish();

  // Shared ranges.
  require(c.xi > 0 && c.xi < 0.5, "xi", "must lie in (0, 1/2)");
  require(!c.beta.empty(), "beta", "at least one value required");
  for (std::size_t i = 0; i < c.beta.size(); ++i)
    require(c.beta[i] > 0 && std::isfinite(c.beta[i]), indexed("beta", i), "must be positive");
  require(c.s > 0, "s", "must be positive");
  require(c.epsilon > 0, "epsilon", "must be positive");
  require(c.propagation == "auto" || c.propagation == "krylov" || c.propagation == "dense", "propagation",
          "must be auto, krylov or dense");
  require(c.points_per_decade >= 8, "points_per_decade", "must be at least 8");
  require(c.positivity_resolution >= 0, "positivity_resolution", "must be nonnegative");
  require(c.field.type == "zero" || c.field.type == "constant" || c.field.type == "harmonic", "field.type",
          "must be zero, constant or harmonic");
  require(std::isfinite(c.field.strength), "field.strength", "must be finite");
  require(c.field.type != "harmonic" || c.field.strength >= 0, "field.strength",
          "harmonic trap strength must be nonnegative");

  const std::string& sc = c.scenario;
  const double support = c.potential.type == "square_well" ? c.potential.radius : 0.0;
  const bool radial = sc == "scattering" || sc == "microscopic" || sc == "smearing";
  if (radial) {
    require(c.potential.type == "table" || c.potential.height > 0, "potential.height",
            "must be positive for radial scenarios (V = 0 has no scattering length)");
    require(!c.N.empty(), "N", "at least one value required");
    for (std::size_t i = 0; i < c.N.size(); ++i) {
      const double N = c.N[i];
      require(N >= 2 && std::isfinite(N), indexed("N", i), "must be at least 2");
      if (sc != "smearing") {
        require(2 * N < 700, indexed("N", i), "e^-N scales are not representable in double precision");
        for (std::size_t b = 0; b < c.beta.size(); ++b)
          require(support == 0 || std::pow(N, -c.beta[b]) > std::exp(-N) * support, indexed("N", i),
                  "N^-beta must exceed the scaled support e^-N * radius for beta=" + std::to_string(c.beta[b]));
      } else {
        for (std::size_t b = 0; b < c.beta.size(); ++b)
          require(c.beta1 >= c.beta[b] || support == 0 || std::pow(N, -c.beta1) > std::pow(N, -c.beta[b]) * support,
                  indexed("N", i), "smearing radius N^-beta1 must exceed the support of W_beta");
      }
    }
  }
  if (sc == "scattering") {
    require(!c.R.empty(), "R", "at least one radius required");
    for (std::size_t i = 0; i < c.R.size(); ++i)
      require(c.R[i] >= support && c.R[i] > 0, indexed("R", i), "must be at least the potential support");
  }
  if (sc == "microscopic" || sc == "smearing")
    require(c.N.size() >= 4, "N", "scaling fits need at least 4 values");
  if (sc == "smearing") {
    for (std::size_t b = 0; b < c.beta.size(); ++b)
      require(c.beta1 >= 0 && c.beta1 <= c.beta[b], "beta1", "must satisfy 0 <= beta1 <= beta");
  }

  const bool dynamic = sc == "gp" || sc == "fewbody" || sc == "compare";
  if (dynamic) {
    require(c.time.dt > 0 && std::isfinite(c.time.dt), "time.dt", "must be positive");
    require(c.time.t_end > 0 && std::isfinite(c.time.t_end), "time.t_end", "must be positive");
    const long steps = c.time.steps();
    require(steps >= 1 && std::abs(steps * c.time.dt - c.time.t_end) <= 1e-9 * c.time.t_end, "time.dt",
            "must divide time.t_end");
    require(c.time.samples >= 1 && steps % c.time.samples == 0, "time.samples",
            "must divide the step count " + std::to_string(steps));
    require(c.time.gp_substeps >= 1, "time.gp_substeps", "must be at least 1");
    require(c.initial.type == "gaussian" || c.initial.type == "ground_state" || c.initial.type == "random",
            "initial.type", "must be gaussian, ground_state or random");
    require(c.initial.width > 0, "initial.width", "must be positive");
    require(c.interaction == "none" || c.interaction == "W_beta" || c.interaction == "V_N", "interaction",
            "must be none, W_beta or V_N");
    require(!c.coupling || *c.coupling >= 0, "coupling", "must be nonnegative");
  }
  if (sc == "gp") {
    require(c.grid_L > 0, "grid.L", "must be positive");
    require(c.grid_n >= 4, "grid.n", "must be at least 4");
    require(c.initial.type != "random", "initial.type", "random initial data is few-body only");
  }
  if (sc == "fewbody" || sc == "compare") {
    require(c.particles >= 1 && c.particles <= 4, "particles", "must lie in 1..4");
    require(c.lattice_L > 0, "lattice.L", "must be positive");
    require(c.lattice_m >= 2, "lattice.m", "must be at least 2");
    require(sc == "fewbody" || c.initial.type != "random", "initial.type",
            "compare needs product initial data (gaussian or ground_state)");
    at_path("lattice.m", [&] { return hilbert_dimension(Lattice2D(c.lattice_m, c.lattice_L), c.particles); });
    if (c.interaction == "V_N") {
      require(c.particles >= 2, "particles", "V_N needs at least 2 particles");
      require(2 * c.particles * c.s <= 700, "s", "e^(2 N s) overflows");
      if (sc == "compare")
        require(support == 0 || std::pow(c.particles, -c.beta[0]) > std::exp(-c.particles) * support, "beta",
                "N^-beta must exceed e^-N * radius for the microscopic pair");
    }
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", e.what());
  }
  return from_json(j);
}

json ExperimentConfig::canonical() const {
  json j;
  j["scenario"] = scenario;
  j["potential"] = {{"type", potential.type}, {"height", potential.height}, {"radius", potential.radius},
                    {"table", potential.table}};
  j["N"] = N;
  j["beta"] = beta;
  j["beta1"] = beta1;
  j["xi"] = xi;
  j["s"] = s;
  j["R"] = R;
  j["particles"] = particles;
  j["interaction"] = interaction;
  j["coupling"] = coupling ? json(*coupling) : json(nullptr);
  j["grid"] = {{"L", grid_L}, {"n", grid_n}};
  j["lattice"] = {{"m", lattice_m}, {"L", lattice_L}};
  j["field"] = {{"type", field.type}, {"strength", field.strength}, {"drive", field.drive},
                {"frequency", field.frequency}};
  j["initial"] = {{"type", initial.type}, {"width", initial.width}, {"x0", initial.x0}, {"y0", initial.y0},
                  {"kx", initial.kx},     {"ky", initial.ky}};
  j["time"] = {{"t_end", time.t_end}, {"dt", time.dt}, {"gp_substeps", time.gp_substeps}, {"samples", time.samples}};
  j["positivity_resolution"] = positivity_resolution;
  j["points_per_decade"] = points_per_decade;
  j["epsilon"] = epsilon;
  j["propagation"] = propagation;
  j["seed"] = seed ? json(*seed) : json(nullptr);
  return j;
}

std::uint64_t ExperimentConfig::hash() const { return io::fnv1a(canonical().dump()); }

bool RunManifest::passed() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed; });
}

json RunManifest::json() const {
  nlohmann::json j;
  j["scenario"] = scenario;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["versions"] = versions;
  j["wall_clock_seconds"] = wall_clock_seconds;
  j["started"] = started;
  j["passed"] = passed();
  auto& arts = j["artifacts"] = nlohmann::json::array();
  for (const auto& a : artifacts) arts.push_back({{"path", a.path}, {"kind", a.kind}, {"step", a.step}, {"rows", a.rows}});
  auto& as = j["assertions"] = nlohmann::json::array();
  for (const auto& a : assertions)
    as.push_back({{"name", a.name}, {"value", a.value}, {"tolerance", a.tolerance}, {"passed", a.passed}});
  j["results"] = results;
  return j;
}

namespace {

struct Output {
  fs::path dir;
  RunManifest& manifest;

  void csv(const std::string& name, const io::CsvTable& t, const std::string& step) {
    t.write(dir / name);
    manifest.artifacts.push_back({name, "csv", step, t.rows()});
  }
  void json_file(const std::string& name, const json& j, const std::string& step) {
    io::write_json(dir / name, j);
    manifest.artifacts.push_back({name, "json", step, 0});
  }
  void checkpoint(const std::string& stem, std::span<const cplx> data, json meta, const std::string& step) {
    io::write_checkpoint(dir / stem, data, std::move(meta));
    manifest.artifacts.push_back({stem + ".bin", "checkpoint", step, data.size()});
    manifest.artifacts.push_back({stem + ".json", "json", step, 0});
  }
  // Passes when value <= tolerance; NaN fails.
  void check(const std::string& name, double value, double tolerance) {
    manifest.assertions.push_back({name, value, tolerance, value <= tolerance});
  }
};

json fit_to_json(const PowerLawFit& f, double expected) {
  return {{"exponent", f.exponent}, {"stderr", f.stderr_exponent}, {"log_power", f.log_power},
          {"expected", expected},   {"deviation", std::abs(f.exponent - expected)}};
}

std::string beta_tag(double beta) {
  std::ostringstream s;
  s << "[beta=" << beta << "]";
  return s.str();
}

double K_lower_bound(const MicroscopicPair& p) {
  return 1 + std::log(p.inner_radius / p.R_beta) / (p.N + std::log(p.R_beta / p.scattering_length));
}

std::vector<std::pair<double, double>> beta_N_grid(const ExperimentConfig& c) {
  std::vector<std::pair<double, double>> out;
  for (double b : c.beta)
    for (double N : c.N) out.emplace_back(b, N);
  return out;
}

std::string grid_path(const ExperimentConfig& c, std::size_t k) {
  const std::size_t nb = k / c.N.size(), nN = k % c.N.size();
  return c.beta.size() > 1 ? indexed("N", nN) + "@" + indexed("beta", nb) : indexed("N", nN);
}

void run_scattering(const ExperimentConfig& c, Output& out) {
  const RadialPotential V = c.potential.build();
  io::CsvTable byR({"R", "a", "I", "I_predicted", "relative_error"});
  double identity_err = 0, a_min = INFINITY, a_max = 0;
  for (std::size_t i = 0; i < c.R.size(); ++i) {
    const auto sol = at_path(indexed("R", i), [&] { return solve_zero_energy(V, c.R[i]); });
    const double a = sol.scattering_length;
    const double pred = 4 * kPi / std::log(c.R[i] / a);
    const double rel = std::abs(sol.integral_I - pred) / pred;
    identity_err = std::max(identity_err, rel);
    a_min = std::min(a_min, a);
    a_max = std::max(a_max, a);
    byR.add_row({c.R[i], a, sol.integral_I, pred, rel});
  }
  out.csv("scattering_R.csv", byR, "unscaled");
  out.check("identity_I_relative", identity_err, 1e-8);
  if (c.R.size() > 1) out.check("a_R_independence", (a_max - a_min) / a_max, 1e-6);

  const auto grid = beta_N_grid(c);
  std::vector<std::vector<double>> rows(grid.size());
  parallel_sweep(grid.size(), [&](std::size_t k) {
    const auto [beta, N] = grid[k];
    at_path(grid_path(c, k), [&] {
      const MicroscopicPair p = build_microscopic(V, N, beta);
      const ScaledIdentity id = scaled_scattering_identity(V, N, p.R_beta);
      rows[k] = {N, beta, p.scattering_length, id.value, id.predicted, id.relative_error, p.R_beta, p.K_beta,
                 K_lower_bound(p), coupling_deviation(p)};
    });
  });
  io::CsvTable t({"N", "beta", "a", "I", "I_predicted", "relative_error", "R_beta", "K_beta", "K_lower", "deviation"});
  double scaled_err = 0, k_violation = 0;
  for (auto& r : rows) {
    scaled_err = std::max(scaled_err, r[5]);
    k_violation = std::max({k_violation, r[7] - 1, r[8] - r[7]});
    t.add_row(std::move(r));
  }
  out.csv("scattering.csv", t, "sweep");
  out.check("scaled_identity_relative", scaled_err, 1e-8);
  out.check("K_beta_bounds", k_violation, 1e-12);
}

void run_microscopic(const ExperimentConfig& c, Output& out) {
  const RadialPotential V = c.potential.build();
  const auto grid = beta_N_grid(c);
  std::vector<MicroscopicPair> pairs(grid.size());
  std::vector<double> lambda(grid.size(), 0.0);
  parallel_sweep(grid.size(), [&](std::size_t k) {
    at_path(grid_path(c, k), [&] {
      pairs[k] = build_microscopic(V, grid[k].second, grid[k].first);
      if (c.positivity_resolution > 0)
        lambda[k] = check_pair_positivity(pairs[k], c.positivity_resolution).lambda_min;
    });
  });

  std::vector<std::string> cols{"N",         "beta",       "R_beta",    "K_beta", "K_lower", "root_residual",
                                "m_coupling", "deviation", "deviation_scaled", "g_l1", "g_l2", "g_linf"};
  if (c.positivity_resolution > 0) cols.push_back("lambda_min");
  io::CsvTable t(cols);
  double residual = 0, k_violation = 0, lambda_min = INFINITY;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& p = pairs[k];
    const double dev = coupling_deviation(p);
    std::vector<double> row{p.N,
                            p.beta,
                            p.R_beta,
                            p.K_beta,
                            K_lower_bound(p),
                            p.root_residual,
                            p.m_coupling,
                            dev,
                            std::abs(dev) * p.N / std::log(p.N),
                            p.g_norms.l1,
                            p.g_norms.l2,
                            p.g_norms.linf};
    if (c.positivity_resolution > 0) {
      row.push_back(lambda[k]);
      lambda_min = std::min(lambda_min, lambda[k]);
    }
    residual = std::max(residual, std::abs(p.root_residual));
    k_violation = std::max({k_violation, p.K_beta - 1, K_lower_bound(p) - p.K_beta});
    t.add_row(std::move(row));
  }
  out.csv("microscopic.csv", t, "sweep");
  out.check("root_residual", residual, 1e-10);
  out.check("K_beta_bounds", k_violation, 1e-12);
  if (c.positivity_resolution > 0) out.check("positivity_lambda_min", -lambda_min, 1e-6);

  json fits = json::array();
  for (std::size_t b = 0; b < c.beta.size(); ++b) {
    const double beta = c.beta[b];
    const std::span<const MicroscopicPair> slice(pairs.data() + b * c.N.size(), c.N.size());
    std::vector<double> Ns, Rs, scaled;
    for (const auto& p : slice) {
      Ns.push_back(p.N);
      Rs.push_back(p.R_beta);
      scaled.push_back(std::abs(coupling_deviation(p)) * p.N / std::log(p.N));
    }
    const PowerLawFit rfit = fit_power_law(Ns, Rs);
    const GNormReport g = g_norm_report(slice);
    // C with |deviation| <= C ln N / N: the worst ratio over the sweep; stable
    // when the upper half of N does not exceed the lower half.
    const std::size_t half = scaled.size() / 2;
    const double lower = *std::max_element(scaled.begin(), scaled.begin() + static_cast<long>(half));
    const double upper = *std::max_element(scaled.begin() + static_cast<long>(half), scaled.end());
    fits.push_back({{"beta", beta},
                    {"R_beta", fit_to_json(rfit, -beta)},
                    {"g_l1", fit_to_json(g.l1, -1 - 2 * beta)},
                    {"g_l2", fit_to_json(g.l2, -1 - beta)},
                    {"g_linf_max", g.max_linf},
                    {"coupling_constant", std::max(lower, upper)},
                    {"coupling_constant_upper_half", upper},
                    {"coupling_constant_lower_half", lower}});
    const std::string tag = beta_tag(beta);
    out.check("R_beta_exponent" + tag, std::abs(rfit.exponent + beta), 0.1);
    out.check("coupling_constant_stable" + tag, upper - 1.05 * lower, 0.0);
    out.check("g_linf_bounded" + tag, g.max_linf - 1, 1e-12);
  }
  out.json_file("microscopic_fits.json", fits, "fits");
  out.manifest.results["fits"] = fits;
}

void run_smearing(const ExperimentConfig& c, Output& out) {
  const RadialPotential W = c.potential.build();
  json fits = json::array();
  std::vector<SmearedNormReport> reports(c.beta.size());
  parallel_sweep(c.beta.size(), [&](std::size_t b) {
    reports[b] = at_path(indexed("beta", b), [&] { return smeared_norm_report(W, c.N, c.beta[b], c.beta1); });
  });
  io::CsvTable t({"N", "beta", "beta1", "h_linf", "h_l1", "h_l2", "grad_h_l2", "h0_l2", "gradient_constant",
                  "total_charge", "outside_max"});
  double outside = 0, charge = 0;
  for (std::size_t b = 0; b < c.beta.size(); ++b) {
    const auto& rep = reports[b];
    for (const auto& row : rep.rows) {
      t.add_row({row.N, rep.beta, rep.beta1, row.norms.linf, row.norms.l1, row.norms.l2, row.norms.grad_l2,
                 row.h0_l2, row.gradient_constant, row.total_charge, row.outside_max});
      outside = std::max(outside, row.outside_max);
      charge = std::max(charge, std::abs(row.total_charge));
    }
    const double b1 = rep.beta1;
    json f = {{"beta", rep.beta},
              {"beta1", b1},
              {"h_linf", fit_to_json(rep.linf, -1)},
              {"h_l1", fit_to_json(rep.l1, -1 - 2 * b1)},
              {"h_l2", fit_to_json(rep.l2, -1 - b1)},
              {"grad_h_l2", fit_to_json(rep.grad_l2, -1)},
              {"h0_l2", fit_to_json(rep.h0_l2, -1)},
              {"gradient_constant", fit_to_json(rep.gradient_constant, 0)}};
    fits.push_back(f);
    const std::string tag = beta_tag(rep.beta);
    for (const char* k : {"h_linf", "h_l1", "h_l2", "grad_h_l2", "h0_l2"})
      out.check(std::string(k) + "_exponent" + tag, f[k]["deviation"].get<double>(), 0.15);
  }
  out.csv("smearing.csv", t, "sweep");
  out.json_file("smearing_fits.json", fits, "fits");
  out.check("h_outside_support", outside, 1e-10);
  out.check("total_charge", charge, 1e-12);
  out.manifest.results["fits"] = fits;
}

cplx gaussian(const InitialSpec& s, double x, double y) {
  const double dx = x - s.x0, dy = y - s.y0;
  return std::exp(-(dx * dx + dy * dy) / (2 * s.width * s.width)) * std::polar(1.0, s.kx * x + s.ky * y);
}

GpState initial_gp(const ExperimentConfig& c, const Grid2D& grid, const ExternalField& field, double b) {
  GpState g = make_gp_state(grid, [&](double x, double y) { return gaussian(c.initial, x, y); });
  if (c.initial.type == "ground_state") g = ground_state(field, 0.0, {b, c.time.dt}, g);
  return g;
}

// b_U = N ||W_beta||_1 in the continuum for GP-only runs.
double continuum_coupling(const ExperimentConfig& c) {
  if (c.coupling) return *c.coupling;
  if (c.interaction == "none") return 0;
  if (c.interaction == "V_N") return 4 * kPi;
  return c.potential.build().l1_norm();
}

void run_gp(const ExperimentConfig& c, Output& out) {
  const Grid2D grid = at_path("grid.n", [&] { return Grid2D(c.grid_L, c.grid_n); });
  const ExternalField field = c.field.build();
  const double b = continuum_coupling(c);
  GpState phi = at_path("initial", [&] { return initial_gp(c, grid, field, b); });
  phi.t = 0;
  GpPropagator prop(grid, field, {b, c.time.dt});
  io::CsvTable t({"t", "norm", "energy", "peak_density", "tail_fraction"});
  auto sample = [&] {
    t.add_row({phi.t, phi.norm(), gp_energy(phi, field, {b, c.time.dt}), phi.peak_density(),
               spectral_tail_fraction(phi)});
  };
  sample();
  const double norm0 = phi.norm(), e0 = gp_energy(phi, field, {b, c.time.dt});
  for (int s = 0; s < c.time.samples; ++s) {
    prop.advance(phi, c.time.steps_per_sample());
    sample();
  }
  out.csv("gp.csv", t, "trajectory");
  out.checkpoint("gp_final", phi.field,
                 {{"kind", "gp"}, {"L", grid.length()}, {"n", grid.points()}, {"t", phi.t}, {"coupling", b},
                  {"dt", c.time.dt}},
                 "final");
  out.check("norm_drift", std::abs(phi.norm() - norm0), 1e-10);
  if (field.is_static()) {
    const double drift = std::abs(gp_energy(phi, field, {b, c.time.dt}) - e0) / std::max(1.0, std::abs(e0));
    out.check("energy_drift_relative", drift, 1e-6);
  }
  json warn = json::array();
  for (const auto& w : prop.warnings()) warn.push_back({{"t", w.t}, {"message", w.message}});
  out.manifest.results["coupling"] = b;
  out.manifest.results["warnings"] = warn;
}

struct FewBodySetup {
  Lattice2D lattice;
  std::optional<ScaledPotential> U;
  std::optional<MicroscopicPair> pair;
  ExternalField field;
  PropagationOptions options;
  double b = 0;
};

FewBodySetup fewbody_setup(const ExperimentConfig& c) {
  FewBodySetup s{Lattice2D(c.lattice_m, c.lattice_L), std::nullopt, std::nullopt, c.field.build(), {}, 0};
  const RadialPotential base = c.potential.build();
  const double N = c.particles;
  if (c.interaction == "W_beta")
    s.U = at_path("beta", [&] { return make_scaled(Family::W_beta, base, N, c.beta[0]); });
  else if (c.interaction == "V_N")
    s.U = at_path("s", [&] { return make_scaled(Family::V_N, base, N, c.beta[0], c.s); });
  if (c.propagation == "krylov" || (c.propagation == "auto" && !c.field.is_static()))
    s.options.method = Propagation::Krylov;
  else if (c.propagation == "dense")
    s.options.method = Propagation::Dense;
  if (c.coupling) {
    s.b = *c.coupling;
  } else if (c.interaction == "V_N") {
    s.b = 4 * kPi;
  } else if (c.interaction == "W_beta") {
    // Matched to the lattice: N sum_x W_beta(x) h^2 over displacement sites.
    double sum = 0;
    for (int site = 0; site < s.lattice.dimension(); ++site) sum += (*s.U)(s.lattice.displacement_length(site));
    s.b = N * sum * s.lattice.spacing() * s.lattice.spacing();
  }
  return s;
}

std::vector<cplx> lattice_samples(const Lattice2D& lat, const InitialSpec& init) {
  const int m = lat.points();
  std::vector<cplx> phi(static_cast<std::size_t>(m) * m);
  double nrm = 0;
  for (int iy = 0; iy < m; ++iy)
    for (int ix = 0; ix < m; ++ix) {
      const double x = -0.5 * lat.length() + ix * lat.spacing(), y = -0.5 * lat.length() + iy * lat.spacing();
      auto& z = phi[static_cast<std::size_t>(iy) * m + ix];
      z = gaussian(init, x, y);
      nrm += std::norm(z);
    }
  const double scale = 1.0 / std::sqrt(nrm * lat.spacing() * lat.spacing());
  for (auto& z : phi) z *= scale;
  return phi;
}

double depletion(const FewBodyState& psi) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gamma1(psi), Eigen::EigenvaluesOnly);
  return 1 - es.eigenvalues().maxCoeff();
}

json fewbody_meta(const FewBodyState& psi) {
  return {{"kind", "fewbody"}, {"N", psi.N}, {"m", psi.lattice.points()}, {"L", psi.lattice.length()}, {"t", psi.t}};
}

void run_fewbody(const ExperimentConfig& c, Output& out, std::uint64_t seed) {
  FewBodySetup s = fewbody_setup(c);
  FewBodyState psi = [&] {
    if (c.initial.type == "random") return random_symmetric_state(s.lattice, c.particles, seed);
    if (c.initial.type == "ground_state") {
      const GpState g = initial_gp(c, s.lattice.grid(), s.field, s.b);
      return product_state(s.lattice, c.particles, g.field);
    }
    return product_state(s.lattice, c.particles, lattice_samples(s.lattice, c.initial));
  }();
  const double dt = c.time.dt;
  auto H_at = [&](double t) { return build_hamiltonian(s.lattice, c.particles, s.U, s.field, t); };
  const bool is_static = s.field.is_static();
  std::optional<DiscreteHamiltonian> H0;
  if (is_static) H0 = H_at(0);
  io::CsvTable t({"t", "norm", "energy_per_particle", "depletion"});
  auto sample = [&] {
    const DiscreteHamiltonian H = is_static ? *H0 : H_at(psi.t);
    t.add_row({psi.t, psi.norm(), energy_per_particle(psi, H), depletion(psi)});
  };
  sample();
  const double norm0 = psi.norm();
  const double e0 = t.row(0)[2];
  double sym = psi.symmetry_defect();
  for (int k = 0; k < c.time.samples; ++k) {
    for (long step = 0; step < c.time.steps_per_sample(); ++step)
      psi = is_static ? propagate(psi, *H0, dt, s.options) : propagate(psi, H_at(psi.t + 0.5 * dt), dt, s.options);
    sample();
  }
  sym = std::max(sym, psi.symmetry_defect());
  out.csv("fewbody.csv", t, "trajectory");
  out.checkpoint("fewbody_final", psi.amplitudes, fewbody_meta(psi), "final");
  out.check("norm_drift", std::abs(psi.norm() - norm0), 1e-10);
  out.check("symmetry_defect", sym, 1e-10);
  if (is_static) out.check("energy_drift", std::abs(t.row(t.rows() - 1)[2] - e0), 1e-8 * std::max(1.0, std::abs(e0)));
  out.manifest.results["coupling"] = s.b;
  out.manifest.results["dimension"] = psi.amplitudes.size();
}

// Smallest C with alpha(t) <= e^(C t) (alpha(0) + eps) on the first half of the
// samples; the second half is then checked against the same C.
struct Gronwall {
  double C = 0;
  double worst_ratio = 0;  // max over the second half of alpha / bound
  double growth_rate = 0;  // least-squares slope of ln(alpha + eps) against t
};

Gronwall gronwall_trend(std::span<const double> t, std::span<const double> alpha, double eps) {
  Gronwall g;
  const double base = alpha[0] + eps;
  const std::size_t half = t.size() / 2;
  for (std::size_t i = 1; i <= half; ++i) g.C = std::max(g.C, std::log(alpha[i] / base) / t[i]);
  for (std::size_t i = half + 1; i < t.size(); ++i)
    g.worst_ratio = std::max(g.worst_ratio, alpha[i] / (std::exp(g.C * t[i]) * base));
  double tm = 0, lm = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    tm += t[i] / t.size();
    lm += std::log(alpha[i] + eps) / t.size();
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sxy += (t[i] - tm) * (std::log(alpha[i] + eps) - lm);
    sxx += (t[i] - tm) * (t[i] - tm);
  }
  g.growth_rate = sxx > 0 ? sxy / sxx : 0.0;
  return g;
}

void run_compare(const ExperimentConfig& c, Output& out) {
  FewBodySetup s = fewbody_setup(c);
  const Grid2D grid = s.lattice.grid();
  const RadialPotential base = c.potential.build();
  if (c.interaction == "V_N")
    s.pair = at_path("beta", [&] { return build_microscopic(base, c.particles, c.beta[0]); });
  GpState phi = at_path("initial", [&] { return initial_gp(c, grid, s.field, s.b); });
  phi.t = 0;
  FewBodyState psi = product_state(s.lattice, c.particles, phi.field);
  const double dt = c.time.dt;
  GpPropagator gp(grid, s.field, {s.b, dt / c.time.gp_substeps});
  auto H_at = [&](double t) { return build_hamiltonian(s.lattice, c.particles, s.U, s.field, t); };
  const bool is_static = s.field.is_static();
  std::optional<DiscreteHamiltonian> H0;
  if (is_static) H0 = H_at(0);

  io::CsvTable t({"t", "alpha_less", "alpha", "trace_distance", "n_expect", "m_expect", "energy_gap"});
  std::vector<DiagnosticsReport> reports;
  auto sample = [&] {
    const DiscreteHamiltonian H = is_static ? *H0 : H_at(psi.t);
    DiagnosticsReport r = diagnose(psi, H, phi, s.field, s.b, c.xi, s.pair ? &*s.pair : nullptr);
    const double alpha = r.alpha_full ? r.alpha_full->value : r.alpha_less;
    t.add_row({r.t, r.alpha_less, alpha, r.trace_distance, r.numbers.n, r.m_expect, r.energy_gap});
    reports.push_back(std::move(r));
  };
  sample();
  for (int k = 0; k < c.time.samples; ++k) {
    for (long step = 0; step < c.time.steps_per_sample(); ++step) {
      psi = is_static ? propagate(psi, *H0, dt, s.options) : propagate(psi, H_at(psi.t + 0.5 * dt), dt, s.options);
      gp.advance(phi, c.time.gp_substeps);
    }
    // Keep the two clocks identical despite substep rounding.
    phi.t = psi.t;
    sample();
  }
  out.csv("compare.csv", t, "trajectory");
  json diag = json::array();
  for (const auto& r : reports) diag.push_back(json::parse(r.json()));
  out.json_file("diagnostics.json", diag, "trajectory");
  out.checkpoint("fewbody_final", psi.amplitudes, fewbody_meta(psi), "final");
  out.checkpoint("gp_final", phi.field,
                 {{"kind", "gp"}, {"L", grid.length()}, {"n", grid.points()}, {"t", phi.t}, {"coupling", s.b},
                  {"dt", dt / c.time.gp_substeps}},
                 "final");

  const auto times = t.column("t"), alpha = t.column("alpha_less");
  const Gronwall g = gronwall_trend(times, alpha, c.epsilon);
  const DiagnosticsReport& r0 = reports.front();
  out.check("initial_trace_distance", r0.trace_distance, 1e-12);
  // Product data occupies P_0 only, so <m^> = m(0) and alpha^< is the gap plus m(0).
  out.check("initial_alpha_less_is_gap_plus_m0",
            std::abs(r0.alpha_less - r0.energy_gap - m_weight(0, c.particles, c.xi)), 1e-12);
  out.check("gronwall_trend", g.worst_ratio - 1, 1e-12);
  out.manifest.results["coupling"] = s.b;
  out.manifest.results["gronwall_C"] = g.C;
  out.manifest.results["alpha_growth_rate"] = g.growth_rate;
  out.manifest.results["gronwall_epsilon"] = c.epsilon;
  out.manifest.results["alpha_initial"] = alpha.front();
  out.manifest.results["gp_warnings"] = gp.warnings().size();
}

json versions() {
  std::ostringstream eigen;
  eigen << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION;
  return {{"gp2d", kVersion},
          {"eigen", eigen.str()},
          {"fftw", std::string(fftw_version)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"openmp", _OPENMP},
          {"compiler", __VERSION__}};
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

RunManifest run(const ExperimentConfig& config) {
  RunManifest m;
  m.scenario = config.scenario;
  m.config_hash = io::hex64(config.hash());
  m.seed = config.effective_seed();
  m.versions = versions();
  m.started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(config.output);
  Output out{config.output, m};
  out.json_file("config.json", config.canonical(), "config");
  if (config.scenario == "scattering") run_scattering(config, out);
  else if (config.scenario == "microscopic") run_microscopic(config, out);
  else if (config.scenario == "smearing") run_smearing(config, out);
  else if (config.scenario == "gp") run_gp(config, out);
  else if (config.scenario == "fewbody") run_fewbody(config, out, m.seed);
  else run_compare(config, out);
  m.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  m.artifacts.push_back({"manifest.json", "json", "manifest", 0});
  io::write_json(config.output / "manifest.json", m.json());
  return m;
}

std::vector<FitSummary> fit_report(const FitRequest& request) {
  if (request.inputs.empty()) throw DataError("fit_report: no input files");
  if (request.y.empty()) throw DataError("fit_report: no y columns requested");
  if (!(request.confidence > 0 && request.confidence < 1)) throw DataError("fit_report: confidence must lie in (0, 1)");
  std::vector<double> x;
  std::vector<std::vector<double>> ys(request.y.size());
  for (const auto& path : request.inputs) {
    const io::CsvTable t = io::CsvTable::read(path);
    const auto xs = t.column(request.x);
    x.insert(x.end(), xs.begin(), xs.end());
    for (std::size_t k = 0; k < request.y.size(); ++k) {
      const auto v = t.column(request.y[k]);
      ys[k].insert(ys[k].end(), v.begin(), v.end());
    }
  }
  std::vector<FitSummary> out;
  for (std::size_t k = 0; k < request.y.size(); ++k) {
    FitSummary s;
    s.column = request.y[k];
    s.fit = fit_power_law(x, ys[k], request.log_power);
    const boost::math::students_t dist(static_cast<double>(x.size() - 2));
    const double q = boost::math::quantile(dist, 0.5 + 0.5 * request.confidence);
    s.ci_low = s.fit.exponent - q * s.fit.stderr_exponent;
    s.ci_high = s.fit.exponent + q * s.fit.stderr_exponent;
    out.push_back(std::move(s));
  }
  return out;
}

json fit_json(const std::vector<FitSummary>& fits) {
  json j = json::array();
  for (const auto& f : fits)
    j.push_back({{"column", f.column},
                 {"exponent", f.fit.exponent},
                 {"stderr", f.fit.stderr_exponent},
                 {"ci_low", f.ci_low},
                 {"ci_high", f.ci_high},
                 {"log_power", f.fit.log_power},
                 {"log_prefactor", f.fit.log_prefactor},
                 {"residuals", f.fit.residuals}});
  return j;
}

}  // namespace gp2d

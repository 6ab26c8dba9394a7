#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gp2d/errors.hpp"
#include "gp2d/external_field.hpp"
#include "gp2d/fit.hpp"
#include "gp2d/radial_potential.hpp"
#include "json.hpp"

namespace gp2d {

// Invalid configuration value; path() names the offending key, e.g.
// "lattice.m" or "N[2]".
class ConfigError : public PreconditionError {
 public:
  ConfigError(std::string path, const std::string& message)
      : PreconditionError(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct PotentialSpec {
  std::string type = "square_well";  // square_well | table
  double height = 1;
  double radius = 1;
  std::string table;  // two-column file for type = table

  RadialPotential build() const;
};

// A(x, y, t) = strength (1 + drive sin(frequency t)) (x^2 + y^2) for
// "harmonic", strength for "constant", 0 for "zero".
struct FieldSpec {
  std::string type = "zero";
  double strength = 0;
  double drive = 0;
  double frequency = 0;

  ExternalField build() const;
  bool is_static() const { return type != "harmonic" || drive == 0; }
};

// gaussian: exp(-|x - x0|^2 / (2 width^2) + i k.x), normalised.
// ground_state: imaginary-time GP ground state in the field at t = 0.
// random: seeded random bosonic state (fewbody only).
struct InitialSpec {
  std::string type = "gaussian";
  double width = 1;
  double x0 = 0, y0 = 0;
  double kx = 0, ky = 0;
};

struct TimeSpec {
  double t_end = 1;
  double dt = 1e-2;
  int gp_substeps = 1;  // GP steps of dt / gp_substeps per few-body step
  int samples = 10;     // output rows after t = 0

  long steps() const;
  long steps_per_sample() const { return steps() / samples; }
};

struct ExperimentConfig {
  std::string scenario;  // scattering | microscopic | smearing | gp | fewbody | compare
  PotentialSpec potential;
  std::vector<double> N{8, 16, 32, 64};
  std::vector<double> beta{0.5};
  double beta1 = 0.25;
  double xi = 0.25;
  double s = 1;
  std::vector<double> R{2, 4};
  int particles = 2;
  std::string interaction = "W_beta";  // none | W_beta | V_N
  std::optional<double> coupling;      // b_U; matched to the interaction when absent
  double grid_L = 12;
  int grid_n = 64;
  int lattice_m = 6;
  double lattice_L = 6;
  FieldSpec field;
  InitialSpec initial;
  TimeSpec time;
  int positivity_resolution = 0;  // 0 skips the quadratic-form check
  int points_per_decade = 64;
  double epsilon = 0.01;  // Gronwall offset
  std::string propagation = "auto";
  std::filesystem::path output = "out";
  std::optional<std::uint64_t> seed;

  // Parses and validates every field; throws ConfigError with the key path.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  // Canonical form: all fields, sorted keys, output directory omitted.
  nlohmann::json canonical() const;
  std::uint64_t hash() const;
  std::uint64_t effective_seed() const { return seed ? *seed : hash(); }
};

struct Assertion {
  std::string name;
  double value = 0;
  double tolerance = 0;
  bool passed = false;
};

struct Artifact {
  std::string path;  // relative to the output directory
  std::string kind;  // csv | json | checkpoint
  std::string step;
  std::size_t rows = 0;
};

struct RunManifest {
  std::string scenario;
  std::string config_hash;
  std::uint64_t seed = 0;
  nlohmann::json versions;
  double wall_clock_seconds = 0;
  std::string started;
  std::vector<Artifact> artifacts;
  std::vector<Assertion> assertions;
  nlohmann::json results;

  bool passed() const;
  nlohmann::json json() const;
};

// Runs the scenario into config.output and writes manifest.json there.
RunManifest run(const ExperimentConfig& config);

struct FitRequest {
  std::vector<std::filesystem::path> inputs;
  std::string x = "N";
  std::vector<std::string> y;
  double log_power = 0;
  double confidence = 0.95;
};

struct FitSummary {
  std::string column;
  PowerLawFit fit;
  double ci_low = 0, ci_high = 0;
};

// Rows of all inputs are pooled; DataError on nonpositive values.
std::vector<FitSummary> fit_report(const FitRequest& request);
nlohmann::json fit_json(const std::vector<FitSummary>& fits);

}  // namespace gp2d

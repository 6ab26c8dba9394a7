#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gp2d/experiment.hpp"
#include "gp2d/io.hpp"

using namespace gp2d;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string config_error_path(const json& j) {
  try {
    (void)ExperimentConfig::from_json(j);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<none>";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json small_compare() {
  return {{"scenario", "compare"},
          {"lattice", {{"m", 4}, {"L", 5.0}}},
          {"field", {{"type", "harmonic"}, {"strength", 0.3}, {"drive", 0.2}, {"frequency", 2.0}}},
          {"time", {{"t_end", 0.2}, {"dt", 0.01}, {"gp_substeps", 2}, {"samples", 4}}}};
}

}  // namespace

TEST_CASE("config errors name the offending key") {
  CHECK(config_error_path({{"scenario", "gp"}, {"grid", {{"n", 64}, {"Lx", 3}}}}) == "grid.Lx");
  CHECK(config_error_path({{"scenario", "gp"}, {"grid", {{"n", 64.5}}}}) == "grid.n");
  CHECK(config_error_path({{"scenario", "gp"}, {"xi", "big"}}) == "xi");
  json tiny = small_compare();
  tiny["lattice"]["m"] = 1;
  CHECK(config_error_path(tiny) == "lattice.m");
  CHECK(config_error_path({{"scenario", "microscopic"}, {"N", {8, 16, 32, 400}}}) == "N[3]");
  CHECK(config_error_path({{"scenario", "fewbody"}, {"particles", 4}, {"lattice", {{"m", 10}}}}) == "lattice.m");
  json bad_time = small_compare();
  bad_time["time"]["samples"] = 3;
  CHECK(config_error_path(bad_time) == "time.samples");
  CHECK(config_error_path({{"scenario", "nonsense"}}) == "scenario");
}

TEST_CASE("canonical form and hash ignore the output directory") {
  json a = small_compare(), b = small_compare();
  a["output"] = "x";
  b["output"] = "y";
  const auto ca = ExperimentConfig::from_json(a), cb = ExperimentConfig::from_json(b);
  CHECK(ca.hash() == cb.hash());
  CHECK(ExperimentConfig::from_json(ca.canonical()).canonical() == ca.canonical());
  b["seed"] = 5;
  CHECK(ExperimentConfig::from_json(b).effective_seed() == 5u);
  CHECK(ca.effective_seed() == ca.hash());
}

TEST_CASE("compare run is deterministic and starts from a product state") {
  const fs::path root = fs::temp_directory_path() / "gp2d_test_compare";
  fs::remove_all(root);
  json j = small_compare();
  j["output"] = (root / "a").string();
  const auto m1 = run(ExperimentConfig::from_json(j));
  j["output"] = (root / "b").string();
  const auto m2 = run(ExperimentConfig::from_json(j));
  CHECK(m1.passed());
  for (const auto& a : m1.assertions) {
    CAPTURE(a.name);
    CHECK(a.passed);
  }
  for (const char* f : {"compare.csv", "diagnostics.json", "gp_final.bin", "fewbody_final.bin"})
    CHECK(slurp(root / "a" / f) == slurp(root / "b" / f));
  const auto csv = io::CsvTable::read(root / "a" / "compare.csv");
  CHECK(csv.rows() == 5u);
  CHECK(csv.column("trace_distance")[0] < 1e-12);
  CHECK(csv.column("n_expect")[0] < 1e-12);
  const auto manifest = io::read_json(root / "a" / "manifest.json");
  CHECK(manifest["config_hash"] == io::hex64(ExperimentConfig::from_json(j).hash()));
  CHECK(manifest["artifacts"].size() >= 4u);
}

// gp2d: batch driver for the scenarios in gp2d/experiment.hpp.
//
//   gp2d compare --config cfg.json --out runs/cmp --threads 4
//   gp2d fit --csv runs/micro/microscopic.csv --y g_l1 --log-power 1
//   gp2d algebra --count 100 --seed 7 --out runs/alg
//
// Exit status: 0 all in-run assertions passed, 1 an assertion failed,
// 2 invalid configuration or data, 3 any other error.

#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "gp2d/condensate_diagnostics.hpp"
#include "gp2d/experiment.hpp"
#include "gp2d/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON configuration file")->check(CLI::ExistingFile);
  sub->add_option("--out", c.out, "output directory (overrides the config)");
  sub->add_option("--seed", c.seed, "seed (overrides the config hash)");
  sub->add_option("--threads", c.threads, "OpenMP threads (0 keeps the default)")->check(CLI::NonNegativeNumber);
}

void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int run_scenario(const std::string& scenario, const Common& c) {
  json j = json::object();
  if (!c.config.empty()) {
    std::ifstream in(c.config);
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw gp2d::ConfigError("--config", e.what());
    }
    if (!j.is_object()) throw gp2d::ConfigError("--config", "top level must be an object");
  }
  if (j.contains("scenario") && j["scenario"] != scenario) {
    const json& s = j["scenario"];
    const std::string got = s.is_string() ? s.get<std::string>() : s.dump();
    throw gp2d::ConfigError("scenario", "config is for '" + got + "', not '" + scenario + "'");
  }
  j["scenario"] = scenario;
  if (!c.out.empty()) j["output"] = c.out;
  if (c.seed) j["seed"] = *c.seed;
  const auto config = gp2d::ExperimentConfig::from_json(j);
  set_threads(c.threads);
  const auto manifest = gp2d::run(config);
  for (const auto& a : manifest.assertions)
    std::cout << (a.passed ? "ok     " : "FAILED ") << a.name << "  value=" << a.value << " tol=" << a.tolerance
              << '\n';
  std::cout << "manifest: " << (config.output / "manifest.json").string() << "  (" << manifest.wall_clock_seconds
            << " s)\n";
  return manifest.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gp2d: 2D Gross-Pitaevskii mean-field laboratory"};
  app.require_subcommand(1);

  Common common;
  const char* scenarios[] = {"scattering", "microscopic", "smearing", "gp", "fewbody", "compare"};
  std::vector<std::pair<std::string, CLI::App*>> subs;
  for (const char* s : scenarios) {
    auto* sub = app.add_subcommand(s, std::string("run the ") + s + " scenario");
    add_common(sub, common);
    subs.emplace_back(s, sub);
  }

  gp2d::FitRequest fit;
  std::string fit_out;
  auto* fit_cmd = app.add_subcommand("fit", "power-law-with-log fit of CSV columns");
  fit_cmd->add_option("--csv", fit.inputs, "input CSV files (rows are pooled)")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--x", fit.x, "abscissa column")->capture_default_str();
  fit_cmd->add_option("--y", fit.y, "ordinate columns")->required();
  fit_cmd->add_option("--log-power", fit.log_power, "declared power of ln N divided out")->capture_default_str();
  fit_cmd->add_option("--confidence", fit.confidence, "confidence level of the interval")->capture_default_str();
  fit_cmd->add_option("--out", fit_out, "write fit.json and residual CSVs here");

  std::size_t count = 100;
  std::uint64_t alg_seed = 1;
  double tolerance = 1e-10;
  std::string alg_out;
  int alg_threads = 0;
  auto* alg = app.add_subcommand("algebra", "projector/weight identities on seeded random instances");
  alg->add_option("--count", count, "number of instances")->capture_default_str();
  alg->add_option("--seed", alg_seed, "base seed")->capture_default_str();
  alg->add_option("--tolerance", tolerance, "identity tolerance")->capture_default_str();
  alg->add_option("--out", alg_out, "write algebra.tap and algebra.json here");
  alg->add_option("--threads", alg_threads, "OpenMP threads")->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& [name, sub] : subs)
      if (sub->parsed()) return run_scenario(name, common);

    if (fit_cmd->parsed()) {
      const auto fits = gp2d::fit_report(fit);
      const json j = gp2d::fit_json(fits);
      std::cout << j.dump(2) << '\n';
      if (!fit_out.empty()) {
        fs::create_directories(fit_out);
        gp2d::io::write_json(fs::path(fit_out) / "fit.json", j);
      }
      return 0;
    }

    if (alg->parsed()) {
      set_threads(alg_threads);
      const auto report = gp2d::operator_algebra_suite(count, alg_seed, {{2, 3}, {2, 4}, {2, 5}, {3, 2}, {3, 3}},
                                                       tolerance);
      if (alg_out.empty()) {
        std::cout << report.tap();
      } else {
        fs::create_directories(alg_out);
        std::ofstream(fs::path(alg_out) / "algebra.tap") << report.tap();
        std::ofstream(fs::path(alg_out) / "algebra.json") << report.json() << '\n';
        std::cout << report.checks.size() << " checks, " << (report.all_passed() ? "all passed" : "FAILURES") << '\n';
      }
      return report.all_passed() ? 0 : 1;
    }
  } catch (const gp2d::ConfigError& e) {
    std::cerr << "config error at " << e.what() << '\n';
    return 2;
  } catch (const gp2d::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 3;
}

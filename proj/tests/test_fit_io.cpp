#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gp2d/errors.hpp"
#include "gp2d/experiment.hpp"
#include "gp2d/fit.hpp"
#include "gp2d/io.hpp"

using namespace gp2d;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gp2d_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("synthetic N^-2 ln N recovers exponent -2") {
  std::vector<double> N, y;
  for (double n = 8; n <= 4096; n *= 2) {
    N.push_back(n);
    y.push_back(3.0 * std::pow(n, -2) * std::log(n));
  }
  const auto f = fit_power_law(N, y, 1.0);
  CHECK(f.exponent == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(std::abs(fit_power_law(N, y, 0.0).exponent + 2) > 0.05);  // log factor matters
  CHECK(f.stderr_exponent < 1e-10);
}

TEST_CASE("log fits reject nonpositive data and short series") {
  const std::vector<double> N{2, 4, 8, 16}, bad{1, 0.5, -0.1, 0.2}, ok{1, 2, 3, 4};
  CHECK_THROWS_AS(fit_power_law(N, bad), DataError);
  CHECK_THROWS_AS(fit_power_law(std::span(N).first(3), std::span(ok).first(3)), DataError);
}

TEST_CASE("CSV round trip is exact") {
  const auto dir = scratch_dir("csv");
  io::CsvTable t({"N", "value"});
  t.add_row({8, 0.1});
  t.add_row({16, 1.0 / 3.0});
  t.add_row({32, -2.5e-300});
  t.write(dir / "t.csv");
  const auto r = io::CsvTable::read(dir / "t.csv");
  REQUIRE(r.rows() == 3);
  CHECK(r.column("value")[1] == 1.0 / 3.0);
  CHECK(r.column("value")[2] == -2.5e-300);
  CHECK_THROWS_AS(r.column("nope"), DataError);
  CHECK_THROWS_AS(t.add_row({1.0}), PreconditionError);
}

TEST_CASE("checkpoint round trip in both precisions") {
  const auto dir = scratch_dir("ckpt");
  std::vector<io::cplx> data{{1.0 / 3, -2.0}, {1e-200, 7.0}, {0, 0}};
  io::write_checkpoint(dir / "a", data, {{"t", 0.5}});
  const auto a = io::read_checkpoint(dir / "a");
  CHECK(a.data == data);
  CHECK(a.meta["t"] == 0.5);
  CHECK(fs::file_size(dir / "a.bin") == 48u);
  io::write_checkpoint(dir / "b", data, {}, io::Precision::Single);
  const auto b = io::read_checkpoint(dir / "b");
  CHECK(fs::file_size(dir / "b.bin") == 24u);
  CHECK(std::abs(b.data[0] - data[0]) < 1e-7);
  std::ofstream(dir / "b.bin", std::ios::app) << "x";
  CHECK_THROWS_AS(io::read_checkpoint(dir / "b"), DataError);
}

TEST_CASE("FNV-1a reference values") {
  CHECK(io::fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(io::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(io::hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("fit report pools files and brackets the exponent") {
  const auto dir = scratch_dir("fit");
  io::CsvTable a({"N", "y"}), b({"N", "y"});
  for (double n : {4.0, 8.0, 16.0}) a.add_row({n, std::pow(n, -1.5) * (1 + 0.01 * std::sin(n))});
  for (double n : {32.0, 64.0, 128.0}) b.add_row({n, std::pow(n, -1.5) * (1 + 0.01 * std::sin(n))});
  a.write(dir / "a.csv");
  b.write(dir / "b.csv");
  const auto fits = fit_report({{dir / "a.csv", dir / "b.csv"}, "N", {"y"}, 0.0, 0.95});
  REQUIRE(fits.size() == 1);
  CHECK(fits[0].fit.residuals.size() == 6u);
  CHECK(fits[0].ci_low < -1.5);
  CHECK(fits[0].ci_high > -1.5);
  CHECK(fits[0].fit.exponent == doctest::Approx(-1.5).epsilon(0.01));
  io::CsvTable z({"N", "y"});
  for (double n : {4.0, 8.0, 16.0, 32.0}) z.add_row({n, n == 8.0 ? 0.0 : 1.0});
  z.write(dir / "z.csv");
  CHECK_THROWS_AS(fit_report({{dir / "z.csv"}, "N", {"y"}, 0.0, 0.95}), DataError);
}

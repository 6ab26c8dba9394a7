#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace gp2d::io {

using cplx = std::complex<double>;

// Column-oriented numeric table. Values are written with 17 significant
// digits so a rerun reproduces the file byte for byte.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  void add_row(std::vector<double> row);
  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t rows() const { return rows_.size(); }
  const std::vector<double>& row(std::size_t i) const { return rows_.at(i); }
  // Throws DataError for an unknown column name.
  std::vector<double> column(const std::string& name) const;

  void write(const std::filesystem::path& path) const;
  static CsvTable read(const std::filesystem::path& path);

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

enum class Precision { Double, Single };

// Raw little-endian complex samples in <stem>.bin plus a JSON sidecar
// <stem>.json carrying the metadata, element count and precision.
struct Checkpoint {
  nlohmann::json meta;
  std::vector<cplx> data;
};

void write_checkpoint(const std::filesystem::path& stem, std::span<const cplx> data, nlohmann::json meta,
                      Precision precision = Precision::Double);
Checkpoint read_checkpoint(const std::filesystem::path& stem);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace gp2d::io

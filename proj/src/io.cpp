#include "gp2d/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gp2d/errors.hpp"

namespace gp2d::io {
namespace {

std::string format(double v) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc{}) throw DataError("csv: cannot format value");
  return {buf, end};
}

template <class T>
void put_le(std::ostream& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(bytes, sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  char bytes[sizeof(T)];
  if (!in.read(bytes, sizeof(T))) throw DataError("checkpoint: truncated data file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* ext) {
  std::filesystem::path p = stem;
  p += ext;
  return p;
}

}  // namespace

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
  if (columns_.empty()) throw PreconditionError("csv: no columns");
}

void CsvTable::add_row(std::vector<double> row) {
  if (row.size() != columns_.size()) throw PreconditionError("csv: row width differs from header");
  rows_.push_back(std::move(row));
}

std::vector<double> CsvTable::column(const std::string& name) const {
  auto it = std::find(columns_.begin(), columns_.end(), name);
  if (it == columns_.end()) throw DataError("csv: no column named '" + name + "'");
  const auto k = static_cast<std::size_t>(it - columns_.begin());
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(r[k]);
  return out;
}

void CsvTable::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("csv: cannot open " + path.string());
  for (std::size_t k = 0; k < columns_.size(); ++k) out << (k ? "," : "") << columns_[k];
  out << '\n';
  for (const auto& r : rows_) {
    for (std::size_t k = 0; k < r.size(); ++k) out << (k ? "," : "") << format(r[k]);
    out << '\n';
  }
  if (!out) throw std::runtime_error("csv: write failed for " + path.string());
}

CsvTable CsvTable::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: empty file " + path.string());
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  CsvTable table(cols);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0;
      auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || p != cell.data() + cell.size())
        throw DataError("csv: bad number '" + cell + "' on line " + std::to_string(lineno));
      row.push_back(v);
    }
    if (row.size() != cols.size()) throw DataError("csv: ragged row on line " + std::to_string(lineno));
    table.add_row(std::move(row));
  }
  return table;
}

void write_checkpoint(const std::filesystem::path& stem, std::span<const cplx> data, nlohmann::json meta,
                      Precision precision) {
  std::ofstream out(with_suffix(stem, ".bin"), std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + stem.string() + ".bin");
  for (const auto& z : data) {
    if (precision == Precision::Double) {
      put_le(out, z.real());
      put_le(out, z.imag());
    } else {
      put_le(out, static_cast<float>(z.real()));
      put_le(out, static_cast<float>(z.imag()));
    }
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
  meta["elements"] = data.size();
  meta["precision"] = precision == Precision::Double ? "complex128" : "complex64";
  meta["byte_order"] = "little";
  write_json(with_suffix(stem, ".json"), meta);
}

Checkpoint read_checkpoint(const std::filesystem::path& stem) {
  Checkpoint cp;
  cp.meta = read_json(with_suffix(stem, ".json"));
  const auto count = cp.meta.at("elements").get<std::size_t>();
  const auto prec = cp.meta.at("precision").get<std::string>();
  if (prec != "complex128" && prec != "complex64") throw DataError("checkpoint: unknown precision " + prec);
  std::ifstream in(with_suffix(stem, ".bin"), std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + stem.string() + ".bin");
  cp.data.resize(count);
  for (auto& z : cp.data) {
    if (prec == "complex128") {
      const double re = get_le<double>(in);
      z = {re, get_le<double>(in)};
    } else {
      const float re = get_le<float>(in);
      z = {re, get_le<float>(in)};
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("checkpoint: trailing bytes in data file");
  return cp;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("json: cannot open " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("json: cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace gp2d::io

#include "attnspec/table.hpp"

#include "attnspec/errors.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#ifndef ATTNSPEC_VERSION
#define ATTNSPEC_VERSION "0.1.0"
#endif

namespace attnspec {

const char* version() { return ATTNSPEC_VERSION; }

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::size_t ResultTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw ValidationError("table: no column '" + name + "'");
}

void ResultTable::add_row(std::vector<nlohmann::json> row) {
  if (row.size() != columns.size())
    throw ConsistencyError("table: row has " + std::to_string(row.size()) + " cells for " +
                           std::to_string(columns.size()) + " columns");
  rows.push_back(std::move(row));
}

double ResultTable::number(std::size_t row, const std::string& col) const {
  const auto& cell = rows.at(row).at(column(col));
  if (cell.is_null()) return std::nan("");
  return cell.get<double>();
}

std::string ResultTable::text(std::size_t row, const std::string& col) const {
  return rows.at(row).at(column(col)).get<std::string>();
}

void ResultTable::write_csv(std::ostream& os) const {
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      const auto& cell = row[i];
      if (cell.is_number_integer())
        os << cell.get<long long>();
      else if (cell.is_number())
        os << format_double(cell.get<double>());
      else if (cell.is_string())
        os << cell.get<std::string>();
      else if (cell.is_boolean())
        os << (cell.get<bool>() ? "true" : "false");
    }
    os << '\n';
  }
}

void ResultTable::write(const std::string& dir, double wall_time_s) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream os(fs::path(dir) / "table.csv");
    if (!os) throw ValidationError("cannot write " + (fs::path(dir) / "table.csv").string());
    write_csv(os);
  }
  nlohmann::json m = metadata;
  m["version"] = version();
  m["wall_time_s"] = wall_time_s;
  std::ofstream os(fs::path(dir) / "manifest.json");
  if (!os) throw ValidationError("cannot write " + (fs::path(dir) / "manifest.json").string());
  os << m.dump(2) << '\n';
}

}  // namespace attnspec

#pragma once

#include <json.hpp>

#include <string>
#include <vector>

namespace attnspec {

/// "0.1.0-<git describe>" stamped at configure time.
const char* version();

/// Column-named rows; cells are JSON numbers, strings or null (written empty).
struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;
  nlohmann::json metadata = nlohmann::json::object();

  std::size_t column(const std::string& name) const;
  void add_row(std::vector<nlohmann::json> row);
  double number(std::size_t row, const std::string& col) const;
  std::string text(std::size_t row, const std::string& col) const;

  void write_csv(std::ostream& os) const;
  /// <dir>/table.csv and <dir>/manifest.json; the manifest adds version and wall time.
  void write(const std::string& dir, double wall_time_s) const;
};

/// Shortest round-trip decimal form.
std::string format_double(double x);

}  // namespace attnspec

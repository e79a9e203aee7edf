#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace symfield {

struct Table {
  std::vector<std::string> header;
  Eigen::MatrixXd values;

  /// Index of a named column, or -1.
  int column(const std::string& name) const;
};

/// Comma separated, one header row, numbers only below it.
Table read_csv(std::istream& in);
Table read_csv_file(const std::string& path);

/// Shortest round-trip decimals.
void write_csv(std::ostream& out, const Table& table);
void write_csv_file(const std::string& path, const Table& table);

}  // namespace symfield

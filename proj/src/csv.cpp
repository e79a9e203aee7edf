#include "symfield/csv.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "symfield/errors.hpp"
#include "symfield/numfmt.hpp"

namespace symfield {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream s(line);
  while (std::getline(s, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

int Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

Table read_csv(std::istream& in) {
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("invalid-csv", "empty CSV input");
  for (auto& h : split(line)) t.header.push_back(trim(h));
  const auto cols = t.header.size();
  std::vector<double> flat;
  long rows = 0, line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != cols)
      throw ValidationError("invalid-csv", "line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                               " fields, expected " + std::to_string(cols));
    for (const auto& c : cells) flat.push_back(parse_double(c));
    ++rows;
  }
  t.values.resize(rows, static_cast<Eigen::Index>(cols));
  for (long i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t.values(i, static_cast<Eigen::Index>(j)) = flat[i * cols + j];
  return t;
}

Table read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("io-error", "cannot open " + path);
  return read_csv(in);
}

void write_csv(std::ostream& out, const Table& table) {
  if (static_cast<Eigen::Index>(table.header.size()) != table.values.cols())
    throw ValidationError("dimension-mismatch", "header width differs from table width");
  for (std::size_t j = 0; j < table.header.size(); ++j) out << (j ? "," : "") << table.header[j];
  out << '\n';
  for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.values.cols(); ++j) out << (j ? "," : "") << format_double(table.values(i, j));
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const Table& table) {
  std::ofstream out(path);
  if (!out) throw ValidationError("io-error", "cannot write " + path);
  write_csv(out, table);
}

}  // namespace symfield

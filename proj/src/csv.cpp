#include "psr/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "psr/errors.hpp"

namespace psr {

namespace {

// Parses one CSV line into doubles; empty cells and junk raise ParseError.
void parse_line(const std::string& path, const std::string& line, std::size_t row,
                std::vector<double>& out) {
  out.clear();
  std::size_t start = 0;
  std::size_t col = 0;
  while (start <= line.size()) {
    std::size_t end = line.find(',', start);
    if (end == std::string::npos) end = line.size();
    ++col;
    // Trim surrounding spaces.
    std::size_t b = start, e = end;
    while (b < e && (line[b] == ' ' || line[b] == '\t')) ++b;
    while (e > b && (line[e - 1] == ' ' || line[e - 1] == '\t' || line[e - 1] == '\r')) --e;
    double value = 0.0;
    const auto res = std::from_chars(line.data() + b, line.data() + e, value);
    if (res.ec != std::errc() || res.ptr != line.data() + e) {
      throw ParseError(path + ": row " + std::to_string(row) + ", column " +
                       std::to_string(col) + ": cannot parse \"" +
                       line.substr(start, end - start) + "\" as a number");
    }
    out.push_back(value);
    if (end == line.size()) break;
    start = end + 1;
  }
}

}  // namespace

Eigen::MatrixXd read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::vector<double> cells;
  while (std::getline(in, line)) {
    ++lineno;
    // Skip completely blank lines (trailing newline at EOF etc).
    bool blank = true;
    for (char c : line)
      if (c != ' ' && c != '\t' && c != '\r') {
        blank = false;
        break;
      }
    if (blank) continue;
    parse_line(path, line, lineno, cells);
    if (!rows.empty() && cells.size() != rows.front().size()) {
      throw ParseError(path + ": row " + std::to_string(lineno) + " has " +
                       std::to_string(cells.size()) + " columns, expected " +
                       std::to_string(rows.front().size()));
    }
    rows.push_back(cells);
  }
  if (rows.empty()) throw ParseError(path + ": empty file");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

Eigen::VectorXd read_csv_vector(const std::string& path) {
  Eigen::MatrixXd m = read_csv_matrix(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw ParseError(path + ": expected a single row or column, got " +
                   std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

namespace {

void write_value(std::ofstream& out, double v) {
  char buf[32];
  // %.17g round-trips doubles; shortest form would need to_chars but plot
  // tooling reads either just fine.
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

}  // namespace

void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      write_value(out, m(i, j));
    }
    out << '\n';
  }
}

void write_csv_vector(const std::string& path, const Eigen::VectorXd& v) {
  write_csv_matrix(path, v);
}

}  // namespace psr

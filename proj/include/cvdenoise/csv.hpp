#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cvdenoise {

// File-level failures (missing file, malformed cell) carry their own type
// so callers can distinguish bad input from solver trouble.
class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CsvMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major

  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

// Plain numeric CSV, no header, one matrix row per line.
inline CsvMatrix read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open " + path);
  CsvMatrix m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        while (used < cell.size() && (cell[used] == ' ' || cell[used] == '\r')) ++used;
        if (used != cell.size()) throw std::invalid_argument("trailing characters");
        row.push_back(v);
      } catch (const std::exception&) {
        throw CsvError(path + ": line " + std::to_string(line_no) +
                       ": cannot parse '" + cell + "' as a number");
      }
    }
    if (m.cols == 0) {
      m.cols = row.size();
    } else if (row.size() != m.cols) {
      throw CsvError(path + ": line " + std::to_string(line_no) +
                     ": expected " + std::to_string(m.cols) + " columns, got " +
                     std::to_string(row.size()));
    }
    m.data.insert(m.data.end(), row.begin(), row.end());
    ++m.rows;
  }
  if (m.rows == 0) throw CsvError(path + ": empty file");
  return m;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_csv_matrix(const std::string& path, const std::vector<double>& data,
                             std::size_t rows, std::size_t cols) {
  if (data.size() != rows * cols) throw std::invalid_argument("write_csv_matrix: size mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (j) out << ',';
      out << format_double(data[i * cols + j]);
    }
    out << '\n';
  }
}

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
}

}  // namespace cvdenoise

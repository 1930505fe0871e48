#pragma once

// Weight-matrix CSV files: one header row of column (output) names, then one
// row per neuron / input channel.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "spikelink/matrix.hpp"

namespace spikelink {

class CsvError : public Error {
 public:
  using Error::Error;
};

struct NamedMatrix {
  std::vector<std::string> columns;
  Matrix values;
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline double parse_double(const std::string& text, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw CsvError(where + ": not a number: '" + text + "'");
  }
  if (used != text.size()) throw CsvError(where + ": trailing characters in '" + text + "'");
  return v;
}

}  // namespace detail

inline NamedMatrix parse_matrix_csv(std::istream& in, const std::string& origin = "csv") {
  NamedMatrix out;
  std::string line;
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto cells = detail::split(t, ',');
    if (!have_header) {
      out.columns = cells;
      have_header = true;
      continue;
    }
    if (cells.size() != out.columns.size()) {
      throw CsvError(origin + ":" + std::to_string(lineno) + ": expected " +
                     std::to_string(out.columns.size()) + " cells, got " +
                     std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      const double v = detail::parse_double(c, origin + ":" + std::to_string(lineno));
      if (!std::isfinite(v)) throw CsvError(origin + ":" + std::to_string(lineno) + ": non-finite");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (!have_header) throw CsvError(origin + ": missing header row");
  out.values = Matrix(rows.size(), out.columns.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) out.values(r, c) = rows[r][c];
  return out;
}

inline NamedMatrix load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open " + path);
  return parse_matrix_csv(in, path);
}

inline void write_matrix_csv(std::ostream& out, const NamedMatrix& m) {
  for (std::size_t c = 0; c < m.columns.size(); ++c) out << (c ? "," : "") << m.columns[c];
  out << '\n';
  for (std::size_t r = 0; r < m.values.rows(); ++r) {
    for (std::size_t c = 0; c < m.values.cols(); ++c)
      out << (c ? "," : "") << detail::format_double(m.values(r, c));
    out << '\n';
  }
}

inline void save_matrix_csv(const std::string& path, const NamedMatrix& m) {
  std::ofstream out(path);
  if (!out) throw CsvError("cannot write " + path);
  write_matrix_csv(out, m);
}

}  // namespace spikelink

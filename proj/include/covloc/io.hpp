#pragma once

// Plain-text matrix and vector formats:
//   dense CSV  one matrix row per line, comma separated, no header
//   COO        "i j value" per line, 0-based indices, whitespace separated
//   vector     one value per line
// Blank lines and lines starting with '#' are ignored by all readers.

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "covloc/core.hpp"
#include "covloc/netgraph.hpp"

namespace covloc::io {

enum class MatrixFormat { Csv, Coo };

inline MatrixFormat parse_format(std::string_view name) {
  if (name == "csv") return MatrixFormat::Csv;
  if (name == "coo") return MatrixFormat::Coo;
  throw FormatError("unknown matrix format '" + std::string(name) + "' (expected csv or coo)");
}

namespace detail {

inline bool skip_line(std::string_view s) {
  const auto p = s.find_first_not_of(" \t\r");
  return p == std::string_view::npos || s[p] == '#';
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// column is 1-based and points at the first character of the field.
inline double parse_real(std::string_view field, std::size_t line, std::size_t column) {
  const std::string_view t = trim(field);
  if (t.empty()) throw FormatError("empty field", line, column);
  const char* first = t.data();
  if (*first == '+') ++first;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size())
    throw FormatError("not a number: '" + std::string(t) + "'", line, column);
  if (!std::isfinite(v)) throw FormatError("non-finite value", line, column);
  return v;
}

inline Index parse_index(std::string_view field, std::size_t line, std::size_t column) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw FormatError("not an integer index: '" + std::string(field) + "'", line, column);
  if (v < 0) throw FormatError("negative index", line, column);
  return static_cast<Index>(v);
}

// Whitespace-separated tokens with their 1-based columns.
inline std::vector<std::pair<std::string_view, std::size_t>> tokens(std::string_view s) {
  std::vector<std::pair<std::string_view, std::size_t>> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    if (i >= s.size()) break;
    const std::size_t b = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
    out.emplace_back(s.substr(b, i - b), b + 1);
  }
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

}  // namespace detail

inline Matrix read_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skip_line(line)) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view field = std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      row.push_back(detail::parse_real(field, lineno, start + 1));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      std::ostringstream msg;
      msg << "row has " << row.size() << " columns, expected " << rows.front().size();
      throw FormatError(msg.str(), lineno, 1);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("no data rows");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

/// Dimensions are the largest indices + 1 unless given (both must be given).
inline Matrix read_coo(std::istream& in, Index rows = -1, Index cols = -1) {
  struct Entry {
    Index i, j;
    double v;
    std::size_t line;
  };
  std::vector<Entry> entries;
  std::string line;
  std::size_t lineno = 0;
  Index max_i = -1, max_j = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skip_line(line)) continue;
    const auto tok = detail::tokens(line);
    if (tok.size() != 3) {
      std::ostringstream msg;
      msg << "expected 3 fields 'i j value', found " << tok.size();
      throw FormatError(msg.str(), lineno, tok.size() > 3 ? tok[3].second : 1);
    }
    Entry e{detail::parse_index(tok[0].first, lineno, tok[0].second),
            detail::parse_index(tok[1].first, lineno, tok[1].second),
            detail::parse_real(tok[2].first, lineno, tok[2].second), lineno};
    max_i = std::max(max_i, e.i);
    max_j = std::max(max_j, e.j);
    entries.push_back(e);
  }
  if (rows < 0 || cols < 0) {
    if (entries.empty()) throw FormatError("no entries and no dimensions given");
    rows = max_i + 1;
    cols = max_j + 1;
  }
  Matrix m = Matrix::Zero(rows, cols);
  for (const Entry& e : entries) {
    if (e.i >= rows || e.j >= cols) throw FormatError("index outside the matrix dimensions", e.line, 1);
    m(e.i, e.j) += e.v;
  }
  return m;
}

inline Vector read_vector(std::istream& in) {
  std::vector<double> vals;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skip_line(line)) continue;
    const auto tok = detail::tokens(line);
    if (tok.size() != 1) throw FormatError("expected one value per line", lineno, tok[1].second);
    vals.push_back(detail::parse_real(tok[0].first, lineno, tok[0].second));
  }
  if (vals.empty()) throw FormatError("no values");
  return Eigen::Map<const Vector>(vals.data(), static_cast<Index>(vals.size()));
}

inline void write_csv(std::ostream& out, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

/// Nonzero entries only, row-major.
inline void write_coo(std::ostream& out, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) out << i << ' ' << j << ' ' << m(i, j) << '\n';
}

inline void write_vector(std::ostream& out, const Vector& v) {
  for (Index i = 0; i < v.size(); ++i) out << v(i) << '\n';
}

inline void write_edge_list(std::ostream& out, const StateNetwork& net) {
  for (const Edge& e : net.edges()) out << e.i << ' ' << e.j << ' ' << e.weight << '\n';
}

// File wrappers. Read errors are re-raised as "path:line:column: message".

template <class F>
auto with_path(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const FormatError& e) {
    std::string where = path;
    if (e.line() > 0) where += ":" + std::to_string(e.line());
    if (e.column() > 0) where += ":" + std::to_string(e.column());
    throw FormatError(where + ": " + e.what(), e.line(), e.column());
  }
}

inline Matrix load_matrix(const std::string& path, MatrixFormat format) {
  auto in = detail::open_in(path);
  return with_path(path, [&] { return format == MatrixFormat::Csv ? read_csv(in) : read_coo(in); });
}

inline Vector load_vector(const std::string& path) {
  auto in = detail::open_in(path);
  return with_path(path, [&] { return read_vector(in); });
}

inline void save_matrix(const std::string& path, const Matrix& m, MatrixFormat format) {
  auto out = detail::open_out(path);
  format == MatrixFormat::Csv ? write_csv(out, m) : write_coo(out, m);
}

inline void save_vector(const std::string& path, const Vector& v) {
  auto out = detail::open_out(path);
  write_vector(out, v);
}

inline void save_edge_list(const std::string& path, const StateNetwork& net) {
  auto out = detail::open_out(path);
  write_edge_list(out, net);
}

}  // namespace covloc::io

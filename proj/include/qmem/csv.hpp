// csv.hpp
// Minimal CSV reading/writing with round-trippable number formatting.

#pragma once

#include "qmem/core.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace qmem::csv {

// Shortest representation that reads back to the same double.
inline std::string format(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format(long long v) { return std::to_string(v); }
inline std::string format(unsigned long long v) { return std::to_string(v); }
inline std::string format(int v) { return std::to_string(v); }
inline std::string format(std::size_t v) { return std::to_string(v); }
inline std::string format(const std::string& v) { return v; }
inline std::string format(const char* v) { return v; }

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}

  void header(const std::vector<std::string>& columns) { line(columns); }

  void line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os_ << ',';
      os_ << cells[i];
    }
    os_ << '\n';
  }

  template <typename... Ts>
  void row(const Ts&... values) {
    line({format(values)...});
  }

 private:
  std::ostream& os_;
};

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    std::string cell(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start));
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(std::move(cell));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(const std::string& s) {
  std::string_view text(s);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec == std::errc::invalid_argument || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  if (res.ec == std::errc::result_out_of_range) throw std::invalid_argument("out of range: '" + s + "'");
  return v;
}

// Matrix as rows of Re/Im interleaved values: re(i,0), im(i,0), re(i,1), ...
inline void write_matrix(std::ostream& os, const ComplexMatrix& m, const std::string& unit = "1") {
  Writer w(os);
  std::vector<std::string> header;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    header.push_back("re_" + std::to_string(j) + "[" + unit + "]");
    header.push_back("im_" + std::to_string(j) + "[" + unit + "]");
  }
  w.header(header);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<std::string> cells;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      cells.push_back(format(m(i, j).real()));
      cells.push_back(format(m(i, j).imag()));
    }
    w.line(cells);
  }
}

inline ComplexMatrix read_matrix(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("matrix csv: missing header");
  const std::size_t cols2 = split(line).size();
  if (cols2 % 2 != 0) throw std::invalid_argument("matrix csv: odd column count");
  std::vector<std::vector<Complex>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != cols2) throw std::invalid_argument("matrix csv: ragged row");
    std::vector<Complex> r;
    for (std::size_t k = 0; k < cells.size(); k += 2) {
      r.emplace_back(parse_double(cells[k]), parse_double(cells[k + 1]));
    }
    rows.push_back(std::move(r));
  }
  ComplexMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols2 / 2));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

}  // namespace qmem::csv

#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ndrl/errors.hpp"
#include "ndrl/linalg.hpp"

namespace ndrl {

/// 17 significant digits: parse(format(x)) == x bit-for-bit.
inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, std::size_t line = 0) {
  while (!s.empty() && (s.front() == ' ')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ')) s.remove_suffix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("not a number: \"" + std::string(s) + "\"", line);
  }
  return v;
}

inline std::uint64_t parse_uint(std::string_view s, std::size_t line = 0) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("not a non-negative integer: \"" + std::string(s) + "\"", line);
  }
  return v;
}

template <typename Row>
void write_csv_row(std::ostream& out, const Row& row) {
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (j) out << ',';
    out << format_double(row[j]);
  }
}

inline std::vector<double> parse_csv_row(std::string_view text, std::size_t line = 0) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t pos = text.find(',', start);
    const std::size_t end = pos == std::string_view::npos ? text.size() : pos;
    out.push_back(parse_double(text.substr(start, end - start), line));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace ndrl

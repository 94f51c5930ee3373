#pragma once

// Text dumps of configurations, one ball per line as `x_1 ... x_d r`, with a
// leading 1-based color column for multi-type dumps, and key-value metadata
// records written next to them.

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cwr/geometry.hpp"
#include "cwr/multitype.hpp"

namespace cwr {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <std::size_t Dim>
void write_ball(std::ostream& os, const MarkedPoint<Dim>& p) {
  for (std::size_t a = 0; a < Dim; ++a) os << fmt17(p.center[a]) << ' ';
  os << fmt17(p.radius) << '\n';
}

template <std::size_t Dim>
MarkedPoint<Dim> parse_ball(std::istringstream& in, std::size_t line_no) {
  MarkedPoint<Dim> p;
  for (std::size_t a = 0; a < Dim; ++a) {
    if (!(in >> p.center[a])) throw IoError("dump line " + std::to_string(line_no) + ": missing coordinate");
  }
  if (!(in >> p.radius) || p.radius < 0.0) {
    throw IoError("dump line " + std::to_string(line_no) + ": missing or negative radius");
  }
  std::string extra;
  if (in >> extra) throw IoError("dump line " + std::to_string(line_no) + ": trailing field");
  return p;
}

inline bool skip_line(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

}  // namespace detail

template <std::size_t Dim>
void write_configuration(std::ostream& os, const Configuration<Dim>& config) {
  for (const auto& p : config) detail::write_ball(os, p);
}

template <std::size_t Dim>
void write_configuration(std::ostream& os, const MultiTypeConfiguration<Dim>& mc) {
  for (std::size_t i = 0; i < mc.q(); ++i) {
    for (const auto& p : mc.colors[i]) {
      os << (i + 1) << ' ';
      detail::write_ball(os, p);
    }
  }
}

template <std::size_t Dim>
Configuration<Dim> read_configuration(std::istream& is) {
  Configuration<Dim> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (detail::skip_line(line)) continue;
    std::istringstream in(line);
    out.push_back(detail::parse_ball<Dim>(in, line_no));
  }
  return out;
}

template <std::size_t Dim>
MultiTypeConfiguration<Dim> read_multitype_configuration(std::istream& is, std::size_t q) {
  MultiTypeConfiguration<Dim> out(q);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (detail::skip_line(line)) continue;
    std::istringstream in(line);
    std::size_t color = 0;
    if (!(in >> color) || color < 1 || color > q) {
      throw IoError("dump line " + std::to_string(line_no) + ": color must be in 1.." + std::to_string(q));
    }
    out.colors[color - 1].push_back(detail::parse_ball<Dim>(in, line_no));
  }
  return out;
}

/// Ordered `key = value` lines.
using Metadata = std::vector<std::pair<std::string, std::string>>;

inline void write_metadata(std::ostream& os, const Metadata& meta) {
  for (const auto& [k, v] : meta) os << k << " = " << v << '\n';
}

inline std::map<std::string, std::string> read_metadata(std::istream& is) {
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(is, line)) {
    if (detail::skip_line(line)) continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw IoError("metadata line without ' = ': " + line);
    out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

template <class Config>
void save_dump(const std::string& path, const Config& config, const Metadata& meta) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path);
  write_configuration(os, config);
  std::ofstream ms(path + ".meta");
  if (!ms) throw IoError("cannot open " + path + ".meta");
  write_metadata(ms, meta);
  if (!os || !ms) throw IoError("write failed for " + path);
}

}  // namespace cwr

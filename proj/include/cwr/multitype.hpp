#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "cwr/geometry.hpp"

namespace cwr {

/// One configuration per color. Colors are 0-based in code and 1-based in
/// every emitted file.
template <std::size_t Dim>
struct MultiTypeConfiguration {
  std::vector<Configuration<Dim>> colors;

  MultiTypeConfiguration() = default;
  explicit MultiTypeConfiguration(std::size_t q) : colors(q) {
    if (q == 0) throw std::invalid_argument("multi-type configuration needs at least one color");
  }

  std::size_t q() const { return colors.size(); }

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& c : colors) n += c.size();
    return n;
  }

  std::vector<std::size_t> counts() const {
    std::vector<std::size_t> out;
    out.reserve(colors.size());
    for (const auto& c : colors) out.push_back(c.size());
    return out;
  }

  /// Color-blind projection.
  Configuration<Dim> flatten() const {
    Configuration<Dim> out;
    out.reserve(total());
    for (const auto& c : colors) out.insert(out.end(), c.begin(), c.end());
    return out;
  }

  friend bool operator==(const MultiTypeConfiguration&, const MultiTypeConfiguration&) = default;
};

}  // namespace cwr

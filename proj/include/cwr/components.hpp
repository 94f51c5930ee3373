#pragma once

// Connected components of the germ-grain union and observables built on
// them: component count, crossing, probe-based coverage and the color census.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "cwr/geometry.hpp"
#include "cwr/multitype.hpp"
#include "cwr/random.hpp"
#include "cwr/spatial_grid.hpp"

namespace cwr {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

template <std::size_t Dim>
struct ComponentBox {
  Vec<Dim> lower;
  Vec<Dim> upper;
};

template <std::size_t Dim>
struct ComponentLabeling {
  /// labels[i] = smallest ball index in the component of ball i.
  std::vector<std::size_t> labels;
  std::size_t n_cc = 0;
  /// Distinct labels in increasing order, with matching bounding boxes of the
  /// balls (not just the centers).
  std::vector<std::size_t> roots;
  std::vector<ComponentBox<Dim>> boxes;
};

template <std::size_t Dim>
ComponentLabeling<Dim> connected_components(const Configuration<Dim>& config) {
  const std::size_t n = config.size();
  ComponentLabeling<Dim> out;
  if (n == 0) return out;

  const auto grid = SpatialGrid<Dim>::build(config);
  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid.for_each_candidate(config[i], [&](std::size_t j) {
      if (j > i && balls_overlap(config[i], config[j])) uf.unite(i, j);
    });
  }

  // Canonical label: smallest index per component.
  constexpr auto kUnset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> smallest(n, kUnset);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = uf.find(i);
    if (smallest[r] == kUnset) smallest[r] = i;
  }
  out.labels.resize(n);
  std::vector<std::size_t> slot(n, kUnset);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = smallest[uf.find(i)];
    out.labels[i] = label;
    if (slot[label] == kUnset) {
      slot[label] = out.roots.size();
      out.roots.push_back(label);
      ComponentBox<Dim> box;
      box.lower.fill(std::numeric_limits<double>::infinity());
      box.upper.fill(-std::numeric_limits<double>::infinity());
      out.boxes.push_back(box);
    }
    auto& box = out.boxes[slot[label]];
    for (std::size_t a = 0; a < Dim; ++a) {
      box.lower[a] = std::min(box.lower[a], config[i].center[a] - config[i].radius);
      box.upper[a] = std::max(box.upper[a], config[i].center[a] + config[i].radius);
    }
  }
  out.n_cc = out.roots.size();
  return out;
}

/// Some component touches both faces of `window` orthogonal to `axis`.
template <std::size_t Dim>
bool crossing_exists(const ComponentLabeling<Dim>& labeling, const Configuration<Dim>&,
                     const Window<Dim>& window, std::size_t axis) {
  if (axis >= Dim) throw std::invalid_argument("crossing_exists: axis out of range");
  // A component touches a face iff its ball bounding box reaches it.
  for (const auto& box : labeling.boxes) {
    if (box.lower[axis] <= window.lower(axis) && box.upper[axis] >= window.upper(axis)) return true;
  }
  return false;
}

template <std::size_t Dim>
bool crossing_exists(const Configuration<Dim>& config, const Window<Dim>& window, std::size_t axis) {
  return crossing_exists(connected_components(config), config, window, axis);
}

/// Stratified probes: ceil(probes^(1/Dim)) cells per axis, one jittered probe
/// per cell, jitter drawn from a fixed seed.
template <std::size_t Dim>
std::vector<Vec<Dim>> probe_points(const Window<Dim>& window, std::size_t probes) {
  if (probes == 0) throw std::invalid_argument("probe_points: need at least one probe");
  std::size_t m = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(probes), 1.0 / Dim) - 1e-9));
  m = std::max<std::size_t>(m, 1);
  std::size_t total = 1;
  for (std::size_t i = 0; i < Dim; ++i) total *= m;

  Rng jitter(0x70726f6265ULL);
  std::vector<Vec<Dim>> out;
  out.reserve(total);
  std::array<std::size_t, Dim> cell{};
  for (std::size_t c = 0; c < total; ++c) {
    Vec<Dim> x;
    for (std::size_t a = 0; a < Dim; ++a) {
      const double h = window.extent(a) / static_cast<double>(m);
      x[a] = window.lower(a) + h * (static_cast<double>(cell[a]) + uniform01(jitter));
    }
    out.push_back(x);
    for (std::size_t a = 0; a < Dim; ++a) {
      if (++cell[a] < m) break;
      cell[a] = 0;
    }
  }
  return out;
}

/// Fraction of the probe set covered by the union of balls.
template <std::size_t Dim>
double covered_fraction(const Configuration<Dim>& config, const Window<Dim>& window, std::size_t probes) {
  const auto points = probe_points(window, probes);
  if (config.empty()) return 0.0;
  const auto grid = SpatialGrid<Dim>::build(config);
  std::size_t covered = 0;
  for (const auto& x : points) {
    const MarkedPoint<Dim> probe{x, 0.0};
    bool hit = false;
    grid.for_each_candidate(probe, [&](std::size_t j) {
      if (!hit && squared_distance(x, config[j].center) <= config[j].radius * config[j].radius) hit = true;
    });
    if (hit) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(points.size());
}

struct ColorCensus {
  std::vector<std::size_t> counts;
  /// Covered volume per color (probe estimate); empty unless requested.
  std::vector<double> covered_volume;
  bool monochromatic = true;
  double dominant_fraction = 1.0;
  /// 0-based color with the largest count (lowest index on ties).
  std::size_t dominant_color = 0;
};

template <std::size_t Dim>
ColorCensus color_census(const MultiTypeConfiguration<Dim>& mc) {
  ColorCensus c;
  c.counts = mc.counts();
  std::size_t present = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < c.counts.size(); ++i) {
    if (c.counts[i] > 0) ++present;
    total += c.counts[i];
    if (c.counts[i] > c.counts[c.dominant_color]) c.dominant_color = i;
  }
  c.monochromatic = present <= 1;
  c.dominant_fraction =
      total == 0 ? 1.0 : static_cast<double>(c.counts[c.dominant_color]) / static_cast<double>(total);
  return c;
}

template <std::size_t Dim>
ColorCensus color_census(const MultiTypeConfiguration<Dim>& mc, const Window<Dim>& window,
                         std::size_t probes) {
  ColorCensus c = color_census(mc);
  c.covered_volume.reserve(mc.q());
  for (const auto& color : mc.colors) {
    c.covered_volume.push_back(covered_fraction(color, window, probes) * window.volume());
  }
  return c;
}

}  // namespace cwr

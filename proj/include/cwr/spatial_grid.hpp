#pragma once

// Uniform hash grid over ball centers. Balls whose radius exceeds the cell
// size live in an oversize list that every query scans, so heavy-tailed radii
// never break the "no false negatives" guarantee.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "cwr/geometry.hpp"

namespace cwr {

template <std::size_t Dim>
class SpatialGrid {
 public:
  using CellKey = std::array<std::int64_t, Dim>;

  explicit SpatialGrid(double cell_size) : cell_size_(cell_size) {
    if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
      throw std::invalid_argument("spatial grid: cell size must be positive and finite");
    }
  }

  /// Grid over `config` with the default cell size (twice the median radius).
  static SpatialGrid build(const Configuration<Dim>& config) {
    SpatialGrid grid(default_cell_size(config));
    for (std::size_t i = 0; i < config.size(); ++i) grid.insert(i, config[i]);
    return grid;
  }

  static SpatialGrid build(const Configuration<Dim>& config, double cell_size) {
    SpatialGrid grid(cell_size);
    for (std::size_t i = 0; i < config.size(); ++i) grid.insert(i, config[i]);
    return grid;
  }

  static double default_cell_size(const Configuration<Dim>& config) {
    std::vector<double> radii;
    radii.reserve(config.size());
    for (const auto& p : config) radii.push_back(p.radius);
    return default_cell_size(std::move(radii));
  }

  static double default_cell_size(std::vector<double> radii) {
    if (radii.empty()) return 1.0;
    auto mid = radii.begin() + static_cast<std::ptrdiff_t>(radii.size() / 2);
    std::nth_element(radii.begin(), mid, radii.end());
    const double median = *mid;
    if (median > 0.0 && std::isfinite(median)) return 2.0 * median;
    // Mostly zero radii: fall back to the positive ones, then to unit cells.
    double sum = 0.0;
    std::size_t n = 0;
    for (double r : radii) {
      if (r > 0.0 && std::isfinite(r)) {
        sum += r;
        ++n;
      }
    }
    return n > 0 ? 2.0 * sum / static_cast<double>(n) : 1.0;
  }

  double cell_size() const { return cell_size_; }
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  const std::vector<std::size_t>& oversize() const { return oversize_; }

  void insert(std::size_t index, const MarkedPoint<Dim>& ball) {
    if (is_oversize(ball)) {
      oversize_.push_back(index);
    } else {
      buckets_[key_of(ball.center)].push_back(index);
    }
    ++count_;
  }

  /// Removes `index`; `ball` must be the same ball it was inserted with.
  void erase(std::size_t index, const MarkedPoint<Dim>& ball) {
    if (is_oversize(ball)) {
      remove_from(oversize_, index);
    } else {
      auto it = buckets_.find(key_of(ball.center));
      if (it == buckets_.end()) throw std::logic_error("spatial grid: erase of unknown ball");
      remove_from(it->second, index);
      if (it->second.empty()) buckets_.erase(it);
    }
    --count_;
  }

  /// Calls fn(j) for every stored ball that may overlap `query`; never misses a
  /// true overlap partner, may report extra candidates.
  template <class Fn>
  void for_each_candidate(const MarkedPoint<Dim>& query, Fn&& fn) const {
    for (std::size_t j : oversize_) fn(j);
    if (buckets_.empty()) return;

    // Bucketed balls have radius <= cell size.
    const double reach = query.radius + cell_size_;
    CellKey lo;
    CellKey hi;
    double cells = 1.0;
    for (std::size_t i = 0; i < Dim; ++i) {
      lo[i] = cell_coord(query.center[i] - reach);
      hi[i] = cell_coord(query.center[i] + reach);
      cells *= static_cast<double>(hi[i] - lo[i] + 1);
    }
    if (cells > static_cast<double>(buckets_.size())) {
      for (const auto& [key, members] : buckets_) {
        if (!key_in_range(key, lo, hi)) continue;
        for (std::size_t j : members) fn(j);
      }
      return;
    }
    CellKey key = lo;
    while (true) {
      auto it = buckets_.find(key);
      if (it != buckets_.end()) {
        for (std::size_t j : it->second) fn(j);
      }
      std::size_t axis = 0;
      while (axis < Dim) {
        if (key[axis] < hi[axis]) {
          ++key[axis];
          break;
        }
        key[axis] = lo[axis];
        ++axis;
      }
      if (axis == Dim) break;
    }
  }

  /// Sorted candidate superset of the overlap partners of `query`.
  std::vector<std::size_t> neighbor_candidates(const MarkedPoint<Dim>& query) const {
    std::vector<std::size_t> out;
    for_each_candidate(query, [&](std::size_t j) { out.push_back(j); });
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Every stored index, once each.
  template <class Fn>
  void for_each_entry(Fn&& fn) const {
    for (std::size_t j : oversize_) fn(j);
    for (const auto& [key, members] : buckets_) {
      for (std::size_t j : members) fn(j);
    }
  }

 private:
  struct KeyHash {
    std::size_t operator()(const CellKey& k) const noexcept {
      std::uint64_t h = 0x9e3779b97f4a7c15ULL;
      for (auto c : k) {
        h ^= static_cast<std::uint64_t>(c) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      }
      return static_cast<std::size_t>(h);
    }
  };

  bool is_oversize(const MarkedPoint<Dim>& ball) const {
    return !(ball.radius <= cell_size_);
  }

  std::int64_t cell_coord(double x) const {
    const double c = std::floor(x / cell_size_);
    constexpr double kLimit = 4.0e18;
    return static_cast<std::int64_t>(std::clamp(c, -kLimit, kLimit));
  }

  CellKey key_of(const Vec<Dim>& x) const {
    CellKey k;
    for (std::size_t i = 0; i < Dim; ++i) k[i] = cell_coord(x[i]);
    return k;
  }

  static bool key_in_range(const CellKey& k, const CellKey& lo, const CellKey& hi) {
    for (std::size_t i = 0; i < Dim; ++i) {
      if (k[i] < lo[i] || k[i] > hi[i]) return false;
    }
    return true;
  }

  static void remove_from(std::vector<std::size_t>& v, std::size_t index) {
    auto it = std::find(v.begin(), v.end(), index);
    if (it == v.end()) throw std::logic_error("spatial grid: erase of unknown ball");
    *it = v.back();
    v.pop_back();
  }

  double cell_size_;
  std::unordered_map<CellKey, std::vector<std::size_t>, KeyHash> buckets_;
  std::vector<std::size_t> oversize_;
  std::size_t count_ = 0;
};

/// Overlap partners of `query` among `config`, via `grid` built over `config`.
template <std::size_t Dim>
std::vector<std::size_t> neighbor_candidates(const SpatialGrid<Dim>& grid,
                                             const MarkedPoint<Dim>& query) {
  return grid.neighbor_candidates(query);
}

}  // namespace cwr

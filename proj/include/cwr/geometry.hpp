#pragma once

// Germ-grain primitives: marked points (center + radius), axis-aligned
// windows and finite configurations. Everything is templated on the ambient
// dimension so that mixing dimensions is a compile error.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace cwr {

template <std::size_t Dim>
using Vec = std::array<double, Dim>;

template <std::size_t Dim>
double squared_distance(const Vec<Dim>& a, const Vec<Dim>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < Dim; ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

template <std::size_t Dim>
struct MarkedPoint {
  static_assert(Dim >= 1, "dimension must be at least 1");
  Vec<Dim> center{};
  double radius = 0.0;

  friend bool operator==(const MarkedPoint&, const MarkedPoint&) = default;
};

/// Closed balls: tangent balls overlap.
template <std::size_t Dim>
bool balls_overlap(const MarkedPoint<Dim>& a, const MarkedPoint<Dim>& b) {
  const double reach = a.radius + b.radius;
  return squared_distance(a.center, b.center) <= reach * reach;
}

template <std::size_t Dim>
class Window {
 public:
  Window() {
    lower_.fill(0.0);
    upper_.fill(1.0);
  }

  Window(const Vec<Dim>& lower, const Vec<Dim>& upper) : lower_(lower), upper_(upper) {
    for (std::size_t i = 0; i < Dim; ++i) {
      if (!(lower_[i] < upper_[i])) {
        throw std::invalid_argument("window: lower bound must be below upper bound on every axis");
      }
    }
  }

  /// [lo, hi]^Dim
  static Window cube(double lo, double hi) {
    Vec<Dim> l;
    Vec<Dim> u;
    l.fill(lo);
    u.fill(hi);
    return Window(l, u);
  }

  /// Slab of the form [lo, hi] x [0, k]^(Dim-1).
  static Window slab(double lo, double hi, double k) {
    Vec<Dim> l;
    Vec<Dim> u;
    l.fill(0.0);
    u.fill(k);
    l[0] = lo;
    u[0] = hi;
    return Window(l, u);
  }

  const Vec<Dim>& lower() const { return lower_; }
  const Vec<Dim>& upper() const { return upper_; }
  double lower(std::size_t axis) const { return lower_[axis]; }
  double upper(std::size_t axis) const { return upper_[axis]; }
  double extent(std::size_t axis) const { return upper_[axis] - lower_[axis]; }

  double volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < Dim; ++i) v *= extent(i);
    return v;
  }

  bool contains(const Vec<Dim>& x) const {
    for (std::size_t i = 0; i < Dim; ++i) {
      if (x[i] < lower_[i] || x[i] > upper_[i]) return false;
    }
    return true;
  }

  /// Window grown by `margin` on every side.
  Window inflated(double margin) const {
    Vec<Dim> l = lower_;
    Vec<Dim> u = upper_;
    for (std::size_t i = 0; i < Dim; ++i) {
      l[i] -= margin;
      u[i] += margin;
    }
    return Window(l, u);
  }

  /// Euclidean distance from x to the closed box (0 inside).
  double distance_to(const Vec<Dim>& x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < Dim; ++i) {
      double t = 0.0;
      if (x[i] < lower_[i]) t = lower_[i] - x[i];
      else if (x[i] > upper_[i]) t = x[i] - upper_[i];
      s += t * t;
    }
    return std::sqrt(s);
  }

  friend bool operator==(const Window&, const Window&) = default;

 private:
  Vec<Dim> lower_;
  Vec<Dim> upper_;
};

/// Closed inclusion B(x, r) in w, axis by axis.
template <std::size_t Dim>
bool ball_inside_window(const MarkedPoint<Dim>& p, const Window<Dim>& w) {
  for (std::size_t i = 0; i < Dim; ++i) {
    if (w.lower(i) + p.radius > p.center[i]) return false;
    if (p.center[i] > w.upper(i) - p.radius) return false;
  }
  return true;
}

/// Closed ball B(x, r) meets the closed window.
template <std::size_t Dim>
bool ball_meets_window(const MarkedPoint<Dim>& p, const Window<Dim>& w) {
  return w.distance_to(p.center) <= p.radius;
}

template <std::size_t Dim>
using Configuration = std::vector<MarkedPoint<Dim>>;

template <std::size_t Dim>
double max_radius(const Configuration<Dim>& config) {
  double r = 0.0;
  for (const auto& p : config) r = std::max(r, p.radius);
  return r;
}

}  // namespace cwr

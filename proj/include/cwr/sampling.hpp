#pragma once

// Poisson germ-grain draws, the authorization event (no overlap between
// balls of distinct colors), exact rejection sampling of the finite-volume
// Widom-Rowlinson measure, boundary construction and FK coloring.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cwr/components.hpp"
#include "cwr/geometry.hpp"
#include "cwr/multitype.hpp"
#include "cwr/radius_law.hpp"
#include "cwr/random.hpp"
#include "cwr/spatial_grid.hpp"

namespace cwr {

/// A sampler gave up; carries how many attempts were spent.
class SamplerError : public std::runtime_error {
 public:
  SamplerError(const std::string& what, std::size_t attempts)
      : std::runtime_error(what), attempts_(attempts) {}
  std::size_t attempts() const { return attempts_; }

 private:
  std::size_t attempts_;
};

namespace boundary {

struct Free {};
/// Poisson balls of one color (0-based) in a shell of the given thickness
/// around the window.
struct Ordered {
  std::size_t color = 0;
  double shell = 1.0;
};
template <std::size_t Dim>
struct Explicit {
  MultiTypeConfiguration<Dim> balls;
};

}  // namespace boundary

template <std::size_t Dim>
using BoundaryCondition = std::variant<boundary::Free, boundary::Ordered, boundary::Explicit<Dim>>;

template <std::size_t Dim>
struct GibbsParams {
  std::size_t q = 2;
  std::vector<double> z;
  std::vector<RadiusLaw> laws;
  Window<Dim> window;
  BoundaryCondition<Dim> boundary = boundary::Free{};

  /// Symmetric parameters: the same activity and law for every color.
  static GibbsParams symmetric(std::size_t q, double z, const RadiusLaw& law, const Window<Dim>& window) {
    GibbsParams p;
    p.q = q;
    p.z.assign(q, z);
    p.laws.assign(q, law);
    p.window = window;
    return p;
  }

  double total_activity() const {
    double s = 0.0;
    for (double zi : z) s += zi;
    return s;
  }

  void validate() const {
    if (q == 0) throw std::invalid_argument("gibbs params: q must be >= 1");
    if (z.size() != q || laws.size() != q) {
      throw std::invalid_argument("gibbs params: activity and law vectors must have length q");
    }
    for (double zi : z) {
      if (!(std::isfinite(zi) && zi >= 0.0)) throw std::invalid_argument("gibbs params: activities must be >= 0");
    }
    if (auto* o = std::get_if<boundary::Ordered>(&boundary)) {
      if (o->color >= q) throw std::invalid_argument("gibbs params: ordered boundary color out of range");
      if (!(o->shell >= 0.0)) throw std::invalid_argument("gibbs params: shell thickness must be >= 0");
    }
    if (auto* e = std::get_if<boundary::Explicit<Dim>>(&boundary)) {
      if (e->balls.q() != q) throw std::invalid_argument("gibbs params: explicit boundary must have q colors");
    }
  }
};

template <std::size_t Dim>
Vec<Dim> uniform_point(const Window<Dim>& window, Rng& rng) {
  Vec<Dim> x;
  for (std::size_t a = 0; a < Dim; ++a) x[a] = window.lower(a) + window.extent(a) * uniform01(rng);
  return x;
}

inline std::size_t poisson_count(double mean, Rng& rng) {
  if (mean <= 0.0) return 0;
  return static_cast<std::size_t>(std::poisson_distribution<long long>(mean)(rng));
}

template <std::size_t Dim>
Configuration<Dim> sample_poisson(const Window<Dim>& window, double z, const RadiusLaw& law, Rng& rng) {
  if (!(z >= 0.0)) throw std::invalid_argument("sample_poisson: activity must be >= 0");
  const std::size_t n = poisson_count(z * window.volume(), rng);
  Configuration<Dim> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    MarkedPoint<Dim> p;
    p.center = uniform_point(window, rng);
    p.radius = law.sample(rng);
    out.push_back(p);
  }
  return out;
}

template <std::size_t Dim>
MultiTypeConfiguration<Dim> sample_multitype_poisson(const GibbsParams<Dim>& params, Rng& rng) {
  params.validate();
  MultiTypeConfiguration<Dim> out(params.q);
  for (std::size_t i = 0; i < params.q; ++i) {
    out.colors[i] = sample_poisson(params.window, params.z[i], params.laws[i], rng);
  }
  return out;
}

/// No two balls of distinct colors overlap, counting boundary balls as part
/// of their color. `boundary_balls` may be empty (q = 0) for a free boundary.
template <std::size_t Dim>
bool is_authorized(const MultiTypeConfiguration<Dim>& mc, const MultiTypeConfiguration<Dim>& boundary_balls) {
  Configuration<Dim> all;
  std::vector<std::size_t> color;
  auto append = [&](const MultiTypeConfiguration<Dim>& part) {
    for (std::size_t i = 0; i < part.q(); ++i) {
      for (const auto& p : part.colors[i]) {
        all.push_back(p);
        color.push_back(i);
      }
    }
  };
  append(mc);
  append(boundary_balls);
  if (all.size() < 2) return true;
  const auto grid = SpatialGrid<Dim>::build(all);
  for (std::size_t a = 0; a < all.size(); ++a) {
    bool clash = false;
    grid.for_each_candidate(all[a], [&](std::size_t b) {
      if (!clash && b > a && color[a] != color[b] && balls_overlap(all[a], all[b])) clash = true;
    });
    if (clash) return false;
  }
  return true;
}

template <std::size_t Dim>
bool is_authorized(const MultiTypeConfiguration<Dim>& mc) {
  return is_authorized(mc, MultiTypeConfiguration<Dim>{});
}

/// Boundary balls for the params' boundary condition (empty when free).
template <std::size_t Dim>
MultiTypeConfiguration<Dim> build_boundary(const GibbsParams<Dim>& params, Rng& rng) {
  params.validate();
  MultiTypeConfiguration<Dim> out(params.q);
  if (auto* o = std::get_if<boundary::Ordered>(&params.boundary)) {
    if (o->shell <= 0.0) return out;
    const auto outer = params.window.inflated(o->shell);
    auto draw = sample_poisson(outer, params.z[o->color], params.laws[o->color], rng);
    for (const auto& p : draw) {
      if (params.window.contains(p.center)) continue;
      if (ball_meets_window(p, params.window)) out.colors[o->color].push_back(p);
    }
  } else if (auto* e = std::get_if<boundary::Explicit<Dim>>(&params.boundary)) {
    for (const auto& color : e->balls.colors) {
      for (const auto& p : color) {
        if (params.window.contains(p.center)) {
          throw std::invalid_argument("build_boundary: explicit boundary ball centered inside the window");
        }
      }
    }
    out = e->balls;
  }
  return out;
}

/// Expected number of boundary balls that the finite shell misses: balls
/// centered farther than `shell` from the window that still reach it. Returns
/// +inf when the radius tail makes this infinite.
template <std::size_t Dim>
double boundary_truncation_mass(const GibbsParams<Dim>& params) {
  const auto* o = std::get_if<boundary::Ordered>(&params.boundary);
  if (!o) return 0.0;
  const RadiusLaw& law = params.laws[o->color];
  const auto integ = classify_integrability(law, static_cast<int>(Dim));
  if (integ.classification == Integrability::NonIntegrable) return std::numeric_limits<double>::infinity();

  // d/dt vol(W + tB) = sum_j j kappa_j e_{Dim-j}(extents) t^(j-1), e_m the
  // elementary symmetric polynomials of the extents.
  std::array<double, Dim + 1> e{};
  e[0] = 1.0;
  for (std::size_t a = 0; a < Dim; ++a) {
    for (std::size_t m = a + 1; m >= 1; --m) e[m] += e[m - 1] * params.window.extent(a);
  }
  auto kappa = [](std::size_t j) {
    return std::pow(std::numbers::pi, j / 2.0) / std::tgamma(j / 2.0 + 1.0);
  };
  auto surface = [&](double t) {
    double s = 0.0;
    for (std::size_t j = 1; j <= Dim; ++j) s += j * kappa(j) * e[Dim - j] * std::pow(t, double(j - 1));
    return s;
  };
  const double start = std::max(o->shell, 1e-12);
  const int segments = 20000;
  const double h = std::log(1.0e8) / segments;
  double total = 0.0;
  auto f = [&](double s) {
    const double t = start * std::exp(s);
    return law.survival(t) * surface(t) * t;
  };
  for (int i = 0; i < segments; ++i) {
    const double a = i * h;
    total += h / 6.0 * (f(a) + 4.0 * f(a + 0.5 * h) + f(a + h));
  }
  return params.z[o->color] * total;
}

template <std::size_t Dim>
struct RejectionSample {
  MultiTypeConfiguration<Dim> sample;
  std::size_t attempts = 0;
};

/// First authorized multi-type Poisson draw given the boundary balls.
/// Throws SamplerError when `max_attempts` draws were all rejected.
template <std::size_t Dim>
RejectionSample<Dim> sample_wr_rejection(const GibbsParams<Dim>& params,
                                         const MultiTypeConfiguration<Dim>& boundary_balls, Rng& rng,
                                         std::size_t max_attempts) {
  if (max_attempts == 0) throw std::invalid_argument("sample_wr_rejection: max_attempts must be >= 1");
  for (std::size_t attempt = 1; attempt <= max_attempts; ++attempt) {
    auto draw = sample_multitype_poisson(params, rng);
    if (is_authorized(draw, boundary_balls)) return {std::move(draw), attempt};
  }
  throw SamplerError("rejection sampler exhausted " + std::to_string(max_attempts) + " attempts", max_attempts);
}

template <std::size_t Dim>
RejectionSample<Dim> sample_wr_rejection(const GibbsParams<Dim>& params, Rng& rng, std::size_t max_attempts) {
  const auto boundary_balls = build_boundary(params, rng);
  return sample_wr_rejection(params, boundary_balls, rng, max_attempts);
}

/// Independent uniform color per connected component.
template <std::size_t Dim>
MultiTypeConfiguration<Dim> fk_coloring(const Configuration<Dim>& config, std::size_t q, Rng& rng) {
  if (q == 0) throw std::invalid_argument("fk_coloring: q must be >= 1");
  const auto labeling = connected_components(config);
  std::vector<std::size_t> color_of_label(config.size(), 0);
  // Roots are in increasing order, so draws are tied to component order.
  for (std::size_t root : labeling.roots) color_of_label[root] = uniform_index(rng, q);
  MultiTypeConfiguration<Dim> out(q);
  for (std::size_t i = 0; i < config.size(); ++i) {
    out.colors[color_of_label[labeling.labels[i]]].push_back(config[i]);
  }
  return out;
}

}  // namespace cwr

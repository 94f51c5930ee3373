#pragma once

// Rightward segment structure on slabs ]0, n] x [0, k]^(d-1). A ball (x, r)
// contributes the box [x_1, x_1 + r~] x [0, k]^(d-1), r~ = sqrt(r^2 - (d-1) k^2)+,
// and since every box spans the full cross-section the union's components are
// the components of the axis intervals [x_1, x_1 + r~].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cwr/components.hpp"
#include "cwr/geometry.hpp"
#include "cwr/mcmc.hpp"
#include "cwr/radius_law.hpp"
#include "cwr/random.hpp"
#include "cwr/sampling.hpp"
#include "cwr/stats.hpp"

namespace cwr {

struct SlabParams {
  double n = 1.0;
  double k = 1.0;
  int d = 2;
  double z = 1.0;
  RadiusLaw law = RadiusLaw::dirac(1.0);
  double q = 2.0;
  double q_bar = 3.0;

  void validate() const {
    if (!(n > 0.0) || !(k > 0.0)) throw std::invalid_argument("slab params: n and k must be positive");
    if (d < 1 || d > 3) throw std::invalid_argument("slab params: d must be 1, 2 or 3");
    if (!(z >= 0.0) || !std::isfinite(z)) throw std::invalid_argument("slab params: z must be >= 0");
    if (!(q >= 1.0)) throw std::invalid_argument("slab params: q must be >= 1");
    if (!(q_bar > q)) throw std::invalid_argument("slab params: q_bar must exceed q");
  }

  /// Q~({0}) < 1/q_bar, required by the moment-bound experiments.
  bool atom_condition() const { return q_tilde_transform(law, k, d).atom_at_zero() < 1.0 / q_bar; }
};

struct RightSegment {
  double start = 0.0;
  double length = 0.0;
  double end() const { return start + length; }
};

inline double transformed_radius(double r, double k, int d) {
  if (!(r >= 0.0) || !(k >= 0.0) || d < 1) throw std::invalid_argument("transformed_radius: bad arguments");
  if (d == 1) return r;
  const double s = r * r - static_cast<double>(d - 1) * k * k;
  return s >= 0.0 ? std::sqrt(s) : 0.0;
}

/// Points per unit length along the slab axis: z times the cross-section
/// volume k^(d-1).
inline double effective_line_intensity(double z, double k, int d) {
  return z * std::pow(k, d - 1);
}

template <std::size_t Dim>
std::vector<RightSegment> right_segments(const Configuration<Dim>& config, double k) {
  std::vector<RightSegment> out;
  out.reserve(config.size());
  for (const auto& p : config) {
    out.push_back({p.center[0], transformed_radius(p.radius, k, static_cast<int>(Dim))});
  }
  return out;
}

namespace detail {

inline void sort_segments(std::vector<RightSegment>& segs) {
  std::sort(segs.begin(), segs.end(), [](const RightSegment& a, const RightSegment& b) {
    return a.start < b.start || (a.start == b.start && a.length < b.length);
  });
}

}  // namespace detail

struct RightStructure {
  std::size_t n_cc = 0;
  /// Right end of the last (rightmost) component; -inf when empty.
  double reach = -std::numeric_limits<double>::infinity();
};

/// Components of the union of closed intervals [start, start + length].
inline RightStructure right_structure(std::vector<RightSegment> segs) {
  RightStructure out;
  if (segs.empty()) return out;
  detail::sort_segments(segs);
  double end = segs.front().end();
  out.n_cc = 1;
  for (std::size_t i = 1; i < segs.size(); ++i) {
    if (segs[i].start > end) ++out.n_cc;
    end = std::max(end, segs[i].end());
  }
  out.reach = end;
  return out;
}

inline std::size_t n_cc_right(std::vector<RightSegment> segs) { return right_structure(std::move(segs)).n_cc; }

template <std::size_t Dim>
std::size_t n_cc_right(const Configuration<Dim>& config, const SlabParams& params) {
  return n_cc_right(right_segments(config, params.k));
}

struct RightCoverage {
  bool covered = false;
  /// Left endpoint of the first uncovered stretch of [y, n] when not covered.
  std::optional<double> gap_start;
};

/// Whether the merged intervals contain [y, n].
inline RightCoverage right_covered(std::vector<RightSegment> segs, double y, double n) {
  if (!(y >= 0.0 && y <= n)) throw std::invalid_argument("right_covered: need 0 <= y <= n");
  detail::sort_segments(segs);
  double covered_to = y;
  for (const auto& s : segs) {
    if (s.end() < covered_to) continue;
    if (s.start > covered_to) break;
    covered_to = std::max(covered_to, s.end());
    if (covered_to >= n) return {true, std::nullopt};
  }
  return {false, covered_to};
}

template <std::size_t Dim>
RightCoverage right_covered(const Configuration<Dim>& config, double y, const SlabParams& params) {
  return right_covered(right_segments(config, params.k), y, params.n);
}

/// s p / (1 - s (1 - p)) when p > 1 - 1/s, else +inf.
inline double geometric_moment(double s_bar, double p) {
  if (!(s_bar >= 1.0)) throw std::invalid_argument("geometric_moment: s_bar must be >= 1");
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("geometric_moment: p must lie in (0, 1]");
  const double denom = 1.0 - s_bar * (1.0 - p);
  if (!(p > 1.0 - 1.0 / s_bar) || denom <= 0.0) return std::numeric_limits<double>::infinity();
  return s_bar * p / denom;
}

/// Poisson left endpoints on [0, horizon] with i.i.d. lengths from law_tilde.
inline std::vector<RightSegment> segment_model_1d(double z_eff, const RadiusLaw& law_tilde, double horizon,
                                                  Rng& rng) {
  if (!(z_eff > 0.0)) throw std::invalid_argument("segment_model_1d: z_eff must be positive");
  if (!(horizon > 0.0)) throw std::invalid_argument("segment_model_1d: horizon must be positive");
  const std::size_t count = poisson_count(z_eff * horizon, rng);
  std::vector<RightSegment> out(count);
  for (auto& s : out) {
    s.start = horizon * uniform01(rng);
    s.length = law_tilde.sample(rng);
  }
  return out;
}

/// Calls f with std::integral_constant<std::size_t, d> for d in {1, 2, 3}.
template <class F>
decltype(auto) with_dimension(int d, F&& f) {
  switch (d) {
    case 1: return f(std::integral_constant<std::size_t, 1>{});
    case 2: return f(std::integral_constant<std::size_t, 2>{});
    case 3: return f(std::integral_constant<std::size_t, 3>{});
    default: throw std::invalid_argument("dimension must be 1, 2 or 3");
  }
}

template <std::size_t Dim>
Window<Dim> slab_window(double lo, double hi, double k) {
  return Window<Dim>::slab(lo, hi, k);
}

/// Poisson sample on ]0, n] x [0, k]^(d-1), reduced to its right segments.
inline std::vector<RightSegment> sample_slab_segments(const SlabParams& params, Rng& rng) {
  params.validate();
  return with_dimension(params.d, [&](auto dim) {
    constexpr std::size_t D = decltype(dim)::value;
    return right_segments(sample_poisson(slab_window<D>(0.0, params.n, params.k), params.z, params.law, rng),
                          params.k);
  });
}

struct SlabReplica {
  std::size_t n_cc_right = 0;
  bool right_edge_reached = false;
  /// Same sample restricted to centers in ]0, n/2].
  std::size_t n_cc_right_half = 0;
  bool right_edge_reached_half = false;
};

inline SlabReplica slab_replica(const SlabParams& params, Rng& rng) {
  auto segs = sample_slab_segments(params, rng);
  SlabReplica r;
  const auto full = right_structure(segs);
  r.n_cc_right = full.n_cc;
  r.right_edge_reached = full.n_cc > 0 && full.reach >= params.n;
  const double half = params.n / 2.0;
  std::erase_if(segs, [&](const RightSegment& s) { return s.start > half; });
  const auto h = right_structure(segs);
  r.n_cc_right_half = h.n_cc;
  r.right_edge_reached_half = h.n_cc > 0 && h.reach >= half;
  return r;
}

class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PEstimate {
  double p_hat = 0.0;
  double stderr_ = 0.0;
  /// 1 / mean(N_cc^r) over nonempty samples and its delta-method error.
  double inverse_mean = 0.0;
  double inverse_mean_stderr = 0.0;
  /// The same estimate at horizon n/2.
  double p_hat_half = 0.0;
  double right_edge_fraction = 0.0;
  std::size_t nonempty = 0;
  std::size_t replicas = 0;
  /// Per-replica N_cc^r of the nonempty samples.
  std::vector<std::size_t> counts;
};

inline PEstimate estimate_p(const SlabParams& params, std::size_t replicas, Rng& rng) {
  if (replicas < 100) throw std::invalid_argument("estimate_p: need at least 100 replicas");
  PEstimate e;
  e.replicas = replicas;
  std::size_t ones = 0;
  std::size_t ones_half = 0;
  std::size_t nonempty_half = 0;
  std::size_t edge = 0;
  stats::RunningStats ncc;
  for (std::size_t i = 0; i < replicas; ++i) {
    const auto r = slab_replica(params, rng);
    if (r.n_cc_right_half > 0) {
      ++nonempty_half;
      if (r.n_cc_right_half == 1) ++ones_half;
    }
    if (r.n_cc_right == 0) continue;
    e.counts.push_back(r.n_cc_right);
    ncc.add(static_cast<double>(r.n_cc_right));
    if (r.n_cc_right == 1) ++ones;
    if (r.right_edge_reached) ++edge;
  }
  e.nonempty = e.counts.size();
  if (e.nonempty == 0) throw ExperimentError("estimate_p: every slab sample was empty; z too small");
  const double m = static_cast<double>(e.nonempty);
  e.p_hat = static_cast<double>(ones) / m;
  e.stderr_ = std::sqrt(e.p_hat * (1.0 - e.p_hat) / m);
  e.inverse_mean = 1.0 / ncc.mean();
  e.inverse_mean_stderr = ncc.standard_error() / (ncc.mean() * ncc.mean());
  e.p_hat_half = nonempty_half > 0 ? static_cast<double>(ones_half) / static_cast<double>(nonempty_half) : 0.0;
  e.right_edge_fraction = static_cast<double>(edge) / m;
  return e;
}

/// sup_j |F_emp(j) - F_geom(j)| over integers j, F_geom(j) = 1 - (1 - p)^j.
inline double geometric_ks_distance(const std::vector<std::size_t>& counts, double p) {
  if (counts.empty()) return 0.0;
  const std::size_t top = *std::max_element(counts.begin(), counts.end());
  std::vector<std::size_t> hist(top + 1, 0);
  for (std::size_t c : counts) ++hist[c];
  const double n = static_cast<double>(counts.size());
  double d = 0.0;
  std::size_t below = 0;
  for (std::size_t j = 0; j <= top; ++j) {
    below += hist[j];
    const double f_geo = 1.0 - std::pow(1.0 - p, static_cast<double>(j));
    d = std::max(d, std::abs(static_cast<double>(below) / n - f_geo));
  }
  return d;
}

struct MomentPoint {
  double n = 0.0;
  double mean_ncc = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
};

struct MomentCheckReport {
  std::vector<MomentPoint> points;
  double slope = 0.0;
  double slope_stderr = 0.0;
  /// No significant growth: slope - 3 SE <= 0.
  bool pass = false;
};

/// Mean N_cc of the free-boundary CRCM on ]-n, n] x [0, k]^(d-1) for each n,
/// then a weighted trend test on mean N_cc against n. Each replica runs
/// `sweeps` sweeps and records N_cc after every sweep of the second half.
inline MomentCheckReport crcm_ncc_moment_check(const SlabParams& base, const std::vector<double>& ns,
                                               std::size_t sweeps, std::size_t replicas, Rng& rng) {
  if (ns.size() < 3) throw std::invalid_argument("crcm_ncc_moment_check: need at least 3 values of n");
  if (sweeps < 2 || replicas == 0) {
    throw std::invalid_argument("crcm_ncc_moment_check: need sweeps >= 2 and replicas >= 1");
  }
  MomentCheckReport report;
  for (double n : ns) {
    SlabParams p = base;
    p.n = n;
    p.validate();
    // Replica means are independent; within-chain correlation stays inside.
    stats::RunningStats across;
    with_dimension(p.d, [&](auto dim) {
      constexpr std::size_t D = decltype(dim)::value;
      for (std::size_t r = 0; r < replicas; ++r) {
        CrcmChain<D> chain(slab_window<D>(-n, n, p.k), p.z, p.law, p.q);
        stats::RunningStats within;
        for (std::size_t s = 0; s < sweeps; ++s) {
          chain.sweep(rng);
          if (s >= sweeps / 2) within.add(static_cast<double>(chain.n_cc()));
        }
        across.add(within.mean());
      }
    });
    MomentPoint mp;
    mp.n = n;
    mp.mean_ncc = across.mean();
    mp.stderr_ = replicas > 1 ? across.standard_error() : 0.0;
    mp.samples = replicas;
    report.points.push_back(mp);
  }
  // OLS slope with heteroscedastic variance sum (n_i - nbar)^2 se_i^2 / Sxx^2.
  double nbar = 0.0;
  for (const auto& p : report.points) nbar += p.n;
  nbar /= static_cast<double>(report.points.size());
  double sxx = 0.0;
  double sxy = 0.0;
  double var = 0.0;
  for (const auto& p : report.points) {
    const double dx = p.n - nbar;
    sxx += dx * dx;
    sxy += dx * p.mean_ncc;
    var += dx * dx * p.stderr_ * p.stderr_;
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("crcm_ncc_moment_check: values of n must not all coincide");
  report.slope = sxy / sxx;
  report.slope_stderr = std::sqrt(var) / sxx;
  report.pass = report.slope - 3.0 * report.slope_stderr <= 0.0;
  return report;
}

}  // namespace cwr

#pragma once

// Birth-death Metropolis chains.
//
// WrChain targets the finite-volume Widom-Rowlinson specification: a birth of
// color i is accepted with probability min(1, z_i |W| / (n_i + 1)) when the
// result stays authorized, a death of color i with min(1, n_i / (z_i |W|)).
//
// CrcmChain targets the continuum random cluster measure q^{N_cc} / Z against
// the Poisson process: the same ratios multiplied by q^{dN_cc}. Component
// labels are maintained incrementally; births merge labels, deaths run a
// local BFS around the removed ball and fall back to a BFS of its whole
// component only when the local one cannot prove the neighbors still joined.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cwr/geometry.hpp"
#include "cwr/multitype.hpp"
#include "cwr/radius_law.hpp"
#include "cwr/random.hpp"
#include "cwr/sampling.hpp"
#include "cwr/spatial_grid.hpp"

namespace cwr {

struct ChainOptions {
  /// Truncates the state space: births that would exceed this count (per
  /// color for WR, in total for CRCM) are rejected.
  std::optional<std::size_t> max_points;
};

struct ChainStats {
  std::uint64_t birth_proposals = 0;
  std::uint64_t birth_accepts = 0;
  std::uint64_t death_proposals = 0;
  std::uint64_t death_accepts = 0;

  double acceptance_rate() const {
    const auto p = birth_proposals + death_proposals;
    return p == 0 ? 0.0 : static_cast<double>(birth_accepts + death_accepts) / static_cast<double>(p);
  }
};

namespace detail {

/// Cell size from a deterministic batch of radius draws.
inline double law_cell_size(const std::vector<const RadiusLaw*>& laws) {
  Rng rng(0x63656c6cULL);
  std::vector<double> radii;
  for (const auto* law : laws) {
    for (int i = 0; i < 257; ++i) radii.push_back(law->sample(rng));
  }
  std::vector<double> finite;
  for (double r : radii) {
    if (std::isfinite(r)) finite.push_back(r);
  }
  return SpatialGrid<1>::default_cell_size(std::move(finite));
}

/// Swap-remove of ball `idx` from a (configuration, grid) pair.
template <std::size_t Dim>
void swap_remove(Configuration<Dim>& balls, SpatialGrid<Dim>& grid, std::size_t idx) {
  const std::size_t last = balls.size() - 1;
  grid.erase(idx, balls[idx]);
  if (idx != last) {
    grid.erase(last, balls[last]);
    grid.insert(idx, balls[last]);
    balls[idx] = balls[last];
  }
  balls.pop_back();
}

/// Membership marks that reset in O(1) by bumping an epoch.
class StampSet {
 public:
  void next(std::size_t n) {
    if (marks_.size() < n) marks_.resize(n, 0);
    if (++epoch_ == 0) {
      std::fill(marks_.begin(), marks_.end(), 0);
      epoch_ = 1;
    }
  }
  void set(std::size_t j) { marks_[j] = epoch_; }
  bool has(std::size_t j) const { return marks_[j] == epoch_; }

 private:
  std::vector<std::uint32_t> marks_;
  std::uint32_t epoch_ = 0;
};

}  // namespace detail

template <std::size_t Dim>
class WrChain {
 public:
  /// Starts from the empty configuration inside the window.
  WrChain(GibbsParams<Dim> params, MultiTypeConfiguration<Dim> boundary_balls, ChainOptions options = {})
      : params_(std::move(params)), boundary_(std::move(boundary_balls)), options_(options) {
    params_.validate();
    if (boundary_.q() == 0) boundary_ = MultiTypeConfiguration<Dim>(params_.q);
    if (boundary_.q() != params_.q) throw std::invalid_argument("wr chain: boundary must have q colors");
    std::vector<const RadiusLaw*> laws;
    for (const auto& l : params_.laws) laws.push_back(&l);
    const double cell = detail::law_cell_size(laws);
    state_ = MultiTypeConfiguration<Dim>(params_.q);
    for (std::size_t i = 0; i < params_.q; ++i) {
      grids_.emplace_back(cell);
      boundary_grids_.push_back(SpatialGrid<Dim>::build(boundary_.colors[i], cell));
    }
    volume_ = params_.window.volume();
    const double expected = params_.total_activity() * volume_;
    proposals_per_sweep_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(expected)));
  }

  const MultiTypeConfiguration<Dim>& state() const { return state_; }
  const MultiTypeConfiguration<Dim>& boundary_balls() const { return boundary_; }
  const GibbsParams<Dim>& params() const { return params_; }
  const ChainStats& stats() const { return stats_; }
  std::size_t proposals_per_sweep() const { return proposals_per_sweep_; }

  void step(Rng& rng) {
    const std::size_t i = uniform_index(rng, params_.q);
    const bool birth = uniform01(rng) < 0.5;
    const double u = uniform01(rng);
    auto& balls = state_.colors[i];
    const double n = static_cast<double>(balls.size());
    if (birth) {
      ++stats_.birth_proposals;
      MarkedPoint<Dim> p;
      p.center = uniform_point(params_.window, rng);
      p.radius = params_.laws[i].sample(rng);
      if (options_.max_points && balls.size() >= *options_.max_points) return;
      if (!(u < params_.z[i] * volume_ / (n + 1.0))) return;
      if (!authorized_birth(i, p)) return;
      grids_[i].insert(balls.size(), p);
      balls.push_back(p);
      ++stats_.birth_accepts;
    } else {
      ++stats_.death_proposals;
      if (balls.empty()) return;
      const std::size_t idx = uniform_index(rng, balls.size());
      if (!(u * params_.z[i] * volume_ < n)) return;
      detail::swap_remove(balls, grids_[i], idx);
      ++stats_.death_accepts;
    }
  }

  void sweep(Rng& rng) {
    for (std::size_t s = 0; s < proposals_per_sweep_; ++s) step(rng);
  }

  /// Runs `sweeps` sweeps, calling observe(state) after each.
  template <class Observer>
  void run(std::size_t sweeps, Rng& rng, Observer&& observe) {
    for (std::size_t s = 0; s < sweeps; ++s) {
      sweep(rng);
      observe(state_);
    }
  }

 private:
  bool authorized_birth(std::size_t color, const MarkedPoint<Dim>& p) const {
    for (std::size_t j = 0; j < params_.q; ++j) {
      if (j == color) continue;
      if (overlaps_any(grids_[j], state_.colors[j], p)) return false;
      if (overlaps_any(boundary_grids_[j], boundary_.colors[j], p)) return false;
    }
    return true;
  }

  static bool overlaps_any(const SpatialGrid<Dim>& grid, const Configuration<Dim>& balls,
                           const MarkedPoint<Dim>& p) {
    bool hit = false;
    grid.for_each_candidate(p, [&](std::size_t j) {
      if (!hit && balls_overlap(p, balls[j])) hit = true;
    });
    return hit;
  }

  GibbsParams<Dim> params_;
  MultiTypeConfiguration<Dim> boundary_;
  ChainOptions options_;
  MultiTypeConfiguration<Dim> state_;
  std::vector<SpatialGrid<Dim>> grids_;
  std::vector<SpatialGrid<Dim>> boundary_grids_;
  double volume_ = 1.0;
  std::size_t proposals_per_sweep_ = 1;
  ChainStats stats_;
};

/// Final state of a WR chain started empty, with boundary balls drawn from
/// the params' boundary condition.
template <std::size_t Dim>
MultiTypeConfiguration<Dim> mcmc_wr_run(const GibbsParams<Dim>& params, std::size_t sweeps, Rng& rng) {
  if (sweeps == 0) throw std::invalid_argument("mcmc_wr_run: sweeps must be >= 1");
  WrChain<Dim> chain(params, build_boundary(params, rng));
  for (std::size_t s = 0; s < sweeps; ++s) chain.sweep(rng);
  return chain.state();
}

template <std::size_t Dim>
class CrcmChain {
 public:
  CrcmChain(const Window<Dim>& window, double z, RadiusLaw law, double q, ChainOptions options = {})
      : window_(window),
        z_(z),
        law_(std::move(law)),
        q_(q),
        options_(options),
        grid_(detail::law_cell_size({&law_})) {
    if (!(q >= 1.0) || !std::isfinite(q)) throw std::invalid_argument("crcm chain: q must be >= 1");
    if (!(z >= 0.0) || !std::isfinite(z)) throw std::invalid_argument("crcm chain: z must be >= 0");
    volume_ = window_.volume();
    proposals_per_sweep_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(z_ * volume_)));
    log_q_ = std::log(q_);
    local_reach_ = 2.0 * grid_.cell_size();
  }

  const Configuration<Dim>& state() const { return balls_; }
  std::size_t n_cc() const { return n_cc_; }
  const ChainStats& stats() const { return stats_; }
  std::size_t proposals_per_sweep() const { return proposals_per_sweep_; }
  const Window<Dim>& window() const { return window_; }

  /// Current component id of each ball (ids are internal, not canonical).
  const std::vector<std::size_t>& component_ids() const { return comp_id_; }

  void step(Rng& rng) {
    const bool birth = uniform01(rng) < 0.5;
    const double u = uniform01(rng);
    const double n = static_cast<double>(balls_.size());
    if (birth) {
      ++stats_.birth_proposals;
      MarkedPoint<Dim> p;
      p.center = uniform_point(window_, rng);
      p.radius = law_.sample(rng);
      if (options_.max_points && balls_.size() >= *options_.max_points) return;
      collect_neighbors(p, balls_.size());
      distinct_components();
      const long delta = 1 - static_cast<long>(touched_.size());
      const double ratio = z_ * volume_ / (n + 1.0) * std::exp(log_q_ * static_cast<double>(delta));
      if (!(u < ratio)) return;
      accept_birth(p);
      ++stats_.birth_accepts;
    } else {
      ++stats_.death_proposals;
      if (balls_.empty()) return;
      const std::size_t idx = uniform_index(rng, balls_.size());
      const std::size_t groups = groups_after_removal(idx);
      const long delta = static_cast<long>(groups) - 1;
      const double ratio = n / (z_ * volume_) * std::exp(log_q_ * static_cast<double>(delta));
      if (!(u < ratio)) return;
      accept_death(idx, groups);
      ++stats_.death_accepts;
    }
  }

  void sweep(Rng& rng) {
    for (std::size_t s = 0; s < proposals_per_sweep_; ++s) step(rng);
  }

  template <class Observer>
  void run(std::size_t sweeps, Rng& rng, Observer&& observe) {
    for (std::size_t s = 0; s < sweeps; ++s) {
      sweep(rng);
      observe(balls_);
    }
  }

 private:
  // Overlap partners of p among current balls, skipping index `skip`.
  void collect_neighbors(const MarkedPoint<Dim>& p, std::size_t skip) {
    neighbors_.clear();
    grid_.for_each_candidate(p, [&](std::size_t j) {
      if (j != skip && balls_overlap(p, balls_[j])) neighbors_.push_back(j);
    });
  }

  // Distinct component ids among neighbors_ into touched_.
  void distinct_components() {
    touched_.clear();
    for (std::size_t j : neighbors_) {
      const std::size_t c = comp_id_[j];
      if (std::find(touched_.begin(), touched_.end(), c) == touched_.end()) touched_.push_back(c);
    }
  }

  std::size_t new_component() {
    if (!free_ids_.empty()) {
      const std::size_t c = free_ids_.back();
      free_ids_.pop_back();
      return c;
    }
    members_.emplace_back();
    return members_.size() - 1;
  }

  void add_member(std::size_t c, std::size_t ball) {
    comp_id_[ball] = c;
    member_pos_[ball] = members_[c].size();
    members_[c].push_back(ball);
  }

  void remove_member(std::size_t ball) {
    const std::size_t c = comp_id_[ball];
    auto& m = members_[c];
    const std::size_t pos = member_pos_[ball];
    m[pos] = m.back();
    member_pos_[m[pos]] = pos;
    m.pop_back();
    if (m.empty()) free_ids_.push_back(c);
  }

  void accept_birth(const MarkedPoint<Dim>& p) {
    const std::size_t idx = balls_.size();
    balls_.push_back(p);
    grid_.insert(idx, p);
    comp_id_.push_back(0);
    member_pos_.push_back(0);
    if (touched_.empty()) {
      add_member(new_component(), idx);
      ++n_cc_;
      return;
    }
    // Merge everything into the largest touched component.
    std::size_t target = touched_[0];
    for (std::size_t c : touched_) {
      if (members_[c].size() > members_[target].size()) target = c;
    }
    for (std::size_t c : touched_) {
      if (c == target) continue;
      for (std::size_t b : members_[c]) {
        comp_id_[b] = target;
        member_pos_[b] = members_[target].size();
        members_[target].push_back(b);
      }
      members_[c].clear();
      free_ids_.push_back(c);
    }
    add_member(target, idx);
    n_cc_ -= touched_.size() - 1;
  }

  // Number of pieces the component of ball idx splits into when idx is
  // removed (0 if idx is isolated). Leaves the pieces in groups_ when it had
  // to run the full search.
  std::size_t groups_after_removal(std::size_t idx) {
    groups_.clear();
    collect_neighbors(balls_[idx], idx);
    if (neighbors_.size() <= 1) return neighbors_.size();

    // Local search among balls near idx: a path found there is a real path.
    region_.next(balls_.size());
    MarkedPoint<Dim> region = balls_[idx];
    region.radius += local_reach_;
    grid_.for_each_candidate(region, [&](std::size_t j) { region_.set(j); });
    seen_.next(balls_.size());
    seen_.set(idx);
    bfs(neighbors_[0], idx, true);
    const bool joined = std::all_of(neighbors_.begin(), neighbors_.end(),
                                    [&](std::size_t j) { return seen_.has(j); });
    if (joined) return 1;

    // Full search of idx's component.
    seen_.next(balls_.size());
    seen_.set(idx);
    for (std::size_t j : neighbors_) {
      if (seen_.has(j)) continue;
      bfs(j, idx, false);
      groups_.emplace_back(queue_.begin(), queue_.end());
    }
    return groups_.size();
  }

  // BFS over overlap edges from `start`, never entering `skip`; restricted to
  // the local region when `local_only`. Visited balls end up in queue_.
  void bfs(std::size_t start, std::size_t skip, bool local_only) {
    queue_.clear();
    queue_.push_back(start);
    seen_.set(start);
    std::size_t head = 0;
    while (head < queue_.size()) {
      const std::size_t u = queue_[head++];
      grid_.for_each_candidate(balls_[u], [&](std::size_t v) {
        if (v == skip || seen_.has(v)) return;
        if (local_only && !region_.has(v)) return;
        if (!balls_overlap(balls_[u], balls_[v])) return;
        seen_.set(v);
        queue_.push_back(v);
      });
    }
  }

  void accept_death(std::size_t idx, std::size_t groups) {
    remove_member(idx);
    if (groups == 0) {
      --n_cc_;
    } else if (groups >= 2) {
      // groups_ holds the pieces; the largest keeps the id.
      std::size_t keep = 0;
      for (std::size_t g = 1; g < groups_.size(); ++g) {
        if (groups_[g].size() > groups_[keep].size()) keep = g;
      }
      for (std::size_t g = 0; g < groups_.size(); ++g) {
        if (g == keep) continue;
        const std::size_t fresh = new_component();
        for (std::size_t b : groups_[g]) {
          remove_member(b);
          add_member(fresh, b);
        }
      }
      n_cc_ += groups - 1;
    }
    // Move the last ball into slot idx.
    const std::size_t last = balls_.size() - 1;
    if (idx != last) {
      const std::size_t lc = comp_id_[last];
      members_[lc][member_pos_[last]] = idx;
      comp_id_[idx] = lc;
      member_pos_[idx] = member_pos_[last];
    }
    detail::swap_remove(balls_, grid_, idx);
    comp_id_.pop_back();
    member_pos_.pop_back();
  }

  Window<Dim> window_;
  double z_;
  RadiusLaw law_;
  double q_;
  double log_q_ = 0.0;
  ChainOptions options_;
  SpatialGrid<Dim> grid_;
  double volume_ = 1.0;
  double local_reach_ = 1.0;
  std::size_t proposals_per_sweep_ = 1;
  ChainStats stats_;

  Configuration<Dim> balls_;
  std::vector<std::size_t> comp_id_;
  std::vector<std::size_t> member_pos_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<std::size_t> free_ids_;
  std::size_t n_cc_ = 0;

  // Scratch.
  std::vector<std::size_t> neighbors_;
  std::vector<std::size_t> touched_;
  std::vector<std::vector<std::size_t>> groups_;
  std::vector<std::size_t> queue_;
  detail::StampSet seen_;
  detail::StampSet region_;
};

template <std::size_t Dim>
Configuration<Dim> mcmc_crcm_run(const Window<Dim>& window, double z, const RadiusLaw& law, double q,
                                 std::size_t sweeps, Rng& rng) {
  if (sweeps == 0) throw std::invalid_argument("mcmc_crcm_run: sweeps must be >= 1");
  CrcmChain<Dim> chain(window, z, law, q);
  for (std::size_t s = 0; s < sweeps; ++s) chain.sweep(rng);
  return chain.state();
}

}  // namespace cwr

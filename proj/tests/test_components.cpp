#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cwr/components.hpp"
#include "cwr/sampling.hpp"
#include "test_support.hpp"

using namespace cwr;

TEST(ConnectedComponents, Examples) {
  EXPECT_EQ(connected_components(Configuration<2>{}).n_cc, 0u);
  const Configuration<2> disjoint = {{{0.0, 0.0}, 1.0}, {{5.0, 0.0}, 1.0}};
  EXPECT_EQ(connected_components(disjoint).n_cc, 2u);
  const Configuration<2> chain = {{{0.0, 0.0}, 1.0}, {{1.8, 0.0}, 1.0}, {{3.6, 0.0}, 1.0}};
  ASSERT_FALSE(balls_overlap(chain[0], chain[2]));
  const auto lab = connected_components(chain);
  EXPECT_EQ(lab.n_cc, 1u);
  EXPECT_EQ(lab.labels, (std::vector<std::size_t>{0, 0, 0}));
  ASSERT_EQ(lab.boxes.size(), 1u);
  EXPECT_DOUBLE_EQ(lab.boxes[0].lower[0], -1.0);
  EXPECT_DOUBLE_EQ(lab.boxes[0].upper[0], 4.6);
}

TEST(ConnectedComponents, LabelsAreSmallestIndex) {
  const Configuration<1> c = {{{10.0}, 0.5}, {{0.0}, 0.5}, {{10.8}, 0.5}, {{0.9}, 0.5}};
  const auto lab = connected_components(c);
  EXPECT_EQ(lab.labels, (std::vector<std::size_t>{0, 1, 0, 1}));
  EXPECT_EQ(lab.roots, (std::vector<std::size_t>{0, 1}));
}

template <std::size_t Dim>
void check_bfs(std::uint64_t seed) {
  Rng rng(seed);
  for (int t = 0; t < 100; ++t) {
    const auto c = oracle::random_configuration<Dim>(rng, 200, 20.0);
    const auto lab = connected_components(c);
    ASSERT_EQ(lab.n_cc, oracle::bfs_components(c)) << "dim " << Dim << " trial " << t;
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (std::size_t j = i + 1; j < c.size(); ++j) {
        if (oracle::touch(c[i], c[j])) {
          ASSERT_EQ(lab.labels[i], lab.labels[j]);
        }
      }
    }
  }
}

TEST(ConnectedComponents, MatchesBruteForceBfs) {
  check_bfs<1>(1);
  check_bfs<2>(2);
  check_bfs<3>(3);
}

TEST(ConnectedComponents, AddingABallChangesCountByAtMostOneUp) {
  Rng rng(4);
  for (int t = 0; t < 300; ++t) {
    auto c = oracle::random_configuration<2>(rng, 60, 10.0);
    const std::size_t before = connected_components(c).n_cc;
    c.push_back({{10.0 * uniform01(rng), 10.0 * uniform01(rng)}, 2.0 * uniform01(rng)});
    const std::size_t after = connected_components(c).n_cc;
    EXPECT_LE(after, before + 1);
    EXPECT_GE(after, 1u);
  }
}

TEST(ConnectedComponents, SubadditiveUnderSplits) {
  Rng rng(5);
  for (int t = 0; t < 300; ++t) {
    const auto c = oracle::random_configuration<2>(rng, 80, 10.0);
    Configuration<2> left, right;
    for (const auto& p : c) (p.center[0] < 5.0 ? left : right).push_back(p);
    EXPECT_LE(connected_components(c).n_cc, connected_components(left).n_cc + connected_components(right).n_cc);
  }
}

TEST(Crossing, Examples) {
  const auto w = Window<2>::cube(0.0, 4.0);
  EXPECT_FALSE(crossing_exists(Configuration<2>{}, w, 0));
  EXPECT_TRUE(crossing_exists(Configuration<2>{{{2.0, 2.0}, 2.0}}, w, 0));
  EXPECT_FALSE(crossing_exists(Configuration<2>{{{2.0, 2.0}, 1.9}}, w, 0));
  const Configuration<2> bar = {{{0.5, 1.0}, 0.5}, {{1.5, 1.0}, 0.6}, {{2.6, 1.0}, 0.6}, {{3.5, 1.0}, 0.5}};
  EXPECT_TRUE(crossing_exists(bar, w, 0));
  EXPECT_FALSE(crossing_exists(bar, w, 1));
  EXPECT_THROW(crossing_exists(bar, w, 2), std::invalid_argument);
}

TEST(Crossing, ProbabilityNondecreasingInActivity) {
  const auto w = Window<2>::cube(0.0, 6.0);
  const auto law = RadiusLaw::dirac(0.5);
  Rng rng(6);
  const int n = 1000;
  double prev = -1.0, prev_se = 0.0;
  for (double z : {0.6, 1.0, 1.4, 1.8, 2.2}) {
    int hits = 0;
    for (int i = 0; i < n; ++i) hits += crossing_exists(sample_poisson(w, z, law, rng), w, 0) ? 1 : 0;
    const double p = hits / double(n);
    const double se = std::sqrt(std::max(p * (1.0 - p), 1.0 / n) / n);
    if (prev >= 0.0) {
      EXPECT_GE(p, prev - 3.0 * std::hypot(se, prev_se)) << "z " << z;
    }
    prev = p;
    prev_se = se;
  }
  EXPECT_GT(prev, 0.5);
}

TEST(CoveredFraction, Examples) {
  const auto w = Window<2>::cube(0.0, 1.0);
  EXPECT_EQ(covered_fraction(Configuration<2>{}, w, 256), 0.0);
  EXPECT_EQ(covered_fraction(Configuration<2>{{{0.5, 0.5}, 0.75}}, w, 256), 1.0);
  EXPECT_THROW(covered_fraction(Configuration<2>{}, w, 0), std::invalid_argument);
  // Half-plane-like cover: a huge disc whose edge passes through x = 0.5.
  const double f = covered_fraction(Configuration<2>{{{-1e4 + 0.5, 0.5}, 1e4}}, w, 4096);
  EXPECT_NEAR(f, 0.5, 1.0 / std::sqrt(4096.0));
  const double disc = covered_fraction(Configuration<2>{{{0.5, 0.5}, 0.3}}, w, 10000);
  EXPECT_NEAR(disc, M_PI * 0.09, 0.01);
}

TEST(CoveredFraction, MonotoneUnderInclusion) {
  Rng rng(7);
  const auto w = Window<2>::cube(0.0, 10.0);
  for (int t = 0; t < 100; ++t) {
    auto c = oracle::random_configuration<2>(rng, 40, 10.0);
    const double before = covered_fraction(c, w, 1024);
    c.push_back({{10.0 * uniform01(rng), 10.0 * uniform01(rng)}, uniform01(rng)});
    EXPECT_GE(covered_fraction(c, w, 1024), before);
  }
}

TEST(CoveredFraction, HeavyTailCoversWindow) {
  const auto w = Window<2>::cube(0.0, 10.0);
  Rng rng(8);
  int good = 0;
  for (int i = 0; i < 100; ++i) {
    if (covered_fraction(sample_poisson(w, 1.0, RadiusLaw::pareto(1.5, 1.0), rng), w, 4096) >= 0.99) ++good;
  }
  EXPECT_GE(good, 95);
}

TEST(ColorCensus, Examples) {
  MultiTypeConfiguration<2> mono(3);
  mono.colors[1] = {{{0.0, 0.0}, 1.0}, {{3.0, 0.0}, 1.0}};
  auto c = color_census(mono);
  EXPECT_TRUE(c.monochromatic);
  EXPECT_DOUBLE_EQ(c.dominant_fraction, 1.0);
  EXPECT_EQ(c.dominant_color, 1u);

  MultiTypeConfiguration<2> poly(2);
  poly.colors[0] = {{{0.0, 0.0}, 1.0}};
  poly.colors[1] = {{{5.0, 0.0}, 1.0}};
  c = color_census(poly);
  EXPECT_FALSE(c.monochromatic);
  EXPECT_DOUBLE_EQ(c.dominant_fraction, 0.5);

  c = color_census(MultiTypeConfiguration<2>(2));
  EXPECT_TRUE(c.monochromatic);
  EXPECT_DOUBLE_EQ(c.dominant_fraction, 1.0);
  EXPECT_EQ(c.counts, (std::vector<std::size_t>{0, 0}));
}

TEST(ColorCensus, CoveredVolumePerColor) {
  MultiTypeConfiguration<2> mc(2);
  mc.colors[0] = {{{1.0, 1.0}, 5.0}};
  const auto c = color_census(mc, Window<2>::cube(0.0, 2.0), 256);
  ASSERT_EQ(c.covered_volume.size(), 2u);
  EXPECT_DOUBLE_EQ(c.covered_volume[0], 4.0);
  EXPECT_DOUBLE_EQ(c.covered_volume[1], 0.0);
}

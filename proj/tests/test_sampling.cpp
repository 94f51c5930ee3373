#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>
#include <vector>

#include "cwr/components.hpp"
#include "cwr/sampling.hpp"
#include "cwr/stats.hpp"
#include "test_support.hpp"

using namespace cwr;

namespace {

GibbsParams<2> two_color(double z, const RadiusLaw& law, double side) {
  return GibbsParams<2>::symmetric(2, z, law, Window<2>::cube(0.0, side));
}

double proportion_se(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

}  // namespace

TEST(SamplePoisson, ZeroActivityIsEmpty) {
  Rng rng(1);
  EXPECT_TRUE(sample_poisson(Window<2>::cube(0.0, 5.0), 0.0, RadiusLaw::dirac(1.0), rng).empty());
  EXPECT_THROW(sample_poisson(Window<2>::cube(0.0, 5.0), -1.0, RadiusLaw::dirac(1.0), rng), std::invalid_argument);
}

TEST(SamplePoisson, MeanAndEquidispersion) {
  Rng rng(2);
  const auto w = Window<2>::cube(0.0, 2.0);
  stats::RunningStats counts;
  for (int i = 0; i < 10000; ++i) {
    const auto c = sample_poisson(w, 1.5, RadiusLaw::uniform(0.1, 0.2), rng);
    counts.add(static_cast<double>(c.size()));
    for (const auto& p : c) {
      ASSERT_TRUE(w.contains(p.center));
      ASSERT_GE(p.radius, 0.1);
      ASSERT_LE(p.radius, 0.2);
    }
  }
  EXPECT_NEAR(counts.mean(), 6.0, 3.0 * counts.standard_error());
  EXPECT_NEAR(counts.variance() / counts.mean(), 1.0, 0.05);
}

TEST(SamplePoisson, CentersUniform) {
  Rng rng(3);
  std::vector<double> xs;
  for (int i = 0; i < 200; ++i) {
    for (const auto& p : sample_poisson(Window<1>::cube(-1.0, 3.0), 10.0, RadiusLaw::dirac(0.0), rng)) {
      xs.push_back(p.center[0]);
    }
  }
  const double d = stats::ks_statistic(xs, [](double x) { return (x + 1.0) / 4.0; });
  EXPECT_GT(stats::kolmogorov_pvalue(d, xs.size()), 0.001);
}

TEST(SampleMultitype, SingleColorReducesToPoisson) {
  const auto law = RadiusLaw::dirac(0.3);
  const auto w = Window<2>::cube(0.0, 3.0);
  Rng a(4), b(4);
  const auto mc = sample_multitype_poisson(GibbsParams<2>::symmetric(1, 2.0, law, w), a);
  ASSERT_EQ(mc.q(), 1u);
  EXPECT_EQ(mc.colors[0], sample_poisson(w, 2.0, law, b));
}

TEST(SampleMultitype, CountsUncorrelated) {
  Rng rng(5);
  const auto p = two_color(1.0, RadiusLaw::dirac(0.1), 1.0);
  const int n = 10000;
  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    const auto mc = sample_multitype_poisson(p, rng);
    x[i] = static_cast<double>(mc.colors[0].size());
    y[i] = static_cast<double>(mc.colors[1].size());
  }
  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  stats::RunningStats prod;
  for (int i = 0; i < n; ++i) prod.add((x[i] - mx) * (y[i] - my));
  EXPECT_NEAR(prod.mean(), 0.0, 3.0 * prod.standard_error());
}

TEST(SampleMultitype, ZeroActivityColorsStayEmpty) {
  Rng rng(6);
  GibbsParams<2> p;
  p.q = 3;
  p.z = {0.0, 1.0, 0.0};
  p.laws.assign(3, RadiusLaw::dirac(0.2));
  p.window = Window<2>::cube(0.0, 4.0);
  std::size_t middle = 0;
  for (int i = 0; i < 200; ++i) {
    const auto mc = sample_multitype_poisson(p, rng);
    EXPECT_TRUE(mc.colors[0].empty());
    EXPECT_TRUE(mc.colors[2].empty());
    middle += mc.colors[1].size();
  }
  EXPECT_GT(middle, 0u);
}

TEST(IsAuthorized, Examples) {
  MultiTypeConfiguration<2> empty(2);
  EXPECT_TRUE(is_authorized(empty));

  MultiTypeConfiguration<2> same(2);
  same.colors[0] = {{{0.0, 0.0}, 1.0}, {{0.5, 0.0}, 1.0}};
  EXPECT_TRUE(is_authorized(same));

  MultiTypeConfiguration<2> tangent(2);
  tangent.colors[0] = {{{0.0, 0.0}, 1.0}};
  tangent.colors[1] = {{{2.0, 0.0}, 1.0}};
  EXPECT_FALSE(is_authorized(tangent));

  MultiTypeConfiguration<2> apart(2);
  apart.colors[0] = {{{0.0, 0.0}, 1.0}};
  apart.colors[1] = {{{2.0 + 1e-9, 0.0}, 1.0}};
  EXPECT_TRUE(is_authorized(apart));
}

TEST(IsAuthorized, BoundaryBallsMergeIntoTheirColors) {
  MultiTypeConfiguration<2> inside(2);
  inside.colors[0] = {{{0.5, 0.5}, 0.3}};
  MultiTypeConfiguration<2> outside(2);
  outside.colors[1] = {{{-0.1, 0.5}, 0.4}};
  EXPECT_FALSE(is_authorized(inside, outside));
  std::swap(outside.colors[0], outside.colors[1]);
  EXPECT_TRUE(is_authorized(inside, outside));
}

TEST(IsAuthorized, MatchesPairwiseOracle) {
  Rng rng(7);
  for (int t = 0; t < 300; ++t) {
    MultiTypeConfiguration<2> mc(3);
    for (auto& c : mc.colors) c = oracle::random_configuration<2>(rng, 8, 6.0);
    bool ok = true;
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = i + 1; j < 3; ++j) {
        for (const auto& a : mc.colors[i]) {
          for (const auto& b : mc.colors[j]) {
            if (oracle::touch(a, b)) ok = false;
          }
        }
      }
    }
    EXPECT_EQ(is_authorized(mc), ok);
  }
}

TEST(Rejection, OneColorAlwaysAcceptedFirstTime) {
  Rng rng(8);
  const auto p = GibbsParams<2>::symmetric(1, 3.0, RadiusLaw::dirac(0.5), Window<2>::cube(0.0, 3.0));
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_wr_rejection(p, rng, 1).attempts, 1u);
}

TEST(Rejection, TinyWindowSmallActivityAcceptsAlmostAlways) {
  Rng rng(9);
  const auto p = two_color(1e-3, RadiusLaw::dirac(0.5), 0.1);
  std::size_t attempts = 0;
  const int n = 2000;
  for (int i = 0; i < n; ++i) attempts += sample_wr_rejection(p, rng, 100).attempts;
  EXPECT_GT(static_cast<double>(n) / static_cast<double>(attempts), 0.999);
}

TEST(Rejection, AcceptanceFractionReproducibleAcrossRuns) {
  const auto p = two_color(0.5, RadiusLaw::dirac(0.5), 3.0);
  auto acceptance = [&](std::uint64_t seed, int draws) {
    Rng rng(seed);
    int ok = 0;
    for (int i = 0; i < draws; ++i) ok += is_authorized(sample_multitype_poisson(p, rng)) ? 1 : 0;
    return static_cast<double>(ok) / draws;
  };
  const double a = acceptance(10, 20000);
  const double b = acceptance(11, 20000);
  const double se = std::hypot(proportion_se(a, 20000), proportion_se(b, 20000));
  EXPECT_NEAR(a, b, 3.0 * se);

  Rng rng(12);
  std::size_t attempts = 0;
  const int samples = 4000;
  for (int i = 0; i < samples; ++i) attempts += sample_wr_rejection(p, rng, 100000).attempts;
  const double via_sampler = static_cast<double>(samples) / static_cast<double>(attempts);
  EXPECT_NEAR(via_sampler, b, 3.0 * std::hypot(proportion_se(via_sampler, samples), proportion_se(b, 20000)));
}

TEST(Rejection, ExhaustionReportsAttempts) {
  Rng rng(13);
  const auto p = two_color(5.0, RadiusLaw::dirac(1.0), 10.0);
  try {
    sample_wr_rejection(p, rng, 7);
    FAIL() << "expected SamplerError";
  } catch (const SamplerError& e) {
    EXPECT_EQ(e.attempts(), 7u);
  }
  EXPECT_THROW(sample_wr_rejection(p, rng, 0), std::invalid_argument);
}

TEST(Rejection, OutputAuthorized) {
  Rng rng(14);
  const auto p = two_color(0.4, RadiusLaw::uniform(0.2, 0.6), 3.0);
  for (int i = 0; i < 200; ++i) EXPECT_TRUE(is_authorized(sample_wr_rejection(p, rng, 100000).sample));
}

TEST(FkColoring, SingleComponentMonochromeUniform) {
  Rng rng(15);
  const Configuration<2> chain = {{{0.0, 0.0}, 0.6}, {{1.0, 0.0}, 0.6}, {{2.0, 0.0}, 0.6}};
  const std::size_t q = 3;
  const int n = 10000;
  std::vector<int> freq(q, 0);
  for (int i = 0; i < n; ++i) {
    const auto mc = fk_coloring(chain, q, rng);
    std::size_t nonempty = 0;
    for (std::size_t c = 0; c < q; ++c) {
      if (!mc.colors[c].empty()) {
        ++nonempty;
        EXPECT_EQ(mc.colors[c].size(), 3u);
        ++freq[c];
      }
    }
    EXPECT_EQ(nonempty, 1u);
  }
  for (std::size_t c = 0; c < q; ++c) {
    EXPECT_NEAR(freq[c] / double(n), 1.0 / 3.0, 3.0 * proportion_se(1.0 / 3.0, n));
  }
}

TEST(FkColoring, IsolatedBallsColoredIndependently) {
  Rng rng(16);
  const Configuration<1> iso = {{{0.0}, 0.1}, {{1.0}, 0.1}, {{2.0}, 0.1}};
  std::vector<double> observed(8, 0.0);
  const int n = 8000;
  for (int i = 0; i < n; ++i) {
    const auto mc = fk_coloring(iso, 2, rng);
    int code = 0;
    for (const auto& p : mc.colors[1]) code |= 1 << static_cast<int>(std::lround(p.center[0]));
    observed[code] += 1.0;
  }
  const std::vector<double> expected(8, n / 8.0);
  EXPECT_GT(stats::chi_square_pvalue(observed, expected), 0.001);
}

TEST(FkColoring, OutputAuthorizedAndProjectsBack) {
  Rng rng(17);
  for (int t = 0; t < 200; ++t) {
    const auto config = oracle::random_configuration<2>(rng, 40, 8.0);
    const auto mc = fk_coloring(config, 4, rng);
    EXPECT_TRUE(is_authorized(mc));
    auto flat = mc.flatten();
    auto orig = config;
    auto key = [](const MarkedPoint<2>& a, const MarkedPoint<2>& b) {
      return std::tie(a.center[0], a.center[1], a.radius) < std::tie(b.center[0], b.center[1], b.radius);
    };
    std::sort(flat.begin(), flat.end(), key);
    std::sort(orig.begin(), orig.end(), key);
    EXPECT_EQ(flat, orig);
  }
  EXPECT_THROW(fk_coloring(Configuration<2>{}, 0, rng), std::invalid_argument);
}

TEST(BuildBoundary, FreeAndZeroShellEmpty) {
  Rng rng(18);
  auto p = two_color(2.0, RadiusLaw::dirac(0.5), 3.0);
  EXPECT_EQ(build_boundary(p, rng).total(), 0u);
  p.boundary = boundary::Ordered{0, 0.0};
  EXPECT_EQ(build_boundary(p, rng).total(), 0u);
}

TEST(BuildBoundary, OrderedBallsTouchWindowFromOutside) {
  Rng rng(19);
  auto p = two_color(2.0, RadiusLaw::dirac(0.5), 3.0);
  p.boundary = boundary::Ordered{0, 2.0};
  std::size_t total = 0;
  for (int t = 0; t < 50; ++t) {
    const auto b = build_boundary(p, rng);
    EXPECT_TRUE(b.colors[1].empty());
    for (const auto& ball : b.colors[0]) {
      EXPECT_FALSE(p.window.contains(ball.center));
      EXPECT_LE(p.window.distance_to(ball.center), 0.5);
    }
    total += b.colors[0].size();
  }
  // Expected count: z times the area of the 0.5-neighborhood ring.
  const double ring = (4.0 * 3.0 * 0.5 + M_PI * 0.25) * 2.0;
  EXPECT_NEAR(total / 50.0, ring, 4.0 * std::sqrt(ring / 50.0));
}

TEST(BuildBoundary, ExplicitPassthroughAndValidation) {
  Rng rng(20);
  auto p = two_color(1.0, RadiusLaw::dirac(0.5), 3.0);
  MultiTypeConfiguration<2> ext(2);
  ext.colors[1] = {{{-0.2, 1.0}, 0.5}};
  p.boundary = boundary::Explicit<2>{ext};
  EXPECT_EQ(build_boundary(p, rng), ext);
  ext.colors[0] = {{{1.0, 1.0}, 0.5}};
  p.boundary = boundary::Explicit<2>{ext};
  EXPECT_THROW(build_boundary(p, rng), std::invalid_argument);
}

TEST(BuildBoundary, TruncationMass) {
  auto p = two_color(1.0, RadiusLaw::dirac(0.5), 3.0);
  EXPECT_EQ(boundary_truncation_mass(p), 0.0);
  p.boundary = boundary::Ordered{0, 1.0};
  EXPECT_NEAR(boundary_truncation_mass(p), 0.0, 1e-12);
  p.laws[0] = RadiusLaw::pareto(1.5, 0.1);
  EXPECT_TRUE(std::isinf(boundary_truncation_mass(p)));
  p.laws[0] = RadiusLaw::pareto(3.5, 0.1);
  const double m1 = boundary_truncation_mass(p);
  p.boundary = boundary::Ordered{0, 4.0};
  const double m4 = boundary_truncation_mass(p);
  EXPECT_GT(m1, 0.0);
  EXPECT_LT(m4, m1);
}

TEST(Determinism, SameSeedSameSample) {
  const auto p = two_color(0.5, RadiusLaw::exponential(2.0), 3.0);
  Rng a(21), b(21);
  EXPECT_EQ(sample_wr_rejection(p, a, 100000).sample, sample_wr_rejection(p, b, 100000).sample);
  EXPECT_EQ(fk_coloring(sample_poisson(p.window, 2.0, p.laws[0], a), 3, a),
            fk_coloring(sample_poisson(p.window, 2.0, p.laws[0], b), 3, b));
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cwr/analysis.hpp"
#include "cwr/mcmc.hpp"
#include "cwr/sampling.hpp"
#include "cwr/stats.hpp"

using namespace cwr;

namespace {

EntropyBoundInputs reference_inputs() {
  EntropyBoundInputs in;
  in.alpha = {0.5, 0.5};
  in.phi = {0.9, 0.9};
  in.beta = 0.95;
  in.gamma = 0.1;
  in.m_side = 1.0;
  in.dim = 2;
  return in;
}

}  // namespace

TEST(PhiM, DiracClosedForm) {
  Rng rng(1);
  const auto e = phi_m(RadiusLaw::dirac(1.0), 4.0, 2, 1000, rng);
  EXPECT_TRUE(e.exact);
  EXPECT_DOUBLE_EQ(e.value, 0.25);
  EXPECT_EQ(phi_m(RadiusLaw::dirac(2.0), 4.0, 2, 1000, rng).value, 0.0);
  EXPECT_EQ(phi_m(RadiusLaw::dirac(3.0), 4.0, 3, 1000, rng).value, 0.0);
  EXPECT_DOUBLE_EQ(phi_m(RadiusLaw::dirac(0.5), 4.0, 3, 1000, rng).value, 27.0 / 64.0);
}

TEST(PhiM, MonteCarloMatchesClosedForm) {
  Rng rng(2);
  const auto e = phi_m_monte_carlo(RadiusLaw::dirac(1.0), 4.0, 2, 20000, rng);
  EXPECT_FALSE(e.exact);
  EXPECT_GT(e.stderr_, 0.0);
  EXPECT_NEAR(e.value, 0.25, 3.0 * e.stderr_);
}

TEST(PhiM, MonteCarloForUniformRadii) {
  // Inclusion fraction ((m - 2r)/m)^2 averaged over r ~ U(0, 1), m = 4:
  // int_0^1 (1 - r/2)^2 dr = 7/12.
  Rng rng(3);
  const auto e = phi_m(RadiusLaw::uniform(0.0, 1.0), 4.0, 2, 40000, rng);
  EXPECT_NEAR(e.value, 7.0 / 12.0, 3.0 * e.stderr_);
}

TEST(PsiEval, VanishesAtZero) {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    EntropyBoundInputs in;
    const std::size_t q = 2 + uniform_index(rng, 4);
    double s = 0.0;
    for (std::size_t i = 0; i < q; ++i) {
      in.alpha.push_back(uniform01(rng) + 0.01);
      in.phi.push_back(uniform01(rng));
      s += in.alpha.back();
    }
    for (double& a : in.alpha) a /= s;
    in.beta = uniform01(rng);
    in.m_side = 0.5 + 3.0 * uniform01(rng);
    const auto v = psi_eval(in, 0.0);
    EXPECT_EQ(v.value, 0.0);
    double expected = in.alpha_max();
    for (std::size_t i = 0; i < q; ++i) expected -= in.beta * in.alpha[i] * in.phi[i];
    EXPECT_NEAR(v.derivative, expected, 1e-14);
  }
}

TEST(PsiEval, ReferenceDerivativeAtZero) {
  const auto in = reference_inputs();
  EXPECT_NEAR(psi_eval(in, 0.0).derivative, -0.355, 1e-15);
  const double h = 1e-6;
  const double fd = (psi_eval(in, h).value - 0.0) / h;
  EXPECT_NEAR(fd, -0.355, 1e-5);
}

TEST(PsiEval, DerivativeMatchesFiniteDifferences) {
  for (auto in : {reference_inputs(), EntropyBoundInputs{0.0, {0.2, 0.3, 0.5}, 0.8, 0.1, 2.0, 2, {0.95, 0.5, 0.7}}}) {
    for (int k = 0; k < 20; ++k) {
      const double z = 0.05 + 5.0 * k / 19.0 * 0.99;
      const double h = 1e-5;
      const double fd = (psi_eval(in, z + h).value - psi_eval(in, z - h).value) / (2.0 * h);
      EXPECT_NEAR(psi_eval(in, z).derivative, fd, 1e-6) << "z " << z;
    }
  }
}

TEST(PsiEval, StableForLargeArguments) {
  auto in = reference_inputs();
  in.m_side = 30.0;
  const auto v = psi_eval(in, 50.0);
  EXPECT_TRUE(std::isfinite(v.value));
  EXPECT_TRUE(std::isfinite(v.derivative));
  // Dominant exponential: log S ~ z a |M| phi + log 2.
  const double vol = 900.0;
  const double approx = 50.0 * 0.5 - 0.95 / vol * (50.0 * 0.5 * vol * 0.9 + std::log(2.0));
  EXPECT_NEAR(v.value, approx, 1e-9);
}

TEST(MonoBound, Examples) {
  EXPECT_DOUBLE_EQ(mono_entropy_lower_bound(2.0, {0.5, 0.5}), 1.0);
  EXPECT_DOUBLE_EQ(mono_entropy_lower_bound(7.0, {1.0, 0.0, 0.0}), 0.0);
  EXPECT_DOUBLE_EQ(mono_entropy_lower_bound(3.0, {0.2, 0.3, 0.5}), 1.5);
}

TEST(MonoBound, PermutationInvariant) {
  std::vector<double> a = {0.1, 0.2, 0.3, 0.4};
  const double ref = mono_entropy_lower_bound(2.5, a);
  while (std::next_permutation(a.begin(), a.end())) EXPECT_DOUBLE_EQ(mono_entropy_lower_bound(2.5, a), ref);
}

TEST(EntropyUpperEstimate, SingleColorIsZero) {
  Rng rng(5);
  const auto p = GibbsParams<2>::symmetric(1, 2.0, RadiusLaw::dirac(0.5), Window<2>::cube(0.0, 3.0));
  const auto e = entropy_upper_estimate(p, 200, rng);
  EXPECT_EQ(e.z_hat, 1.0);
  EXPECT_EQ(e.estimate, 0.0);
  EXPECT_EQ(e.accepted, 200u);
}

TEST(EntropyUpperEstimate, VanishesForSmallActivity) {
  Rng rng(6);
  const auto p = GibbsParams<2>::symmetric(2, 1e-4, RadiusLaw::dirac(0.5), Window<2>::cube(0.0, 3.0));
  EXPECT_LT(entropy_upper_estimate(p, 2000, rng).estimate, 1e-3);
}

TEST(EntropyUpperEstimate, BelowTotalActivityAndReproducible) {
  const auto p = GibbsParams<2>::symmetric(2, 0.5, RadiusLaw::dirac(0.5), Window<2>::cube(0.0, 3.0));
  Rng a(7), b(8);
  const auto ea = entropy_upper_estimate(p, 20000, a);
  const auto eb = entropy_upper_estimate(p, 20000, b);
  EXPECT_LE(ea.estimate, 1.0 + 3.0 * ea.stderr_);
  EXPECT_GT(ea.estimate, 0.0);
  EXPECT_NEAR(ea.estimate, eb.estimate, 3.0 * std::hypot(ea.stderr_, eb.stderr_));
}

TEST(EntropyUpperEstimate, ZeroAcceptancesFail) {
  Rng rng(9);
  const auto p = GibbsParams<2>::symmetric(2, 3.0, RadiusLaw::dirac(1.0), Window<2>::cube(0.0, 10.0));
  EXPECT_THROW(entropy_upper_estimate(p, 50, rng), EstimatorError);
}

TEST(SmallZThreshold, ReferenceInputsCertify) {
  const auto in = reference_inputs();
  const auto c = small_z_threshold(in);
  EXPECT_GT(c.z_star, 0.0);
  EXPECT_FALSE(c.capped);
  EXPECT_NEAR(psi_eval(in, c.z_star).value, 0.0, 1e-9);
  EXPECT_DOUBLE_EQ(c.z_certified, c.z_star / 2.0);
  EXPECT_LT(c.psi_at_z, 0.0);
  EXPECT_GT(c.margin, 0.0);
}

TEST(SmallZThreshold, DegenerateAlphaFails) {
  auto in = reference_inputs();
  in.alpha = {1.0, 0.0};
  EXPECT_THROW(small_z_threshold(in), CertificateError);
}

TEST(SmallZThreshold, LargerPhiExtendsRegime) {
  auto lo = reference_inputs();
  lo.phi = {0.8, 0.8};
  auto hi = reference_inputs();
  hi.phi = {0.95, 0.95};
  EXPECT_GT(small_z_threshold(hi).z_star, small_z_threshold(lo).z_star);
}

TEST(SmallZThreshold, CertifiedRegimeIsSelfConsistent) {
  for (auto in : {reference_inputs(), EntropyBoundInputs{0.0, {0.2, 0.3, 0.5}, 0.9, 0.1, 2.0, 2, {0.95, 0.95, 0.95}}}) {
    const auto c = small_z_threshold(in);
    for (int k = 1; k < 50; ++k) {
      const double z = c.z_star * k / 50.0;
      EXPECT_LT(entropy_upper_bound(in, z), mono_entropy_lower_bound(z, in.alpha)) << "z " << z;
    }
  }
}

TEST(DefaultSlack, SatisfiesConstraintChain) {
  for (double amax : {0.34, 0.5, 0.7, 0.9, 0.99}) {
    const auto s = default_slack(amax);
    EntropyBoundInputs in;
    const auto others = static_cast<std::size_t>(std::ceil((1.0 - amax) / amax - 1e-12));
    in.alpha.assign(others, (1.0 - amax) / static_cast<double>(others));
    in.alpha.push_back(amax);
    in.phi.assign(in.alpha.size(), 1.0);
    ASSERT_DOUBLE_EQ(in.alpha_max(), amax);
    in.beta = s.beta;
    in.gamma = s.gamma;
    EXPECT_TRUE(check_constraint_chain(in, s.epsilon).empty()) << amax;
  }
  EXPECT_THROW(default_slack(1.0), std::invalid_argument);
  EntropyBoundInputs bad = reference_inputs();
  bad.gamma = 0.9;
  EXPECT_FALSE(check_constraint_chain(bad, 0.25).empty());
}

TEST(Domination, IdenticalStreamsPass) {
  Rng rng(10);
  std::vector<double> xs(500);
  for (double& x : xs) x = uniform01(rng);
  const auto r = domination_test({"x"}, {xs}, {xs});
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.entries[0].z_score, 0.0, 1e-12);
}

TEST(Domination, WrBelowPoisson) {
  const auto p = GibbsParams<2>::symmetric(2, 1.0, RadiusLaw::dirac(0.5), Window<2>::cube(0.0, 4.0));
  Rng rng(11);
  std::vector<double> wr, poisson;
  for (int i = 0; i < 400; ++i) {
    wr.push_back(static_cast<double>(mcmc_wr_run(p, 40, rng).total()));
    poisson.push_back(static_cast<double>(sample_multitype_poisson(p, rng).total()));
  }
  const auto r = domination_test({"total_count"}, {wr}, {poisson});
  EXPECT_TRUE(r.pass);
  EXPECT_LT(r.entries[0].z_score, 0.0);
  EXPECT_LT(r.entries[0].dominated_mean, r.entries[0].dominating_mean);
}

TEST(Domination, InflatedStreamFails) {
  Rng rng(12);
  std::vector<double> base(300), inflated(300);
  for (int i = 0; i < 300; ++i) {
    base[i] = uniform01(rng);
    inflated[i] = uniform01(rng) + 0.5;
  }
  const auto r = domination_test({"x", "y"}, {base, inflated}, {base, base});
  EXPECT_FALSE(r.pass);
  EXPECT_TRUE(r.entries[0].pass);
  EXPECT_FALSE(r.entries[1].pass);
}

TEST(Domination, TooFewSamplesRejected) {
  const std::vector<double> few(50, 1.0), many(200, 1.0);
  EXPECT_THROW(domination_test({"x"}, {few}, {many}), std::invalid_argument);
}

#pragma once

// Quadrature oracles for the radius-law condition checkers.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cwr/radius_law.hpp"

namespace cwr::oracle {

using boost::math::quadrature::gauss_kronrod;

// Reference densities and survival functions, written independently of the
// library's inverse-CDF code.
struct Reference {
  std::string name;
  RadiusLaw law;
  std::function<double(double)> density;   // continuous part
  std::function<double(double)> survival;  // P(R > r)
  double atom = 0.0;                       // point mass (Dirac only)
  double atom_at = 0.0;
  std::vector<double> kinks = {};          // where the density jumps
};

inline std::vector<Reference> reference_table() {
  std::vector<Reference> t;
  t.push_back({"dirac", RadiusLaw::dirac(0.7), [](double) { return 0.0; },
               [](double r) { return r < 0.7 ? 1.0 : 0.0; }, 1.0, 0.7});
  t.push_back({"uniform", RadiusLaw::uniform(0.2, 1.4), [](double r) { return r >= 0.2 && r <= 1.4 ? 1.0 / 1.2 : 0.0; },
               [](double r) { return r <= 0.2 ? 1.0 : r >= 1.4 ? 0.0 : (1.4 - r) / 1.2; }, 0.0, 0.0, {0.2, 1.4}});
  t.push_back({"exponential", RadiusLaw::exponential(2.0), [](double r) { return 2.0 * std::exp(-2.0 * r); },
               [](double r) { return std::exp(-2.0 * r); }});
  for (double a : {0.5, 1.5, 3.5}) {
    t.push_back({"pareto" + std::to_string(a), RadiusLaw::pareto(a, 1.0),
                 [a](double r) { return r >= 1.0 ? a * std::pow(r, -a - 1.0) : 0.0; },
                 [a](double r) { return r <= 1.0 ? 1.0 : std::pow(r, -a); }, 0.0, 0.0, {1.0}});
  }
  return t;
}

inline double gk(const std::function<double(double)>& f, double a, double b) {
  return gauss_kronrod<double, 61>::integrate(f, a, b, 20, 1e-12);
}

// E[R^d] for the continuous part, split at the density's jumps.
inline double moment_oracle(const Reference& ref, int d) {
  auto f = [&](double r) {
    const double p = ref.density(r);
    return p == 0.0 ? 0.0 : std::pow(r, d) * p;
  };
  double total = 0.0;
  double lo = 0.0;
  for (double k : ref.kinks) {
    total += gk(f, lo, k);
    lo = k;
  }
  total += gk(f, lo, 64.0);
  return total + boost::math::quadrature::exp_sinh<double>().integrate(f, 64.0, INFINITY);
}

// Doubling-cutoff oracle: `increment(L)` is the contribution of [L, 2L]. The
// integral is finite when increments decay geometrically and divergent when
// they stay flat or grow; anything in between is inconclusive.
inline std::optional<bool> doubling_says_finite(const std::function<double(double)>& increment, int j0, int j1) {
  double prev = increment(std::ldexp(1.0, j0));
  double ratio = 0.0;
  for (int j = j0 + 1; j <= j1; ++j) {
    const double cur = increment(std::ldexp(1.0, j));
    if (prev <= 1e-300) return true;
    ratio = cur / prev;
    prev = cur;
  }
  if (ratio < 0.9) return true;
  if (ratio >= 0.99) return false;
  return std::nullopt;
}

/// int r^d Q(dr) < inf, decided by quadrature.
inline std::optional<bool> moment_finite(const Reference& ref, int d) {
  if (ref.atom > 0.0) return true;
  auto piece = [&](double L) { return gk([&](double r) { return std::pow(r, d) * ref.density(r); }, L, 2.0 * L); };
  return doubling_says_finite(piece, 8, 40);
}

/// int_1^inf exp(-int_1^u S) du < inf, decided by quadrature.
inline std::optional<bool> coverage_finite(const Reference& ref) {
  auto piece = [&](double L) {
    const double g0 = gk(ref.survival, 1.0, L);
    return gk([&](double u) { return std::exp(-(g0 + gk(ref.survival, L, u))); }, L, 2.0 * L);
  };
  return doubling_says_finite(piece, 4, 18);
}

}  // namespace cwr::oracle

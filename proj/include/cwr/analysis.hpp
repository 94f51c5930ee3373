#pragma once

// Entropy arithmetic for the small-activity polychromaticity argument and the
// statistical checks built around it.
//
// With |M| = m_side^d the volume of the sub-box, the comparison function is
//
//   Psi(z) = z max_i a_i - (beta / |M|) log(1 - q + sum_i exp(z a_i |M| phi_i))
//
// and the free-boundary entropy upper bound is z(1 - max a) + Psi(z), so any z
// with Psi(z) < 0 sits strictly below the monochromatic lower bound
// z(1 - max a).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "cwr/radius_law.hpp"
#include "cwr/random.hpp"
#include "cwr/sampling.hpp"
#include "cwr/stats.hpp"

namespace cwr {

struct EntropyBoundInputs {
  /// Total activity (the per-color activities are z * alpha_i).
  double z = 0.0;
  std::vector<double> alpha;
  double beta = 0.9;
  double gamma = 0.1;
  double m_side = 1.0;
  int dim = 2;
  /// phi_{m,i}: fraction of placements in the sub-box whose ball fits inside.
  std::vector<double> phi;

  std::size_t q() const { return alpha.size(); }
  double alpha_max() const { return *std::max_element(alpha.begin(), alpha.end()); }
  double sub_volume() const { return std::pow(m_side, dim); }

  void validate() const {
    if (alpha.empty() || phi.size() != alpha.size()) {
      throw std::invalid_argument("entropy inputs: alpha and phi must be nonempty and of equal length");
    }
    double s = 0.0;
    for (double a : alpha) {
      if (!(a >= 0.0)) throw std::invalid_argument("entropy inputs: alpha entries must be >= 0");
      s += a;
    }
    if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("entropy inputs: alpha must sum to 1");
    for (double f : phi) {
      if (!(f >= 0.0 && f <= 1.0)) throw std::invalid_argument("entropy inputs: phi must lie in [0, 1]");
    }
    if (!(m_side > 0.0) || dim < 1) throw std::invalid_argument("entropy inputs: bad sub-box");
  }
};

/// The three slack parameters of the argument.
struct SlackParameters {
  double epsilon = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
};

/// eps = (1 - a_max)/2, gamma = (1 - eps - a_max)/2 and beta halfway between
/// (eps + a_max)/(1 - gamma) and 1.
inline SlackParameters default_slack(double alpha_max) {
  if (!(alpha_max > 0.0 && alpha_max < 1.0)) {
    throw std::invalid_argument("default_slack: alpha_max must lie in (0, 1)");
  }
  SlackParameters s;
  s.epsilon = (1.0 - alpha_max) / 2.0;
  s.gamma = (1.0 - s.epsilon - alpha_max) / 2.0;
  const double floor_beta = (s.epsilon + alpha_max) / (1.0 - s.gamma);
  s.beta = floor_beta + (1.0 - floor_beta) / 2.0;
  return s;
}

/// Violated links of the chain eps < 1 - a_max, gamma < 1 - eps - a_max,
/// eps + a_max <= beta (1 - gamma), beta < 1, phi_i >= 1 - gamma. Empty when
/// everything holds.
inline std::vector<std::string> check_constraint_chain(const EntropyBoundInputs& in, double epsilon) {
  std::vector<std::string> bad;
  const double amax = in.alpha_max();
  if (!(epsilon > 0.0 && epsilon < 1.0 - amax)) bad.emplace_back("epsilon < 1 - alpha_max");
  if (!(in.gamma > 0.0 && in.gamma < 1.0 - epsilon - amax)) bad.emplace_back("gamma < 1 - epsilon - alpha_max");
  if (!(epsilon + amax <= in.beta * (1.0 - in.gamma))) bad.emplace_back("epsilon + alpha_max <= beta (1 - gamma)");
  if (!(in.beta > 0.0 && in.beta < 1.0)) bad.emplace_back("0 < beta < 1");
  for (double f : in.phi) {
    if (f < 1.0 - in.gamma) {
      bad.emplace_back("phi_i >= 1 - gamma");
      break;
    }
  }
  return bad;
}

struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
  bool exact = false;
};

inline Estimate phi_m_monte_carlo(const RadiusLaw& law, double m_side, int d, std::size_t probes, Rng& rng) {
  if (probes == 0) throw std::invalid_argument("phi_m: need at least one probe");
  std::size_t inside = 0;
  for (std::size_t s = 0; s < probes; ++s) {
    const double r = law.sample(rng);
    bool fits = true;
    for (int a = 0; a < d; ++a) {
      const double x = m_side * uniform01(rng);
      if (x < r || x > m_side - r) fits = false;
    }
    if (fits) ++inside;
  }
  const double p = static_cast<double>(inside) / static_cast<double>(probes);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(probes)), false};
}

/// phi_m = P(B(X, R) inside [0, m]^d) for X uniform in the box, R ~ law.
/// Closed form for Dirac laws, Monte Carlo otherwise.
inline Estimate phi_m(const RadiusLaw& law, double m_side, int d, std::size_t probes, Rng& rng) {
  if (!(m_side > 0.0)) throw std::invalid_argument("phi_m: m_side must be positive");
  if (d < 1) throw std::invalid_argument("phi_m: dimension must be >= 1");
  if (auto* dirac = law.get_if<law::Dirac>()) {
    const double free = m_side - 2.0 * dirac->r0;
    return {free > 0.0 ? std::pow(free / m_side, d) : 0.0, 0.0, true};
  }
  return phi_m_monte_carlo(law, m_side, d, probes, rng);
}

struct PsiValue {
  double value = 0.0;
  double derivative = 0.0;
};

/// Psi at z and its derivative
///   Psi'(z) = max a - beta sum_i a_i phi_i e_i / (1 - q + sum_i e_i),
/// e_i = exp(z a_i |M| phi_i), evaluated with a shifted log-sum-exp.
inline PsiValue psi_eval(const EntropyBoundInputs& in, double z) {
  in.validate();
  if (!(z >= 0.0)) throw std::invalid_argument("psi_eval: z must be >= 0");
  const double vol = in.sub_volume();
  const std::size_t q = in.q();
  std::vector<double> t(q);
  double tmax = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    t[i] = z * in.alpha[i] * vol * in.phi[i];
    tmax = std::max(tmax, t[i]);
  }
  // S = 1 - q + sum e^{t_i} = e^{tmax} (sum e^{t_i - tmax} + (1 - q) e^{-tmax})
  double scaled = (1.0 - static_cast<double>(q)) * std::exp(-tmax);
  double weighted = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    const double e = std::exp(t[i] - tmax);
    scaled += e;
    weighted += in.alpha[i] * in.phi[i] * e;
  }
  const double log_s = tmax + std::log(scaled);
  PsiValue out;
  out.value = z * in.alpha_max() - in.beta / vol * log_s;
  out.derivative = in.alpha_max() - in.beta * weighted / scaled;
  return out;
}

/// Lower bound z (1 - max a) on the specific entropy of any monochromatic
/// stationary measure.
inline double mono_entropy_lower_bound(double z, const std::vector<double>& alpha) {
  if (alpha.empty()) throw std::invalid_argument("mono_entropy_lower_bound: empty alpha");
  return z * (1.0 - *std::max_element(alpha.begin(), alpha.end()));
}

/// Entropy upper bound of the free-boundary measure, z - (beta/|M|) log(...).
inline double entropy_upper_bound(const EntropyBoundInputs& in, double z) {
  return z * (1.0 - in.alpha_max()) + psi_eval(in, z).value;
}

struct Certificate {
  double z_star = 0.0;
  /// The triple below is evaluated at z_certified = z_star / 2.
  double z_certified = 0.0;
  double psi_at_z = 0.0;
  double bound_at_z = 0.0;
  /// mono lower bound minus upper bound; positive when certified.
  double margin = 0.0;
  /// No sign change found up to the search cap; z_star is the cap.
  bool capped = false;
};

class CertificateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// First positive root z* of Psi: every z in (0, z*) has Psi(z) < 0 and hence
/// an upper bound strictly below the monochromatic lower bound.
inline Certificate small_z_threshold(const EntropyBoundInputs& in, double z_cap = 1.0e6) {
  const PsiValue at0 = psi_eval(in, 0.0);
  if (!(at0.derivative < 0.0)) {
    throw CertificateError("small_z_threshold: Psi'(0) >= 0, no polychromatic certificate");
  }
  // Scan outward for the first sign change, then bisect.
  const double scale = 1.0 / in.sub_volume();
  double lo = 0.0;
  double hi = 0.0;
  bool found = false;
  double step = scale * 1e-3;
  for (double z = step; z <= z_cap; z += step) {
    if (psi_eval(in, z).value >= 0.0) {
      hi = z;
      found = true;
      break;
    }
    lo = z;
    step *= 1.05;
  }
  Certificate c;
  if (!found) {
    c.capped = true;
    c.z_star = lo;
  } else {
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (psi_eval(in, mid).value < 0.0) lo = mid;
      else hi = mid;
    }
    c.z_star = hi;
  }
  if (lo <= 0.0) throw CertificateError("small_z_threshold: Psi is not negative near 0 at machine precision");
  c.z_certified = 0.5 * c.z_star;
  c.psi_at_z = psi_eval(in, c.z_certified).value;
  c.bound_at_z = entropy_upper_bound(in, c.z_certified);
  c.margin = mono_entropy_lower_bound(c.z_certified, in.alpha) - c.bound_at_z;
  return c;
}

class EstimatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EntropyEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  double z_hat = 0.0;
  std::size_t accepted = 0;
  std::size_t replicas = 0;
};

/// -log(Z_hat)/|W| with Z_hat the fraction of authorized multi-type Poisson
/// draws (given boundary balls), and its delta-method standard error.
template <std::size_t Dim>
EntropyEstimate entropy_upper_estimate(const GibbsParams<Dim>& params, std::size_t replicas, Rng& rng) {
  if (replicas == 0) throw std::invalid_argument("entropy_upper_estimate: replicas must be >= 1");
  const auto boundary_balls = build_boundary(params, rng);
  std::size_t accepted = 0;
  for (std::size_t r = 0; r < replicas; ++r) {
    if (is_authorized(sample_multitype_poisson(params, rng), boundary_balls)) ++accepted;
  }
  if (accepted == 0) {
    throw EstimatorError("entropy_upper_estimate: no authorized draw; window too large for this estimator");
  }
  EntropyEstimate e;
  e.replicas = replicas;
  e.accepted = accepted;
  const double n = static_cast<double>(replicas);
  e.z_hat = static_cast<double>(accepted) / n;
  const double vol = params.window.volume();
  e.estimate = -std::log(e.z_hat) / vol;
  e.stderr_ = std::sqrt((1.0 - e.z_hat) / (e.z_hat * n)) / vol;
  return e;
}

struct DominationEntry {
  std::string name;
  double dominated_mean = 0.0;
  double dominating_mean = 0.0;
  double stderr_ = 0.0;
  double z_score = 0.0;
  bool pass = true;
};

struct DominationReport {
  std::vector<DominationEntry> entries;
  bool pass = true;
};

/// One-sided check that each increasing observable has a dominated-side mean
/// no larger than the dominating-side mean plus three standard errors.
/// observables[k] holds the per-sample values of observable k.
inline DominationReport domination_test(const std::vector<std::string>& names,
                                        const std::vector<std::vector<double>>& dominated,
                                        const std::vector<std::vector<double>>& dominating) {
  if (names.size() != dominated.size() || names.size() != dominating.size()) {
    throw std::invalid_argument("domination_test: one sample vector per observable on each side");
  }
  DominationReport report;
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (dominated[k].size() < 100 || dominating[k].size() < 100) {
      throw std::invalid_argument("domination_test: need at least 100 samples per side");
    }
    const auto a = stats::summarize(dominated[k]);
    const auto b = stats::summarize(dominating[k]);
    DominationEntry e;
    e.name = names[k];
    e.dominated_mean = a.mean();
    e.dominating_mean = b.mean();
    e.stderr_ = std::hypot(a.standard_error(), b.standard_error());
    const double diff = a.mean() - b.mean();
    e.z_score = e.stderr_ > 0.0 ? diff / e.stderr_ : 0.0;
    e.pass = diff <= 3.0 * e.stderr_;
    report.pass = report.pass && e.pass;
    report.entries.push_back(e);
  }
  return report;
}

}  // namespace cwr

#pragma once

// Radius distributions Q on [0, inf): sampling, CDF/survival, the
// integrability classification int r^d Q(dr) < inf, the slab coverage
// condition int_1^inf exp(-int_1^u Q(]r,inf[) dr) du < inf, and the
// transformed-radius law used on slabs.

#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>

#include <boost/math/special_functions/factorials.hpp>

#include "cwr/random.hpp"

namespace cwr {

class RadiusLaw;

namespace law {

struct Dirac {
  double r0;
};
struct Uniform {
  double a;
  double b;
};
struct Exponential {
  double rate;
};
/// Survival (r / xmin)^-alpha for r >= xmin.
struct ParetoTail {
  double alpha;
  double xmin;
};
/// Atom of mass p0 at zero, remainder distributed as `rest`.
struct AtomMixture {
  double p0;
  std::shared_ptr<const RadiusLaw> rest;
};
/// Law of sqrt(max(R^2 - shift_sq, 0)) with R ~ base.
struct Transformed {
  std::shared_ptr<const RadiusLaw> base;
  double shift_sq;
};

}  // namespace law

class RadiusLaw {
 public:
  using Kind = std::variant<law::Dirac, law::Uniform, law::Exponential, law::ParetoTail,
                            law::AtomMixture, law::Transformed>;

  static RadiusLaw dirac(double r0) { return RadiusLaw(law::Dirac{r0}); }
  static RadiusLaw uniform(double a, double b) { return RadiusLaw(law::Uniform{a, b}); }
  static RadiusLaw exponential(double rate) { return RadiusLaw(law::Exponential{rate}); }
  static RadiusLaw pareto(double alpha, double xmin) { return RadiusLaw(law::ParetoTail{alpha, xmin}); }
  static RadiusLaw atom_mixture(double p0, RadiusLaw rest) {
    return RadiusLaw(law::AtomMixture{p0, std::make_shared<const RadiusLaw>(std::move(rest))});
  }
  static RadiusLaw transformed(RadiusLaw base, double shift_sq) {
    return RadiusLaw(law::Transformed{std::make_shared<const RadiusLaw>(std::move(base)), shift_sq});
  }

  explicit RadiusLaw(Kind kind) : kind_(std::move(kind)) { validate(); }

  const Kind& kind() const { return kind_; }

  template <class T>
  const T* get_if() const {
    return std::get_if<T>(&kind_);
  }

  double sample(Rng& rng) const {
    return std::visit([&](const auto& k) { return sample_impl(k, rng); }, kind_);
  }

  /// P(R <= r).
  double cdf(double r) const {
    if (r < 0.0) return 0.0;
    return std::visit([&](const auto& k) { return cdf_impl(k, r); }, kind_);
  }

  /// P(R > r); computed directly so that tails keep their precision.
  double survival(double r) const {
    if (r < 0.0) return 1.0;
    return std::visit([&](const auto& k) { return survival_impl(k, r); }, kind_);
  }

  /// Q({0}).
  double atom_at_zero() const { return cdf(0.0); }

  std::string describe() const {
    return std::visit([](const auto& k) { return describe_impl(k); }, kind_);
  }

 private:
  void validate() const {
    auto bad = [](const char* what) { throw std::invalid_argument(std::string("radius law: ") + what); };
    auto finite_pos = [](double x) { return std::isfinite(x) && x > 0.0; };
    std::visit(
        [&](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, law::Dirac>) {
            if (!(std::isfinite(k.r0) && k.r0 >= 0.0)) bad("dirac radius must be finite and >= 0");
          } else if constexpr (std::is_same_v<T, law::Uniform>) {
            if (!(std::isfinite(k.a) && k.a >= 0.0 && std::isfinite(k.b) && k.b > k.a))
              bad("uniform requires 0 <= a < b");
          } else if constexpr (std::is_same_v<T, law::Exponential>) {
            if (!finite_pos(k.rate)) bad("exponential rate must be positive");
          } else if constexpr (std::is_same_v<T, law::ParetoTail>) {
            if (!finite_pos(k.alpha) || !finite_pos(k.xmin)) bad("pareto alpha and xmin must be positive");
          } else if constexpr (std::is_same_v<T, law::AtomMixture>) {
            if (!(k.p0 >= 0.0 && k.p0 < 1.0)) bad("atom mass p0 must lie in [0, 1)");
            if (!k.rest) bad("atom mixture needs a remainder law");
          } else {
            if (!(std::isfinite(k.shift_sq) && k.shift_sq >= 0.0)) bad("transform shift must be >= 0");
            if (!k.base) bad("transformed law needs a base law");
          }
        },
        kind_);
  }

  static double sample_impl(const law::Dirac& k, Rng&) { return k.r0; }
  static double sample_impl(const law::Uniform& k, Rng& rng) { return k.a + (k.b - k.a) * uniform01(rng); }
  static double sample_impl(const law::Exponential& k, Rng& rng) {
    return -std::log1p(-uniform01(rng)) / k.rate;
  }
  static double sample_impl(const law::ParetoTail& k, Rng& rng) {
    return k.xmin * std::pow(1.0 - uniform01(rng), -1.0 / k.alpha);
  }
  static double sample_impl(const law::AtomMixture& k, Rng& rng) {
    return uniform01(rng) < k.p0 ? 0.0 : k.rest->sample(rng);
  }
  static double sample_impl(const law::Transformed& k, Rng& rng) {
    const double r = k.base->sample(rng);
    const double t = r * r - k.shift_sq;
    return t > 0.0 ? std::sqrt(t) : 0.0;
  }

  static double cdf_impl(const law::Dirac& k, double r) { return r >= k.r0 ? 1.0 : 0.0; }
  static double cdf_impl(const law::Uniform& k, double r) {
    if (r <= k.a) return 0.0;
    if (r >= k.b) return 1.0;
    return (r - k.a) / (k.b - k.a);
  }
  static double cdf_impl(const law::Exponential& k, double r) { return -std::expm1(-k.rate * r); }
  static double cdf_impl(const law::ParetoTail& k, double r) {
    return r < k.xmin ? 0.0 : 1.0 - std::pow(r / k.xmin, -k.alpha);
  }
  static double cdf_impl(const law::AtomMixture& k, double r) { return k.p0 + (1.0 - k.p0) * k.rest->cdf(r); }
  static double cdf_impl(const law::Transformed& k, double r) {
    return k.base->cdf(std::sqrt(r * r + k.shift_sq));
  }

  static double survival_impl(const law::Dirac& k, double r) { return r >= k.r0 ? 0.0 : 1.0; }
  static double survival_impl(const law::Uniform& k, double r) { return 1.0 - cdf_impl(k, r); }
  static double survival_impl(const law::Exponential& k, double r) { return std::exp(-k.rate * r); }
  static double survival_impl(const law::ParetoTail& k, double r) {
    return r < k.xmin ? 1.0 : std::pow(r / k.xmin, -k.alpha);
  }
  static double survival_impl(const law::AtomMixture& k, double r) {
    return (1.0 - k.p0) * k.rest->survival(r);
  }
  static double survival_impl(const law::Transformed& k, double r) {
    return k.base->survival(std::sqrt(r * r + k.shift_sq));
  }

  static std::string fmt(double x) {
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
  }
  static std::string describe_impl(const law::Dirac& k) { return "dirac(r0=" + fmt(k.r0) + ")"; }
  static std::string describe_impl(const law::Uniform& k) {
    return "uniform(a=" + fmt(k.a) + ",b=" + fmt(k.b) + ")";
  }
  static std::string describe_impl(const law::Exponential& k) { return "exponential(rate=" + fmt(k.rate) + ")"; }
  static std::string describe_impl(const law::ParetoTail& k) {
    return "pareto(alpha=" + fmt(k.alpha) + ",xmin=" + fmt(k.xmin) + ")";
  }
  static std::string describe_impl(const law::AtomMixture& k) {
    return "atom_mixture(p0=" + fmt(k.p0) + "," + k.rest->describe() + ")";
  }
  static std::string describe_impl(const law::Transformed& k) {
    return "transformed(shift_sq=" + fmt(k.shift_sq) + "," + k.base->describe() + ")";
  }

  Kind kind_;
};

inline double sample_radius(const RadiusLaw& law, Rng& rng) { return law.sample(rng); }

// ---------------------------------------------------------------------------
// Integrability

enum class Integrability { Integrable, NonIntegrable };

struct IntegrabilityReport {
  int dim = 1;
  Integrability classification = Integrability::Integrable;
  /// int r^d Q(dr); +inf when non-integrable.
  double moment_estimate = 0.0;
};

namespace detail {

/// E[R^d] for the closed-form families; NaN when no closed form is known.
inline double closed_form_moment(const RadiusLaw& law, int d) {
  const double inf = std::numeric_limits<double>::infinity();
  if (auto* k = law.get_if<law::Dirac>()) return std::pow(k->r0, d);
  if (auto* k = law.get_if<law::Uniform>()) {
    return (std::pow(k->b, d + 1) - std::pow(k->a, d + 1)) / ((d + 1) * (k->b - k->a));
  }
  if (auto* k = law.get_if<law::Exponential>()) {
    return boost::math::factorial<double>(static_cast<unsigned>(d)) / std::pow(k->rate, d);
  }
  if (auto* k = law.get_if<law::ParetoTail>()) {
    if (k->alpha <= d) return inf;
    return k->alpha * std::pow(k->xmin, d) / (k->alpha - d);
  }
  if (auto* k = law.get_if<law::AtomMixture>()) return (1.0 - k->p0) * closed_form_moment(*k->rest, d);
  return std::numeric_limits<double>::quiet_NaN();
}

/// E[R^d] = int_0^inf d t^(d-1) S(t) dt on a geometric grid, for derived laws.
inline double numeric_moment(const RadiusLaw& law, int d) {
  // Shift the grid so that it starts at 0: t = e^s - 1.
  const int segments = 20000;
  const double s_max = std::log(1.0e8);
  const double h = s_max / segments;
  auto f = [&](double s) {
    const double t = std::expm1(s);
    return d * std::pow(t, d - 1) * law.survival(t) * std::exp(s);
  };
  double total = 0.0;
  for (int i = 0; i < segments; ++i) {
    const double a = i * h;
    total += h / 6.0 * (f(a) + 4.0 * f(a + 0.5 * h) + f(a + h));
  }
  return total;
}

}  // namespace detail

/// Analytic classification of int r^d Q(dr) < inf.
inline IntegrabilityReport classify_integrability(const RadiusLaw& law, int d) {
  if (d < 1) throw std::invalid_argument("classify_integrability: dimension must be >= 1");
  const double inf = std::numeric_limits<double>::infinity();
  if (auto* k = law.get_if<law::Transformed>()) {
    // r~ <= r and r~ ~ r at infinity: same class as the base.
    auto base = classify_integrability(*k->base, d);
    IntegrabilityReport out{d, base.classification, inf};
    if (base.classification == Integrability::Integrable) out.moment_estimate = detail::numeric_moment(law, d);
    return out;
  }
  if (auto* k = law.get_if<law::AtomMixture>()) {
    auto rest = classify_integrability(*k->rest, d);
    rest.moment_estimate *= (1.0 - k->p0);
    return rest;
  }
  double m = detail::closed_form_moment(law, d);
  return IntegrabilityReport{d, std::isinf(m) ? Integrability::NonIntegrable : Integrability::Integrable, m};
}

// ---------------------------------------------------------------------------
// Coverage condition int_1^inf exp(-int_1^u S(r) dr) du < inf

enum class Verdict { Converges, Diverges, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Converges: return "converges";
    case Verdict::Diverges: return "diverges";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct CoverageReport {
  Verdict verdict = Verdict::Inconclusive;
  bool analytic = false;
  /// Value of the outer integral (extrapolated), +inf when divergent.
  double integral_estimate = 0.0;
  /// Upper limit used by the numeric evaluation.
  double cutoff = 0.0;

  bool holds() const { return verdict == Verdict::Converges; }
};

/// Tail shape of the survival function: either integrable ("light") or
/// S(r) ~ scale * r^-alpha.
struct TailShape {
  bool light = true;
  double alpha = 0.0;
  double scale = 0.0;
};

inline TailShape tail_shape(const RadiusLaw& law) {
  if (auto* k = law.get_if<law::ParetoTail>()) return {false, k->alpha, std::pow(k->xmin, k->alpha)};
  if (auto* k = law.get_if<law::AtomMixture>()) {
    auto t = tail_shape(*k->rest);
    t.scale *= (1.0 - k->p0);
    return t;
  }
  // sqrt(r^2 + s) ~ r, so the transform keeps the tail.
  if (auto* k = law.get_if<law::Transformed>()) return tail_shape(*k->base);
  return {};
}

/// Numeric evaluation with cutoff doubling. The inner and outer integrals are
/// advanced together on a geometric grid; the increments over the last three
/// doublings of the upper limit decide convergence.
inline CoverageReport coverage_integral_numeric(const RadiusLaw& law, double cutoff = 1.0e6) {
  constexpr int kSegmentsPerStage = 1500;
  const double stages[] = {1.0, cutoff / 8.0, cutoff / 4.0, cutoff / 2.0, cutoff};
  double inner = 0.0;
  double outer = 0.0;
  double checkpoints[4] = {};
  auto simpson = [&](double a, double b) {
    return (b - a) / 6.0 * (law.survival(a) + 4.0 * law.survival(0.5 * (a + b)) + law.survival(b));
  };
  for (int s = 0; s < 4; ++s) {
    const double lo = stages[s];
    const double hi = stages[s + 1];
    const double ratio = std::pow(hi / lo, 1.0 / kSegmentsPerStage);
    double a = lo;
    for (int i = 0; i < kSegmentsPerStage; ++i) {
      const double b = (i + 1 == kSegmentsPerStage) ? hi : a * ratio;
      const double m = 0.5 * (a + b);
      const double inner_a = inner;
      const double inner_m = inner_a + simpson(a, m);
      const double inner_b = inner_m + simpson(m, b);
      outer += (b - a) / 6.0 * (std::exp(-inner_a) + 4.0 * std::exp(-inner_m) + std::exp(-inner_b));
      inner = inner_b;
      a = b;
    }
    checkpoints[s] = outer;
  }

  CoverageReport out;
  out.cutoff = cutoff;
  const double d2 = checkpoints[2] - checkpoints[1];
  const double d3 = checkpoints[3] - checkpoints[2];
  const double tail_integrand = std::exp(-inner) * cutoff;
  if (tail_integrand <= 1e-12 * std::max(outer, 1.0) || d3 <= 0.0) {
    out.verdict = Verdict::Converges;
    out.integral_estimate = outer;
    return out;
  }
  const double ratio = d2 > 0.0 ? d3 / d2 : std::numeric_limits<double>::infinity();
  if (ratio >= 0.999) {
    out.verdict = Verdict::Diverges;
    out.integral_estimate = std::numeric_limits<double>::infinity();
  } else if (ratio < 0.9) {
    out.verdict = Verdict::Converges;
    out.integral_estimate = outer + d3 * ratio / (1.0 - ratio);
  } else {
    out.verdict = Verdict::Inconclusive;
    out.integral_estimate = outer;
  }
  return out;
}

/// Coverage condition, decided from the tail shape:
///  - integrable survival: the inner integral is bounded, the integrand tends
///    to a positive constant -> diverges;
///  - S ~ c r^-a with a < 1: inner grows like u^(1-a) -> converges;
///  - a = 1: integrand ~ u^-c, converges iff c > 1;
///  - a > 1: bounded inner -> diverges.
/// The numeric routine supplies the integral value when it is finite.
inline CoverageReport check_coverage_condition(const RadiusLaw& law, double cutoff = 1.0e6) {
  const TailShape tail = tail_shape(law);
  Verdict v;
  if (tail.light || tail.alpha > 1.0) {
    v = Verdict::Diverges;
  } else if (tail.alpha < 1.0) {
    v = Verdict::Converges;
  } else {
    v = tail.scale > 1.0 ? Verdict::Converges : Verdict::Diverges;
  }
  CoverageReport out;
  out.analytic = true;
  out.verdict = v;
  out.cutoff = cutoff;
  if (v == Verdict::Converges) {
    out.integral_estimate = coverage_integral_numeric(law, cutoff).integral_estimate;
  } else {
    out.integral_estimate = std::numeric_limits<double>::infinity();
  }
  return out;
}

/// Both the strict renewal-proof conditions and their conjectured relaxations.
struct ConditionReport {
  CoverageReport coverage;          // strict condition on the survival function
  bool atom_below_inverse_q = false;  // Q({0}) < 1/q
  bool non_integrable = false;        // relaxed coverage condition
  bool atom_below_one = false;        // relaxed atom condition
};

inline ConditionReport check_conditions(const RadiusLaw& law, int q, int d) {
  ConditionReport r;
  r.coverage = check_coverage_condition(law);
  const double atom = law.atom_at_zero();
  r.atom_below_inverse_q = atom < 1.0 / q;
  r.non_integrable = classify_integrability(law, d).classification == Integrability::NonIntegrable;
  r.atom_below_one = atom < 1.0;
  return r;
}

// ---------------------------------------------------------------------------
// Transformed-radius law on a slab of cross-section k

/// Law with CDF r -> Q([0, sqrt(r^2 + (d-1) k^2)]); identity when d = 1.
inline RadiusLaw q_tilde_transform(const RadiusLaw& law, double k, int d) {
  if (!(k > 0.0)) throw std::invalid_argument("q_tilde_transform: k must be positive");
  if (d < 1) throw std::invalid_argument("q_tilde_transform: dimension must be >= 1");
  if (d == 1) return law;
  const double shift = (d - 1) * k * k;
  if (auto* dirac = law.get_if<law::Dirac>()) {
    const double t = dirac->r0 * dirac->r0 - shift;
    return RadiusLaw::dirac(t > 0.0 ? std::sqrt(t) : 0.0);
  }
  if (auto* tr = law.get_if<law::Transformed>()) {
    return RadiusLaw::transformed(*tr->base, tr->shift_sq + shift);
  }
  return RadiusLaw::transformed(law, shift);
}

}  // namespace cwr

#pragma once

// Config-driven experiment runner: JSON config parsing with strict key
// checking, Cartesian sweep plans, per-kind pipelines, replica-parallel
// execution with derived seeds, and CSV / JSON-lines emission.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "json.hpp"

#include "cwr/analysis.hpp"
#include "cwr/components.hpp"
#include "cwr/io.hpp"
#include "cwr/mcmc.hpp"
#include "cwr/radius_law.hpp"
#include "cwr/random.hpp"
#include "cwr/sampling.hpp"
#include "cwr/slab.hpp"
#include "cwr/stats.hpp"

namespace cwr {

inline constexpr const char* kToolVersion = "0.1.0";

using json = nlohmann::json;

enum class ExperimentKind {
  WrSample,
  CrcmSample,
  FkCompare,
  Domination,
  PhaseSweep,
  SlabRenewal,
  EntropyCertificate,
  ConditionCheck,
};

inline const std::vector<std::pair<std::string, ExperimentKind>>& experiment_kinds() {
  static const std::vector<std::pair<std::string, ExperimentKind>> kinds = {
      {"wr-sample", ExperimentKind::WrSample},
      {"crcm-sample", ExperimentKind::CrcmSample},
      {"fk-compare", ExperimentKind::FkCompare},
      {"domination", ExperimentKind::Domination},
      {"phase-sweep", ExperimentKind::PhaseSweep},
      {"slab-renewal", ExperimentKind::SlabRenewal},
      {"entropy-certificate", ExperimentKind::EntropyCertificate},
      {"condition-check", ExperimentKind::ConditionCheck},
  };
  return kinds;
}

inline std::string to_string(ExperimentKind k) {
  for (const auto& [name, kind] : experiment_kinds()) {
    if (kind == k) return name;
  }
  return "?";
}

/// Every violated field of a config, one message each.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> issues)
      : std::runtime_error(join(issues)), issues_(std::move(issues)) {}
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out = "invalid config:";
    for (const auto& s : issues) out += "\n  " + s;
    return out;
  }
  std::vector<std::string> issues_;
};

// ---------------------------------------------------------------------------
// Field reading

namespace detail {

/// Reads fields of one JSON object, recording problems instead of throwing
/// and flagging keys that were never read.
class FieldReader {
 public:
  FieldReader(const json& obj, std::string prefix, std::vector<std::string>& issues)
      : obj_(obj), prefix_(std::move(prefix)), issues_(issues) {
    if (!obj_.is_object()) fail("", "must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.is_object() && obj_.contains(key) && !obj_.at(key).is_null();
  }

  const json* raw(const std::string& key) {
    if (!has(key)) return nullptr;
    return &obj_.at(key);
  }

  std::optional<double> number(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) {
      fail(key, "must be a number");
      return std::nullopt;
    }
    return v->get<double>();
  }

  double number(const std::string& key, double fallback, const std::function<bool(double)>& ok,
                const std::string& rule) {
    auto v = number(key);
    if (!v) return fallback;
    if (!ok(*v)) fail(key, rule);
    return *v;
  }

  double required_number(const std::string& key, const std::function<bool(double)>& ok, const std::string& rule) {
    if (!has(key)) {
      fail(key, "is required");
      return 0.0;
    }
    return number(key, 0.0, ok, rule);
  }

  std::optional<std::uint64_t> unsigned_integer(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number_integer() && v->get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v->get<std::int64_t>());
    if (v->is_number_float()) {
      const double d = v->get<double>();
      if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
    }
    fail(key, "must be a nonnegative integer");
    return std::nullopt;
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback, std::uint64_t minimum) {
    auto v = unsigned_integer(key);
    if (!v) return fallback;
    if (*v < minimum) fail(key, "must be >= " + std::to_string(minimum));
    return *v;
  }

  std::optional<std::string> string(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) {
      fail(key, "must be a string");
      return std::nullopt;
    }
    return v->get<std::string>();
  }

  std::optional<std::vector<double>> number_list(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_array()) {
      fail(key, "must be an array of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    for (const auto& x : *v) {
      if (!x.is_number()) {
        fail(key, "must be an array of numbers");
        return std::nullopt;
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

  void fail(const std::string& key, const std::string& rule) {
    std::string path = prefix_;
    if (!key.empty()) path += path.empty() ? key : "." + key;
    issues_.push_back((path.empty() ? std::string("config") : path) + ": " + rule);
  }

  /// Reports keys that no reader asked for.
  void finish() {
    if (!obj_.is_object()) return;
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) fail(key, "unknown key");
    }
  }

  const std::string& prefix() const { return prefix_; }

 private:
  const json& obj_;
  std::string prefix_;
  std::vector<std::string>& issues_;
  std::set<std::string> seen_;
};

inline auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
inline auto nonnegative = [](double x) { return std::isfinite(x) && x >= 0.0; };

}  // namespace detail

/// Radius law from `{"kind": "...", ...}`; problems go to `issues`.
inline std::optional<RadiusLaw> parse_law(const json& j, const std::string& prefix, std::vector<std::string>& issues) {
  detail::FieldReader r(j, prefix, issues);
  if (!j.is_object()) return std::nullopt;
  const auto kind = r.string("kind");
  const std::size_t before = issues.size();
  std::optional<RadiusLaw> out;
  if (!kind) {
    r.fail("kind", "is required (dirac, uniform, exponential, pareto, atom_mixture)");
  } else if (*kind == "dirac") {
    const double r0 = r.required_number("r0", detail::nonnegative, "must be >= 0");
    if (issues.size() == before) out = RadiusLaw::dirac(r0);
  } else if (*kind == "uniform") {
    const double a = r.required_number("a", detail::nonnegative, "must be >= 0");
    const double b = r.required_number("b", detail::positive, "must be > 0");
    if (issues.size() == before && !(b > a)) r.fail("b", "must exceed a");
    if (issues.size() == before) out = RadiusLaw::uniform(a, b);
  } else if (*kind == "exponential") {
    const double rate = r.required_number("rate", detail::positive, "must be > 0");
    if (issues.size() == before) out = RadiusLaw::exponential(rate);
  } else if (*kind == "pareto") {
    const double alpha = r.required_number("alpha", detail::positive, "must be > 0");
    const double xmin = r.required_number("xmin", detail::positive, "must be > 0");
    if (issues.size() == before) out = RadiusLaw::pareto(alpha, xmin);
  } else if (*kind == "atom_mixture") {
    const double p0 = r.required_number("p0", [](double x) { return x >= 0.0 && x < 1.0; }, "must lie in [0, 1)");
    std::optional<RadiusLaw> rest;
    if (const json* rj = r.raw("rest")) {
      rest = parse_law(*rj, prefix + ".rest", issues);
    } else {
      r.fail("rest", "is required");
    }
    if (issues.size() == before && rest) out = RadiusLaw::atom_mixture(p0, *rest);
  } else {
    r.fail("kind", "unknown law kind '" + *kind + "'");
  }
  r.finish();
  return out;
}

inline json law_to_json(const RadiusLaw& law) {
  if (auto* k = law.get_if<law::Dirac>()) return {{"kind", "dirac"}, {"r0", k->r0}};
  if (auto* k = law.get_if<law::Uniform>()) return {{"kind", "uniform"}, {"a", k->a}, {"b", k->b}};
  if (auto* k = law.get_if<law::Exponential>()) return {{"kind", "exponential"}, {"rate", k->rate}};
  if (auto* k = law.get_if<law::ParetoTail>()) return {{"kind", "pareto"}, {"alpha", k->alpha}, {"xmin", k->xmin}};
  if (auto* k = law.get_if<law::AtomMixture>()) {
    return {{"kind", "atom_mixture"}, {"p0", k->p0}, {"rest", law_to_json(*k->rest)}};
  }
  throw std::invalid_argument("law_to_json: derived laws have no config form");
}

// ---------------------------------------------------------------------------
// Config

struct SweepAxis {
  /// Top-level key or dotted path into a nested object, e.g. "law.alpha".
  std::string name;
  std::vector<json> values;
};

/// Fully typed parameters of one sweep point.
struct PointParams {
  int dim = 2;
  double q = 2.0;
  std::vector<double> z;
  std::vector<RadiusLaw> laws;
  std::vector<double> lower;
  std::vector<double> upper;
  std::string boundary = "free";
  std::size_t boundary_color = 0;
  double shell = 0.0;
  std::string sampler = "mcmc";
  std::size_t sweeps = 200;
  std::size_t burn_in = 100;
  std::size_t max_attempts = 100000;
  std::size_t probes = 1024;
  std::optional<double> threshold;
  // slab
  double n = 8.0;
  double k = 0.5;
  double q_bar = 3.0;
  // entropy certificate
  std::vector<double> alpha;
  double m_side = 4.0;
  std::optional<double> beta;
  std::optional<double> gamma;

  std::size_t colors() const { return static_cast<std::size_t>(q); }
  double volume() const {
    double v = 1.0;
    for (std::size_t a = 0; a < lower.size(); ++a) v *= upper[a] - lower[a];
    return v;
  }

  template <std::size_t Dim>
  Window<Dim> window() const {
    Vec<Dim> lo{};
    Vec<Dim> hi{};
    for (std::size_t a = 0; a < Dim; ++a) {
      lo[a] = lower[a];
      hi[a] = upper[a];
    }
    return Window<Dim>(lo, hi);
  }

  template <std::size_t Dim>
  GibbsParams<Dim> gibbs() const {
    GibbsParams<Dim> p;
    p.q = colors();
    p.z = z;
    p.laws = laws;
    p.window = window<Dim>();
    if (boundary == "ordered") p.boundary = boundary::Ordered{boundary_color, shell};
    return p;
  }

  SlabParams slab() const {
    SlabParams s;
    s.n = n;
    s.k = k;
    s.d = dim;
    s.z = z.front();
    s.law = laws.front();
    s.q = q;
    s.q_bar = q_bar;
    return s;
  }
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::WrSample;
  /// The config as given, kept for the metadata record and per-point parsing.
  json source;
  std::vector<SweepAxis> axes;
  std::size_t replicas = 1;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string output;
  std::string format = "csv";
  std::string dump_dir;
  /// One entry per sweep point, in plan order.
  std::vector<PointParams> points;
};

namespace detail {

inline const std::set<std::string>& run_keys() {
  static const std::set<std::string> keys = {"experiment", "seed", "replicas", "threads", "output",
                                             "format", "dump_dir", "sweep"};
  return keys;
}

inline const std::set<std::string>& parameter_keys() {
  static const std::set<std::string> keys = {
      "dim", "q", "z", "law", "laws", "side", "window", "boundary", "sampler", "sweeps", "burn_in",
      "max_attempts", "probes", "threshold", "n", "k", "q_bar", "alpha", "m_side", "beta", "gamma"};
  return keys;
}

inline std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path) {
    if (c == '.') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

/// Whether `path` names a sweepable parameter of `cfg`.
inline bool known_parameter(const json& cfg, const std::string& path) {
  const auto parts = split_path(path);
  if (parts.empty() || !parameter_keys().count(parts.front())) return false;
  if (parts.size() == 1) return true;
  const json* cur = &cfg;
  for (const auto& p : parts) {
    if (!cur->is_object() || !cur->contains(p)) return false;
    cur = &cur->at(p);
  }
  return true;
}

inline void set_path(json& cfg, const std::string& path, const json& value) {
  json* cur = &cfg;
  for (const auto& p : split_path(path)) cur = &(*cur)[p];
  *cur = value;
}

inline bool is_integer(double x) { return std::isfinite(x) && x == std::floor(x); }

/// Typed parameters of one resolved point; every problem goes to `issues`.
inline PointParams parse_point(const json& cfg, ExperimentKind kind, std::vector<std::string>& issues) {
  // Run-level keys are checked by the caller; mark them read here.
  FieldReader r(cfg, "", issues);
  for (const auto& key : run_keys()) r.has(key);

  PointParams p;
  const bool crcm = kind == ExperimentKind::CrcmSample || kind == ExperimentKind::SlabRenewal;
  p.dim = static_cast<int>(r.number("dim", 2.0, [](double x) { return x == 1.0 || x == 2.0 || x == 3.0; },
                                    "must be 1, 2 or 3"));
  if (p.dim < 1 || p.dim > 3) p.dim = 2;

  p.q = r.number("q", 2.0, [](double x) { return std::isfinite(x) && x >= 1.0; }, "must be >= 1");
  if (!crcm && !is_integer(p.q)) r.fail("q", "must be an integer for multi-type experiments");
  if (!(p.q >= 1.0) || !std::isfinite(p.q)) p.q = 1.0;
  if (p.q > 64.0 && !crcm) {
    r.fail("q", "must be <= 64");
    p.q = 2.0;
  }
  const std::size_t colors = crcm ? 1 : p.colors();

  // Activities: a scalar applies to every color.
  if (const json* zj = r.raw("z")) {
    if (zj->is_number()) {
      const double z = zj->get<double>();
      if (!(std::isfinite(z) && z >= 0.0)) r.fail("z", "must be >= 0");
      p.z.assign(colors, z);
    } else if (zj->is_array() && !crcm) {
      for (const auto& x : *zj) {
        if (!x.is_number() || !(x.get<double>() >= 0.0)) {
          r.fail("z", "entries must be numbers >= 0");
          break;
        }
        p.z.push_back(x.get<double>());
      }
      if (p.z.size() != colors) r.fail("z", "must have one entry per color (q = " + std::to_string(colors) + ")");
    } else {
      r.fail("z", crcm ? "must be a number" : "must be a number or an array of numbers");
    }
  } else if (kind != ExperimentKind::ConditionCheck && kind != ExperimentKind::EntropyCertificate) {
    r.fail("z", "is required");
  }
  if (p.z.size() != colors) p.z.assign(colors, 0.0);

  // Laws: one shared law or one per color.
  const bool has_law = r.has("law");
  const bool has_laws = r.has("laws");
  if (has_law && has_laws) r.fail("laws", "give either law or laws, not both");
  if (has_law) {
    if (auto law = parse_law(*r.raw("law"), "law", issues)) p.laws.assign(colors, *law);
  } else if (has_laws) {
    const json& lj = *r.raw("laws");
    if (!lj.is_array() || lj.size() != colors) {
      r.fail("laws", "must be an array with one law per color");
    } else {
      for (std::size_t i = 0; i < lj.size(); ++i) {
        if (auto law = parse_law(lj[i], "laws." + std::to_string(i), issues)) p.laws.push_back(*law);
      }
    }
  } else {
    r.fail("law", "is required");
  }
  if (p.laws.size() != colors) p.laws.assign(colors, RadiusLaw::dirac(0.0));

  // Window: "side" for [0, side]^d or {"lower": [...], "upper": [...]}.
  const bool has_side = r.has("side");
  const bool has_window = r.has("window");
  if (has_side && has_window) r.fail("window", "give either side or window, not both");
  if (has_window) {
    FieldReader w(*r.raw("window"), "window", issues);
    auto lo = w.number_list("lower");
    auto hi = w.number_list("upper");
    w.finish();
    if (!lo || !hi || lo->size() != static_cast<std::size_t>(p.dim) || hi->size() != lo->size()) {
      r.fail("window", "lower and upper must be arrays of length dim");
    } else {
      for (std::size_t a = 0; a < lo->size(); ++a) {
        if (!((*lo)[a] < (*hi)[a])) r.fail("window", "lower must be < upper on every axis");
      }
      p.lower = *lo;
      p.upper = *hi;
    }
  } else {
    const double side = r.number("side", 3.0, positive, "must be > 0");
    p.lower.assign(p.dim, 0.0);
    p.upper.assign(p.dim, positive(side) ? side : 1.0);
  }
  if (p.lower.size() != static_cast<std::size_t>(p.dim)) {
    p.lower.assign(p.dim, 0.0);
    p.upper.assign(p.dim, 1.0);
  }

  const bool ordered_default = kind == ExperimentKind::PhaseSweep;
  if (const json* bj = r.raw("boundary")) {
    FieldReader b(*bj, "boundary", issues);
    const auto bk = b.string("kind");
    if (!bk || (*bk != "free" && *bk != "ordered")) {
      b.fail("kind", "must be free or ordered");
    } else {
      p.boundary = *bk;
    }
    if (p.boundary == "ordered") {
      const double c = b.number("color", 1.0, [&](double x) { return is_integer(x) && x >= 1 && x <= p.q; },
                                "must be an integer in 1..q");
      p.boundary_color = is_integer(c) && c >= 1 && c <= p.q ? static_cast<std::size_t>(c) - 1 : 0;
      p.shell = b.number("shell", 2.0, positive, "must be > 0");
    }
    b.finish();
  } else if (ordered_default) {
    p.boundary = "ordered";
    p.shell = 2.0;
  }
  if (p.boundary == "ordered" && crcm) r.fail("boundary", "this experiment kind is free-boundary only");

  if (auto s = r.string("sampler")) {
    if (*s != "mcmc" && *s != "rejection") r.fail("sampler", "must be mcmc or rejection");
    else p.sampler = *s;
  }
  p.sweeps = r.count("sweeps", 200, 1);
  p.burn_in = r.count("burn_in", p.sweeps / 2, 0);
  if (p.burn_in >= p.sweeps && p.sweeps >= 1) r.fail("burn_in", "must be smaller than sweeps");
  p.max_attempts = r.count("max_attempts", 100000, 1);
  p.probes = r.count("probes", 1024, 1);
  if (auto t = r.number("threshold")) p.threshold = *t;

  p.n = r.number("n", 8.0, positive, "must be > 0");
  p.k = r.number("k", 0.5, positive, "must be > 0");
  p.q_bar = r.number("q_bar", p.q + 1.0, positive, "must be > 0");
  if (!(p.q_bar > p.q)) r.fail("q_bar", "must exceed q");

  if (auto a = r.number_list("alpha")) {
    p.alpha = *a;
    double s = 0.0;
    bool ok = a->size() == colors;
    for (double x : *a) {
      ok = ok && x >= 0.0;
      s += x;
    }
    if (!ok || std::abs(s - 1.0) > 1e-9) r.fail("alpha", "must be a probability vector with one entry per color");
  } else {
    p.alpha.assign(colors, 1.0 / static_cast<double>(colors));
  }
  p.m_side = r.number("m_side", 4.0, positive, "must be > 0");
  if (auto b = r.number("beta")) {
    if (!(*b > 0.0 && *b < 1.0)) r.fail("beta", "must lie in (0, 1)");
    p.beta = *b;
  }
  if (auto g = r.number("gamma")) {
    if (!(*g > 0.0 && *g < 1.0)) r.fail("gamma", "must lie in (0, 1)");
    p.gamma = *g;
  }
  r.finish();
  return p;
}

}  // namespace detail

/// Cartesian product of the axes in declaration order, last axis fastest.
/// No axes gives a single empty point.
inline std::vector<std::vector<json>> sweep_plan(const std::vector<SweepAxis>& axes) {
  for (const auto& a : axes) {
    if (a.values.empty()) throw ValidationError({"sweep." + a.name + ": axis has no values"});
  }
  std::vector<std::vector<json>> plan(1);
  for (const auto& axis : axes) {
    std::vector<std::vector<json>> next;
    next.reserve(plan.size() * axis.values.size());
    for (const auto& prefix : plan) {
      for (const auto& v : axis.values) {
        auto point = prefix;
        point.push_back(v);
        next.push_back(std::move(point));
      }
    }
    plan = std::move(next);
  }
  return plan;
}

inline std::vector<std::vector<json>> sweep_plan(const ExperimentConfig& config) { return sweep_plan(config.axes); }

/// Resolved config of one sweep point.
inline json resolve_point(const ExperimentConfig& config, const std::vector<json>& values) {
  json cfg = config.source;
  for (std::size_t a = 0; a < config.axes.size(); ++a) detail::set_path(cfg, config.axes[a].name, values[a]);
  return cfg;
}

inline ExperimentConfig parse_experiment_config(const json& j) {
  std::vector<std::string> issues;
  ExperimentConfig c;
  c.source = j;
  if (!j.is_object()) throw ValidationError({"config: must be a JSON object"});

  detail::FieldReader r(j, "", issues);
  for (const auto& key : detail::parameter_keys()) r.has(key);
  bool found = false;
  if (auto kind = r.string("experiment")) {
    for (const auto& [name, k] : experiment_kinds()) {
      if (name == *kind) {
        c.kind = k;
        found = true;
      }
    }
    if (!found) r.fail("experiment", "unknown experiment kind '" + *kind + "'");
  } else {
    r.fail("experiment", "is required");
  }
  if (auto seed = r.unsigned_integer("seed")) {
    c.seed = *seed;
  } else if (!j.contains("seed")) {
    r.fail("seed", "is required (no wall-clock seeding)");
  }
  c.replicas = r.count("replicas", 1, 1);
  c.threads = r.count("threads", 1, 0);
  if (auto out = r.string("output")) c.output = *out;
  if (auto fmt = r.string("format")) {
    if (*fmt != "csv" && *fmt != "jsonl") r.fail("format", "must be csv or jsonl");
    else c.format = *fmt;
  }
  if (auto dd = r.string("dump_dir")) c.dump_dir = *dd;

  const std::size_t before_sweep = issues.size();
  if (const json* sj = r.raw("sweep")) {
    if (!sj->is_array()) {
      r.fail("sweep", "must be an array of {\"name\": ..., \"values\": [...]} objects");
    } else {
      std::set<std::string> names;
      for (std::size_t i = 0; i < sj->size(); ++i) {
        const std::string prefix = "sweep." + std::to_string(i);
        detail::FieldReader ar((*sj)[i], prefix, issues);
        SweepAxis axis;
        if (auto name = ar.string("name")) {
          axis.name = *name;
          if (!detail::known_parameter(j, axis.name)) ar.fail("name", "'" + axis.name + "' is not a parameter");
          if (!names.insert(axis.name).second) ar.fail("name", "'" + axis.name + "' swept twice");
        } else {
          ar.fail("name", "is required");
        }
        if (const json* vj = ar.raw("values")) {
          if (!vj->is_array() || vj->empty()) ar.fail("values", "must be a nonempty array (empty axis)");
          else axis.values.assign(vj->begin(), vj->end());
        } else {
          ar.fail("values", "is required");
        }
        ar.finish();
        c.axes.push_back(std::move(axis));
      }
    }
  }
  const bool sweep_ok = issues.size() == before_sweep;
  r.finish();
  // Point-level problems are reported alongside run-level ones.
  if (!found || !sweep_ok) throw ValidationError(issues);

  std::set<std::string> seen(issues.begin(), issues.end());
  const auto plan = sweep_plan(c);
  for (std::size_t i = 0; i < plan.size(); ++i) {
    std::vector<std::string> point_issues;
    c.points.push_back(detail::parse_point(resolve_point(c, plan[i]), c.kind, point_issues));
    for (auto& s : point_issues) {
      if (seen.count(s)) continue;
      if (plan.size() > 1) s = "sweep point " + std::to_string(i) + ": " + s;
      if (seen.insert(s).second) issues.push_back(s);
    }
  }
  if (!issues.empty()) throw ValidationError(issues);
  return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ValidationError({std::string("config: not valid JSON: ") + e.what()});
  }
  return parse_experiment_config(j);
}

// ---------------------------------------------------------------------------
// Records

using Value = std::variant<std::monostate, bool, std::int64_t, double, std::string>;

struct ObservableRecord {
  std::size_t point = 0;
  std::size_t replica = 0;
  std::uint64_t seed = 0;
  std::vector<Value> params;
  std::vector<Value> observables;
  bool failed = false;
  std::string error;
};

struct Schema {
  std::vector<std::string> params;
  std::vector<std::string> observables;

  std::vector<std::string> header() const {
    std::vector<std::string> h = {"point", "replica", "seed"};
    h.insert(h.end(), params.begin(), params.end());
    h.insert(h.end(), observables.begin(), observables.end());
    h.push_back("status");
    h.push_back("error");
    return h;
  }
};

inline const std::vector<std::string>& observable_columns(ExperimentKind kind) {
  static const std::map<ExperimentKind, std::vector<std::string>> columns = {
      {ExperimentKind::WrSample,
       {"counts", "total", "n_cc", "crossing", "covered_fraction", "dominant_fraction", "dominant_color",
        "monochromatic", "boundary_color_fraction", "acceptance_rate", "ess", "attempts"}},
      {ExperimentKind::PhaseSweep,
       {"counts", "total", "n_cc", "crossing", "covered_fraction", "dominant_fraction", "dominant_color",
        "monochromatic", "boundary_color_fraction", "acceptance_rate", "ess", "attempts"}},
      {ExperimentKind::CrcmSample, {"total", "n_cc", "crossing", "covered_fraction", "acceptance_rate", "ess"}},
      {ExperimentKind::FkCompare,
       {"fk_counts", "fk_total", "fk_n_cc", "fk_polychromatic", "wr_counts", "wr_total", "wr_n_cc",
        "wr_polychromatic", "fk_acceptance_rate", "wr_acceptance_rate"}},
      {ExperimentKind::Domination,
       {"threshold", "wr_total", "poisson_total", "wr_exceeds", "poisson_exceeds", "acceptance_rate"}},
      {ExperimentKind::SlabRenewal,
       {"n", "k", "z", "law", "z_line", "n_cc_right", "right_edge_reached", "single_component",
        "n_cc_right_half", "right_edge_reached_half"}},
      {ExperimentKind::EntropyCertificate,
       {"law", "m_side", "phi", "phi_stderr", "alpha_max", "epsilon", "gamma", "beta", "constraints_ok",
        "psi_prime_0", "z_star", "z_certified", "psi_at_z", "bound_at_z", "margin"}},
      {ExperimentKind::ConditionCheck,
       {"coverage_holds", "law", "dim", "q", "verdict", "analytic", "integral_estimate", "cutoff", "integrable",
        "moment", "atom_at_zero", "atom_below_inverse_q", "non_integrable", "atom_below_one"}},
  };
  return columns.at(kind);
}

inline Schema schema_for(const ExperimentConfig& config) {
  Schema s;
  for (const auto& a : config.axes) s.params.push_back(a.name);
  for (const auto& col : observable_columns(config.kind)) {
    if (std::find(s.params.begin(), s.params.end(), col) == s.params.end()) s.observables.push_back(col);
  }
  return s;
}

inline Value json_to_value(const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return std::monostate{};
  return v.dump();
}

inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string value_text(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) return "";
        else if constexpr (std::is_same_v<T, bool>) return x ? "1" : "0";
        else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(x);
        else if constexpr (std::is_same_v<T, double>) return format_double(x);
        else return x;
      },
      v);
}

inline json value_json(const Value& v) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
        else return x;
      },
      v);
}

inline std::optional<double> value_number(const Value& v) {
  if (auto* b = std::get_if<bool>(&v)) return *b ? 1.0 : 0.0;
  if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (auto* d = std::get_if<double>(&v)) return *d;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Pipelines

struct TaskContext {
  std::size_t point = 0;
  std::size_t replica = 0;
  std::uint64_t seed = 0;
  std::string dump_dir;
};

namespace detail {

inline Value count(std::size_t n) { return static_cast<std::int64_t>(n); }

inline std::string join_counts(const std::vector<std::size_t>& counts) {
  std::string s;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (i) s += ';';
    s += std::to_string(counts[i]);
  }
  return s;
}

template <std::size_t Dim>
struct WrOutcome {
  MultiTypeConfiguration<Dim> sample;
  double acceptance_rate = 0.0;
  double ess = 0.0;
  std::size_t attempts = 0;
};

template <std::size_t Dim>
WrOutcome<Dim> draw_wr(const PointParams& p, Rng& rng) {
  const auto gp = p.gibbs<Dim>();
  WrOutcome<Dim> out;
  if (p.sampler == "rejection") {
    auto res = sample_wr_rejection(gp, rng, p.max_attempts);
    out.sample = std::move(res.sample);
    out.attempts = res.attempts;
    out.acceptance_rate = 1.0 / static_cast<double>(res.attempts);
    out.ess = 1.0;
    return out;
  }
  WrChain<Dim> chain(gp, build_boundary(gp, rng));
  std::vector<double> series;
  for (std::size_t s = 0; s < p.sweeps; ++s) {
    chain.sweep(rng);
    if (s >= p.burn_in) series.push_back(static_cast<double>(chain.state().total()));
  }
  out.sample = chain.state();
  out.acceptance_rate = chain.stats().acceptance_rate();
  out.ess = stats::effective_sample_size(series);
  return out;
}

template <std::size_t Dim>
Metadata dump_metadata(const PointParams& p, const TaskContext& ctx, double acceptance, double ess) {
  return {{"seed", std::to_string(ctx.seed)},
          {"point", std::to_string(ctx.point)},
          {"replica", std::to_string(ctx.replica)},
          {"dim", std::to_string(Dim)},
          {"sampler", p.sampler},
          {"sweeps", std::to_string(p.sweeps)},
          {"burn_in", std::to_string(p.burn_in)},
          {"acceptance_rate", format_double(acceptance)},
          {"ess", format_double(ess)}};
}

inline std::string dump_path(const TaskContext& ctx) {
  return (std::filesystem::path(ctx.dump_dir) /
          ("p" + std::to_string(ctx.point) + "_r" + std::to_string(ctx.replica) + ".txt"))
      .string();
}

template <std::size_t Dim>
std::vector<Value> run_wr_sample(const PointParams& p, Rng& rng, const TaskContext& ctx) {
  auto o = draw_wr<Dim>(p, rng);
  const auto window = p.window<Dim>();
  const auto census = color_census(o.sample);
  const auto flat = o.sample.flatten();
  const auto labeling = connected_components(flat);
  Value boundary_fraction = std::monostate{};
  if (p.boundary == "ordered") {
    const std::size_t total = o.sample.total();
    boundary_fraction = total == 0 ? 1.0
                                   : static_cast<double>(o.sample.colors[p.boundary_color].size()) /
                                         static_cast<double>(total);
  }
  if (!ctx.dump_dir.empty()) save_dump(dump_path(ctx), o.sample, dump_metadata<Dim>(p, ctx, o.acceptance_rate, o.ess));
  return {join_counts(census.counts),
          count(o.sample.total()),
          count(labeling.n_cc),
          crossing_exists(labeling, flat, window, 0),
          covered_fraction(flat, window, p.probes),
          census.dominant_fraction,
          count(census.dominant_color + 1),
          census.monochromatic,
          boundary_fraction,
          o.acceptance_rate,
          o.ess,
          count(o.attempts)};
}

template <std::size_t Dim>
std::vector<Value> run_crcm_sample(const PointParams& p, Rng& rng, const TaskContext& ctx) {
  const auto window = p.window<Dim>();
  CrcmChain<Dim> chain(window, p.z.front(), p.laws.front(), p.q);
  std::vector<double> series;
  for (std::size_t s = 0; s < p.sweeps; ++s) {
    chain.sweep(rng);
    if (s >= p.burn_in) series.push_back(static_cast<double>(chain.n_cc()));
  }
  const auto& balls = chain.state();
  const auto labeling = connected_components(balls);
  const double ess = stats::effective_sample_size(series);
  if (!ctx.dump_dir.empty()) {
    save_dump(dump_path(ctx), balls, dump_metadata<Dim>(p, ctx, chain.stats().acceptance_rate(), ess));
  }
  return {count(balls.size()),
          count(labeling.n_cc),
          crossing_exists(labeling, balls, window, 0),
          covered_fraction(balls, window, p.probes),
          chain.stats().acceptance_rate(),
          ess};
}

template <std::size_t Dim>
std::vector<Value> run_fk_compare(const PointParams& p, Rng& rng, const TaskContext&) {
  if (p.boundary != "free") throw std::invalid_argument("fk-compare needs a free boundary");
  for (std::size_t i = 1; i < p.z.size(); ++i) {
    if (p.z[i] != p.z[0]) throw std::invalid_argument("fk-compare needs symmetric activities");
  }
  const auto window = p.window<Dim>();
  CrcmChain<Dim> crcm(window, p.z.front(), p.laws.front(), p.q);
  for (std::size_t s = 0; s < p.sweeps; ++s) crcm.sweep(rng);
  const auto fk = fk_coloring(crcm.state(), p.colors(), rng);
  PointParams wp = p;
  wp.sampler = "mcmc";
  auto wr = draw_wr<Dim>(wp, rng);
  const auto fk_census = color_census(fk);
  const auto wr_census = color_census(wr.sample);
  return {join_counts(fk_census.counts),
          count(fk.total()),
          count(crcm.n_cc()),
          !fk_census.monochromatic,
          join_counts(wr_census.counts),
          count(wr.sample.total()),
          count(connected_components(wr.sample.flatten()).n_cc),
          !wr_census.monochromatic,
          crcm.stats().acceptance_rate(),
          wr.acceptance_rate};
}

inline double default_threshold(const PointParams& p) {
  double mean = 0.0;
  for (double z : p.z) mean += z * p.volume();
  return std::floor(mean);
}

template <std::size_t Dim>
std::vector<Value> run_domination(const PointParams& p, Rng& rng, const TaskContext&) {
  const double t = p.threshold.value_or(default_threshold(p));
  auto wr = draw_wr<Dim>(p, rng);
  const auto poisson = sample_multitype_poisson(p.gibbs<Dim>(), rng);
  const double wt = static_cast<double>(wr.sample.total());
  const double pt = static_cast<double>(poisson.total());
  return {t, count(wr.sample.total()), count(poisson.total()), wt > t, pt > t, wr.acceptance_rate};
}

inline std::vector<Value> run_slab_renewal(const PointParams& p, Rng& rng, const TaskContext&) {
  const SlabParams s = p.slab();
  const auto r = slab_replica(s, rng);
  Value single = std::monostate{};
  if (r.n_cc_right > 0) single = r.n_cc_right == 1;
  return {s.n,
          s.k,
          s.z,
          s.law.describe(),
          effective_line_intensity(s.z, s.k, s.d),
          count(r.n_cc_right),
          r.right_edge_reached,
          single,
          count(r.n_cc_right_half),
          r.right_edge_reached_half};
}

inline std::string join_doubles(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ';';
    s += format_double(xs[i]);
  }
  return s;
}

inline std::vector<Value> run_entropy_certificate(const PointParams& p, Rng& rng, const TaskContext&) {
  EntropyBoundInputs in;
  in.alpha = p.alpha;
  in.m_side = p.m_side;
  in.dim = p.dim;
  double worst_se = 0.0;
  for (const auto& law : p.laws) {
    const auto phi = phi_m(law, p.m_side, p.dim, p.probes, rng);
    in.phi.push_back(phi.value);
    worst_se = std::max(worst_se, phi.stderr_);
  }
  const double amax = *std::max_element(p.alpha.begin(), p.alpha.end());
  SlackParameters slack;
  if (amax < 1.0) slack = default_slack(amax);
  in.beta = p.beta.value_or(slack.beta);
  in.gamma = p.gamma.value_or(slack.gamma);
  const bool chain_ok = amax < 1.0 && check_constraint_chain(in, slack.epsilon).empty();
  const double psi0 = psi_eval(in, 0.0).derivative;
  std::string law = p.laws.front().describe();
  const auto cert = small_z_threshold(in);
  return {law,       p.m_side,      join_doubles(in.phi), worst_se,      amax,         slack.epsilon, in.gamma,
          in.beta,   chain_ok,      psi0,                 cert.z_star,   cert.z_certified, cert.psi_at_z, cert.bound_at_z,
          cert.margin};
}

inline std::vector<Value> run_condition_check(const PointParams& p, Rng&, const TaskContext&) {
  const RadiusLaw& law = p.laws.front();
  const auto cond = check_conditions(law, static_cast<int>(std::ceil(p.q)), p.dim);
  const auto integ = classify_integrability(law, p.dim);
  return {cond.coverage.holds(),
          law.describe(),
          static_cast<std::int64_t>(p.dim),
          p.q,
          std::string(to_string(cond.coverage.verdict)),
          cond.coverage.analytic,
          cond.coverage.integral_estimate,
          cond.coverage.cutoff,
          integ.classification == Integrability::Integrable,
          integ.moment_estimate,
          law.atom_at_zero(),
          cond.atom_below_inverse_q,
          cond.non_integrable,
          cond.atom_below_one};
}

inline std::vector<Value> run_task(ExperimentKind kind, const PointParams& p, Rng& rng, const TaskContext& ctx) {
  switch (kind) {
    case ExperimentKind::SlabRenewal: return run_slab_renewal(p, rng, ctx);
    case ExperimentKind::EntropyCertificate: return run_entropy_certificate(p, rng, ctx);
    case ExperimentKind::ConditionCheck: return run_condition_check(p, rng, ctx);
    default: break;
  }
  return with_dimension(p.dim, [&](auto dim) -> std::vector<Value> {
    constexpr std::size_t D = decltype(dim)::value;
    switch (kind) {
      case ExperimentKind::WrSample:
      case ExperimentKind::PhaseSweep: return run_wr_sample<D>(p, rng, ctx);
      case ExperimentKind::CrcmSample: return run_crcm_sample<D>(p, rng, ctx);
      case ExperimentKind::FkCompare: return run_fk_compare<D>(p, rng, ctx);
      case ExperimentKind::Domination: return run_domination<D>(p, rng, ctx);
      default: throw std::logic_error("unhandled experiment kind");
    }
  });
}

}  // namespace detail

struct PointSummary {
  std::size_t point = 0;
  std::size_t rows = 0;
  std::size_t failed = 0;
  /// Mean of every numeric observable over the rows that have it.
  std::vector<std::pair<std::string, double>> means;
  /// Kind-specific extras (boundary truncation mass, domination verdict, ...).
  json extra = json::object();
};

struct ExperimentResult {
  Schema schema;
  std::vector<ObservableRecord> records;
  std::vector<PointSummary> summary;
  std::size_t failed_rows() const {
    std::size_t n = 0;
    for (const auto& r : records) n += r.failed ? 1 : 0;
    return n;
  }
};

namespace detail {

inline PointSummary summarize_point(const ExperimentConfig& config, const Schema& schema,
                                    const std::vector<ObservableRecord>& records, std::size_t point) {
  PointSummary s;
  s.point = point;
  std::vector<stats::RunningStats> acc(schema.observables.size());
  std::map<std::string, std::vector<double>> columns;
  for (const auto& r : records) {
    if (r.point != point) continue;
    ++s.rows;
    if (r.failed) {
      ++s.failed;
      continue;
    }
    for (std::size_t c = 0; c < r.observables.size(); ++c) {
      if (auto x = value_number(r.observables[c])) {
        acc[c].add(*x);
        columns[schema.observables[c]].push_back(*x);
      }
    }
  }
  for (std::size_t c = 0; c < acc.size(); ++c) {
    if (acc[c].count() > 0) s.means.emplace_back(schema.observables[c], acc[c].mean());
  }
  const auto& p = config.points[point];
  if (p.boundary == "ordered") {
    with_dimension(p.dim, [&](auto dim) {
      constexpr std::size_t D = decltype(dim)::value;
      s.extra["boundary_truncation_mass"] = boundary_truncation_mass(p.gibbs<D>());
    });
  }
  if (config.kind == ExperimentKind::Domination && columns["wr_total"].size() >= 100) {
    const auto rep = domination_test({"total", "exceeds"}, {columns["wr_total"], columns["wr_exceeds"]},
                                     {columns["poisson_total"], columns["poisson_exceeds"]});
    s.extra["domination_pass"] = rep.pass;
    for (const auto& e : rep.entries) s.extra["z_score_" + e.name] = e.z_score;
  }
  if (config.kind == ExperimentKind::SlabRenewal) {
    const auto& single = columns["single_component"];
    if (!single.empty()) {
      const double m = static_cast<double>(single.size());
      double ph = 0.0;
      for (double x : single) ph += x;
      ph /= m;
      s.extra["p_hat"] = ph;
      s.extra["p_hat_stderr"] = std::sqrt(ph * (1.0 - ph) / m);
      std::vector<std::size_t> counts;
      for (double x : columns["n_cc_right"]) {
        if (x > 0) counts.push_back(static_cast<std::size_t>(x));
      }
      const auto st = stats::summarize(std::vector<double>(counts.begin(), counts.end()));
      s.extra["inverse_mean_n_cc_right"] = 1.0 / st.mean();
      s.extra["geometric_ks_distance"] = geometric_ks_distance(counts, ph);
      s.extra["geometric_moment"] = ph > 0.0 ? geometric_moment(p.q_bar, ph) : INFINITY;
    }
  }
  return s;
}

}  // namespace detail

/// Runs every (point, replica) task. Rows come back ordered by (point,
/// replica) whatever order the workers finish in; a failing task yields a
/// flagged row and the run continues.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  ExperimentResult result;
  result.schema = schema_for(config);
  const auto plan = sweep_plan(config);
  const std::size_t points = plan.size();
  const std::size_t tasks = points * config.replicas;
  result.records.resize(tasks);

  std::vector<std::size_t> kept;  // observable columns that survive axis de-duplication
  {
    const auto& all = observable_columns(config.kind);
    for (std::size_t c = 0; c < all.size(); ++c) {
      if (std::find(result.schema.params.begin(), result.schema.params.end(), all[c]) == result.schema.params.end()) {
        kept.push_back(c);
      }
    }
  }

  if (!config.dump_dir.empty()) std::filesystem::create_directories(config.dump_dir);

  auto work = [&](std::size_t t) {
    ObservableRecord rec;
    rec.point = t / config.replicas;
    rec.replica = t % config.replicas;
    rec.seed = derive_seed(config.seed, rec.point, rec.replica);
    for (const auto& v : plan[rec.point]) rec.params.push_back(json_to_value(v));
    TaskContext ctx{rec.point, rec.replica, rec.seed, config.dump_dir};
    Rng rng(rec.seed);
    try {
      auto obs = detail::run_task(config.kind, config.points[rec.point], rng, ctx);
      for (std::size_t c : kept) rec.observables.push_back(std::move(obs[c]));
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
      rec.observables.assign(kept.size(), std::monostate{});
    }
    result.records[t] = std::move(rec);
  };

  std::size_t threads = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
  threads = std::min(threads, std::max<std::size_t>(tasks, 1));
  if (threads <= 1) {
    for (std::size_t t = 0; t < tasks; ++t) work(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < tasks; t = next++) work(t);
      });
    }
    for (auto& th : pool) th.join();
  }

  for (std::size_t pt = 0; pt < points; ++pt) {
    result.summary.push_back(detail::summarize_point(config, result.schema, result.records, pt));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Emission

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string csv_line(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += csv_field(fields[i]);
  }
  return line + "\n";
}

inline std::vector<std::string> record_fields(const ObservableRecord& r) {
  std::vector<std::string> f = {std::to_string(r.point), std::to_string(r.replica), std::to_string(r.seed)};
  for (const auto& v : r.params) f.push_back(value_text(v));
  for (const auto& v : r.observables) f.push_back(value_text(v));
  f.push_back(r.failed ? "failed" : "ok");
  f.push_back(r.error);
  return f;
}

/// Parsed CSV: header plus rows of raw fields.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::vector<std::vector<std::string>> lines;
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
      any = true;
    } else if (c == '\n') {
      fields.push_back(cur);
      lines.push_back(std::move(fields));
      fields.clear();
      cur.clear();
      any = false;
    } else if (c != '\r') {
      cur += c;
      any = true;
    }
  }
  if (quoted) throw IoError("csv: unterminated quoted field");
  if (any || !cur.empty()) {
    fields.push_back(cur);
    lines.push_back(std::move(fields));
  }
  if (lines.empty()) return t;
  t.header = std::move(lines.front());
  t.rows.assign(std::make_move_iterator(lines.begin() + 1), std::make_move_iterator(lines.end()));
  return t;
}

inline std::string format_csv(const CsvTable& t) {
  std::string out = csv_line(t.header);
  for (const auto& r : t.rows) out += csv_line(r);
  return out;
}

inline nlohmann::ordered_json summary_json(const std::vector<PointSummary>& summary) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& s : summary) {
    nlohmann::ordered_json o;
    o["point"] = s.point;
    o["rows"] = s.rows;
    o["failed"] = s.failed;
    nlohmann::ordered_json means;
    for (const auto& [k, v] : s.means) means[k] = v;
    o["means"] = means;
    for (const auto& [k, v] : s.extra.items()) o[k] = v;
    out.push_back(o);
  }
  return out;
}

/// Opens the data file and its `.meta.json` sidecar up front so an
/// unwritable path fails before any sampling.
class RecordSink {
 public:
  RecordSink(const std::string& path, const std::string& format) : path_(path), format_(format) {
    if (format != "csv" && format != "jsonl") throw std::invalid_argument("format must be csv or jsonl");
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty() && !std::filesystem::is_directory(parent)) {
      throw IoError("output directory does not exist: " + parent.string());
    }
    data_.open(path, std::ios::binary | std::ios::trunc);
    if (!data_) throw IoError("cannot open output " + path);
    meta_.open(path + ".meta.json", std::ios::binary | std::ios::trunc);
    if (!meta_) throw IoError("cannot open metadata " + path + ".meta.json");
  }

  void emit(const ExperimentConfig& config, const ExperimentResult& result) {
    data_ << emit_records(result.schema, result.records, format_);
    nlohmann::ordered_json meta;
    meta["tool_version"] = kToolVersion;
    meta["experiment"] = to_string(config.kind);
    meta["master_seed"] = config.seed;
    meta["replicas"] = config.replicas;
    meta["format"] = format_;
    meta["columns"] = result.schema.header();
    meta["config"] = nlohmann::ordered_json::parse(config.source.dump());
    meta["summary"] = summary_json(result.summary);
    meta_ << meta.dump(2) << '\n';
    data_.flush();
    meta_.flush();
    if (!data_ || !meta_) throw IoError("write failed for " + path_);
  }

  static std::string emit_records(const Schema& schema, const std::vector<ObservableRecord>& records,
                                  const std::string& format) {
    std::string out;
    if (format == "csv") {
      out += csv_line(schema.header());
      for (const auto& r : records) out += csv_line(record_fields(r));
    } else {
      for (const auto& r : records) {
        nlohmann::ordered_json o;
        o["point"] = r.point;
        o["replica"] = r.replica;
        o["seed"] = r.seed;
        for (std::size_t i = 0; i < schema.params.size(); ++i) o[schema.params[i]] = value_json(r.params[i]);
        for (std::size_t i = 0; i < schema.observables.size(); ++i) {
          o[schema.observables[i]] = value_json(r.observables[i]);
        }
        o["status"] = r.failed ? "failed" : "ok";
        o["error"] = r.error;
        out += o.dump() + "\n";
      }
    }
    return out;
  }

 private:
  std::string path_;
  std::string format_;
  std::ofstream data_;
  std::ofstream meta_;
};

inline std::string emit_records(const Schema& schema, const std::vector<ObservableRecord>& records,
                                const std::string& format) {
  return RecordSink::emit_records(schema, records, format);
}

}  // namespace cwr

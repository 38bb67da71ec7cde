#include "kramers/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "kramers/errors.hpp"
#include "kramers/report.hpp"
#include "kramers/text.hpp"

namespace kramers {

namespace {

std::string at_line(const ConfigFile::Entry& e) { return "line " + std::to_string(e.line) + ": "; }

}  // namespace

ConfigFile ConfigFile::parse(std::string_view text) {
  ConfigFile cfg;
  int line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value', got '" + line + "'");
    }
    Entry e;
    e.key = trim(std::string_view(line).substr(0, eq));
    e.value = trim(std::string_view(line).substr(eq + 1));
    e.line = line_no;
    if (e.key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    for (const auto& other : cfg.entries_) {
      if (other.key == e.key) {
        throw ConfigError(at_line(e) + "duplicate key '" + e.key + "' (first set on line " +
                          std::to_string(other.line) + ")");
      }
    }
    cfg.entries_.push_back(std::move(e));
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) { return parse(read_file(path)); }

bool ConfigFile::has(const std::string& key) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.key == key; });
}

const ConfigFile::Entry& ConfigFile::entry(const std::string& key) const {
  for (const auto& e : entries_) {
    if (e.key == key) return e;
  }
  throw ConfigError("missing required key '" + key + "'");
}

const std::string& ConfigFile::get(const std::string& key) const { return entry(key).value; }

std::string ConfigFile::get_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}

double ConfigFile::get_double(const std::string& key, std::optional<double> fallback) const {
  if (!has(key) && fallback) return *fallback;
  const Entry& e = entry(key);
  try {
    return parse_double(e.value);
  } catch (const ConfigError&) {
    throw ConfigError(at_line(e) + "key '" + key + "': expected a number, got '" + e.value + "'");
  }
}

long long ConfigFile::get_int(const std::string& key, std::optional<long long> fallback) const {
  if (!has(key) && fallback) return *fallback;
  const Entry& e = entry(key);
  long long v = 0;
  const auto* end = e.value.data() + e.value.size();
  const auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(at_line(e) + "key '" + key + "': expected an integer, got '" + e.value + "'");
  }
  return v;
}

std::uint64_t ConfigFile::get_u64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const Entry& e = entry(key);
  std::uint64_t v = 0;
  const auto* end = e.value.data() + e.value.size();
  const auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(at_line(e) + "key '" + key + "': expected an unsigned integer, got '" + e.value + "'");
  }
  return v;
}

std::vector<double> ConfigFile::get_list(const std::string& key, std::vector<double> fallback) const {
  if (!has(key)) return fallback;
  const Entry& e = entry(key);
  try {
    return parse_list(e.value);
  } catch (const ConfigError&) {
    throw ConfigError(at_line(e) + "key '" + key + "': expected a comma-separated list, got '" + e.value + "'");
  }
}

Vec ConfigFile::get_vec(const std::string& key, int dimension, std::optional<Vec> fallback) const {
  if (!has(key) && fallback) return *fallback;
  const std::vector<double> v = get_list(key);
  if (static_cast<int>(v.size()) != dimension) {
    throw ConfigError(at_line(entry(key)) + "key '" + key + "': expected " + std::to_string(dimension) +
                      " components");
  }
  return Eigen::Map<const Vec>(v.data(), dimension);
}

void ConfigFile::require_known(const std::vector<std::string>& allowed) const {
  for (const auto& e : entries_) {
    if (std::find(allowed.begin(), allowed.end(), e.key) == allowed.end()) {
      throw ConfigError(at_line(e) + "unknown key '" + e.key + "'");
    }
  }
}

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "system.dimension", "system.drift", "system.drift_rate", "system.coefficients", "system.G",
      "system.G_value", "system.G_intercept", "system.G_slope", "system.G_floor",
      "domain.kind", "domain.lower", "domain.upper", "domain.radius",
      "measure.kind", "measure.beta", "measure.alpha", "measure.gamma", "measure.directions", "measure.weight",
      "measure.cutoff", "measure.radius", "measure.level", "measure.center",
      "run.epsilon", "run.paths", "run.seed", "run.workers", "run.dt", "run.t_cap", "run.horizon", "run.start",
      "run.jump_cap",
      "quasipotential.family", "quasipotential.restarts", "quasipotential.max_knots",
      "quasipotential.nm_max_evals", "quasipotential.improvement_tol", "quasipotential.horizons",
      "quasipotential.golden_steps", "quasipotential.endpoint_tol", "quasipotential.certify_dt",
      "quasipotential.radial_bins", "quasipotential.abs_tol", "quasipotential.rel_tol",
      "quasipotential.boundary_points", "quasipotential.boundary_rounds", "quasipotential.target",
      "kramers.window_delta", "kramers.location_delta", "kramers.bootstrap", "kramers.t_cap_factor",
      "kramers.fallback_t_cap", "kramers.max_timeout_fraction", "kramers.quasipotential_report",
      "cycle.rho", "cycle.rho_prime", "cycle.t_cap",
      "is.horizon", "is.tilt", "is.level", "is.target", "is.report",
      "sample.count",
  };
  return keys;
}

SystemSpec build_system(const ConfigFile& f) {
  SystemSpec s;
  s.dimension = static_cast<int>(f.get_int("system.dimension", 1));
  if (s.dimension < 1) throw ConfigError("system.dimension must be >= 1");
  const int d = s.dimension;
  s.drift_name = f.get_or("system.drift", "linear");
  if (s.drift_name == "linear") {
    s.drift = linear_drift(f.get_double("system.drift_rate", 1.0));
  } else if (s.drift_name == "cubic") {
    s.drift = cubic_drift();
  } else if (s.drift_name == "polynomial") {
    s.drift = polynomial_drift(f.get_list("system.coefficients"));
  } else {
    throw ConfigError(at_line(f.entry("system.drift")) + "unknown drift '" + s.drift_name +
                      "' (expected linear, cubic or polynomial)");
  }
  s.G_name = f.get_or("system.G", "constant");
  if (s.G_name == "constant") {
    const double g = f.get_double("system.G_value", 1.0);
    if (!(g != 0.0) || !std::isfinite(g)) throw ConfigError("system.G_value must be finite and nonzero");
    s.G = constant_G(g);
    s.c1 = std::abs(g);
    s.L = 0.0;
  } else if (s.G_name == "affine") {
    const double a = f.get_double("system.G_intercept", 1.0);
    const double b = f.get_double("system.G_slope", 0.0);
    const double floor = f.get_double("system.G_floor", 0.1);
    if (!(floor > 0.0)) throw ConfigError("system.G_floor must be positive");
    s.G = affine_clamped_G(a, b, floor);
    s.c1 = floor;
    s.L = std::abs(b);
  } else {
    throw ConfigError(at_line(f.entry("system.G")) + "unknown G '" + s.G_name + "' (expected constant or affine)");
  }
  const std::string kind = f.get_or("domain.kind", "whole");
  if (kind == "interval") {
    if (d != 1) throw ConfigError("domain.kind = interval needs system.dimension = 1");
    s.domain = Domain::interval(f.get_double("domain.lower"), f.get_double("domain.upper"));
  } else if (kind == "box") {
    s.domain = Domain::box(f.get_vec("domain.lower", d), f.get_vec("domain.upper", d));
  } else if (kind == "ball") {
    s.domain = Domain::ball(d, f.get_double("domain.radius"));
  } else if (kind == "whole") {
    s.domain = Domain::whole(d);
  } else {
    throw ConfigError(at_line(f.entry("domain.kind")) + "unknown domain '" + kind +
                      "' (expected interval, box, ball or whole)");
  }
  return s;
}

namespace {

/// "v_1 ... v_d w; ..." -> weighted directions.
std::vector<WeightedDirection> parse_directions(const ConfigFile::Entry& e, int d) {
  std::vector<WeightedDirection> out;
  for (const auto& part : split(e.value, ';')) {
    const std::string item = trim(part);
    if (item.empty()) continue;
    std::vector<double> nums;
    for (const auto& tok : split(item, ' ')) {
      const std::string t = trim(tok);
      if (t.empty()) continue;
      try {
        nums.push_back(parse_double(t));
      } catch (const ConfigError&) {
        throw ConfigError(at_line(e) + "measure.directions: invalid number '" + t + "'");
      }
    }
    if (static_cast<int>(nums.size()) != d + 1) {
      throw ConfigError(at_line(e) + "measure.directions: each item needs " + std::to_string(d) +
                        " components and a weight");
    }
    WeightedDirection w;
    w.direction = Eigen::Map<const Vec>(nums.data(), d);
    w.weight = nums[d];
    out.push_back(std::move(w));
  }
  if (out.empty()) throw ConfigError(at_line(e) + "measure.directions is empty");
  return out;
}

}  // namespace

LevyMeasure build_measure(const ConfigFile& f, int d) {
  const std::string kind = f.get("measure.kind");
  if (kind == "exponential_light") return LevyMeasure::exponential_light(d, f.get_double("measure.beta", 2.0));
  if (kind == "gauss_tempered_stable") {
    const double alpha = f.get_double("measure.alpha");
    const double gamma = f.get_double("measure.gamma");
    const double cutoff = f.get_double("measure.cutoff", 0.01);
    if (f.has("measure.directions")) {
      return LevyMeasure::gauss_tempered_stable(d, alpha, gamma, parse_directions(f.entry("measure.directions"), d),
                                                cutoff);
    }
    if (d != 1) throw ConfigError("measure.directions is required for gauss_tempered_stable in d >= 2");
    return LevyMeasure::gauss_tempered_stable_1d(alpha, gamma, f.get_double("measure.weight", 0.5), cutoff);
  }
  if (kind == "compact") {
    const Vec center = f.get_vec("measure.center", d, Vec::Zero(d));
    return LevyMeasure::compact_support(d, f.get_double("measure.radius"), f.get_double("measure.level", 1.0),
                                        center);
  }
  throw ConfigError(at_line(f.entry("measure.kind")) + "unknown measure kind '" + kind +
                    "' (expected exponential_light, gauss_tempered_stable or compact)");
}

ExperimentConfig ExperimentConfig::from(const ConfigFile& f) {
  f.require_known(known_config_keys());
  ExperimentConfig c;
  c.file = f;
  c.system = build_system(f);
  const int d = c.system.dimension;
  c.measure.emplace(build_measure(f, d));
  c.epsilons = f.get_list("run.epsilon", c.epsilons);
  c.paths = static_cast<int>(f.get_int("run.paths", c.paths));
  if (c.paths < 1) throw ConfigError("run.paths must be >= 1");
  c.seed = f.get_u64("run.seed", c.seed);
  c.workers = static_cast<int>(f.get_int("run.workers", c.workers));
  if (c.workers < 1) throw ConfigError("run.workers must be >= 1");
  c.dt = f.get_double("run.dt", c.dt);
  if (c.dt < 0.0) throw ConfigError("run.dt must be nonnegative");
  c.t_cap = f.get_double("run.t_cap", c.t_cap);
  c.horizon = f.get_double("run.horizon", c.horizon);
  c.jump_cap = f.get_u64("run.jump_cap", c.jump_cap);
  c.start = f.get_vec("run.start", d, Vec::Zero(d));

  QuasiPotentialOptions& q = c.qp;
  q.family = parse_path_family(f.get_or("quasipotential.family", to_string(q.family)));
  q.restarts = static_cast<int>(f.get_int("quasipotential.restarts", q.restarts));
  q.max_knots = static_cast<int>(f.get_int("quasipotential.max_knots", q.max_knots));
  q.nm_max_evals = static_cast<int>(f.get_int("quasipotential.nm_max_evals", q.nm_max_evals));
  q.improvement_tol = f.get_double("quasipotential.improvement_tol", q.improvement_tol);
  q.horizons = f.get_list("quasipotential.horizons", q.horizons);
  q.golden_steps = static_cast<int>(f.get_int("quasipotential.golden_steps", q.golden_steps));
  q.endpoint_tol = f.get_double("quasipotential.endpoint_tol", q.endpoint_tol);
  q.certify_dt = f.get_double("quasipotential.certify_dt", q.certify_dt);
  q.radial_bins = static_cast<int>(f.get_int("quasipotential.radial_bins", q.radial_bins));
  q.abs_tol = f.get_double("quasipotential.abs_tol", q.abs_tol);
  q.rel_tol = f.get_double("quasipotential.rel_tol", q.rel_tol);
  q.boundary_points = static_cast<int>(f.get_int("quasipotential.boundary_points", q.boundary_points));
  q.boundary_rounds = static_cast<int>(f.get_int("quasipotential.boundary_rounds", q.boundary_rounds));
  q.seed = c.seed;
  q.workers = c.workers;
  q.validate();
  if (f.has("quasipotential.target")) c.qp_target = f.get_vec("quasipotential.target", d);

  KramersBlock& k = c.kramers;
  k.window_delta = f.get_double("kramers.window_delta", k.window_delta);
  k.location_delta = f.get_double("kramers.location_delta", k.location_delta);
  k.bootstrap = static_cast<int>(f.get_int("kramers.bootstrap", k.bootstrap));
  k.t_cap_factor = f.get_double("kramers.t_cap_factor", k.t_cap_factor);
  k.fallback_t_cap = f.get_double("kramers.fallback_t_cap", k.fallback_t_cap);
  k.max_timeout_fraction = f.get_double("kramers.max_timeout_fraction", k.max_timeout_fraction);
  k.quasipotential_report = f.get_or("kramers.quasipotential_report", "");

  c.cycle.rho = f.get_double("cycle.rho", c.cycle.rho);
  c.cycle.rho_prime = f.get_double("cycle.rho_prime", c.cycle.rho_prime);
  c.cycle.t_cap = f.get_double("cycle.t_cap", c.cycle.t_cap);

  c.is.horizon = f.get_double("is.horizon", c.is.horizon);
  c.is.tilt = f.get_or("is.tilt", c.is.tilt);
  if (c.is.tilt != "identity" && c.is.tilt != "constant" && c.is.tilt != "transfer" && c.is.tilt != "report") {
    throw ConfigError(at_line(f.entry("is.tilt")) + "unknown tilt '" + c.is.tilt +
                      "' (expected identity, constant, transfer or report)");
  }
  c.is.level = f.get_double("is.level", c.is.level);
  if (f.has("is.target")) c.is.target = f.get_vec("is.target", d);
  c.is.report = f.get_or("is.report", "");

  c.sample_count = static_cast<int>(f.get_int("sample.count", c.sample_count));
  if (c.sample_count < 1) throw ConfigError("sample.count must be >= 1");
  return c;
}

ExitExperiment ExperimentConfig::experiment() const {
  ExitExperiment exp(system, *measure);
  exp.start = start;
  exp.epsilons = epsilons;
  exp.paths = paths;
  exp.t_cap = t_cap;
  exp.t_cap_factor = kramers.t_cap_factor;
  exp.fallback_t_cap = kramers.fallback_t_cap;
  exp.sim.dt = dt;
  exp.sim.jump_cap = jump_cap;
  exp.seed = seed;
  exp.workers = workers;
  exp.bootstrap = kramers.bootstrap;
  exp.window_delta = kramers.window_delta;
  exp.location_delta = kramers.location_delta;
  exp.max_timeout_fraction = kramers.max_timeout_fraction;
  return exp;
}

}  // namespace kramers

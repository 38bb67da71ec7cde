#include "kramers/quasipotential.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "kramers/errors.hpp"
#include "kramers/ode.hpp"
#include "kramers/optimize.hpp"
#include "kramers/parallel.hpp"
#include "kramers/random.hpp"
#include "kramers/text.hpp"

namespace kramers {

const char* to_string(PathFamily family) {
  switch (family) {
    case PathFamily::Both: return "both";
    case PathFamily::Ball: return "ball";
    case PathFamily::Grid: return "grid";
  }
  return "both";
}

PathFamily parse_path_family(const std::string& text) {
  if (text == "both") return PathFamily::Both;
  if (text == "ball") return PathFamily::Ball;
  if (text == "grid") return PathFamily::Grid;
  throw ConfigError("unknown path family '" + text + "' (expected both, ball or grid)");
}

void QuasiPotentialOptions::validate() const {
  if (restarts < 1) throw ConfigError("quasipotential.restarts must be >= 1");
  if (max_knots < 1) throw ConfigError("quasipotential.max_knots must be >= 1");
  if (nm_max_evals < 1) throw ConfigError("quasipotential.nm_max_evals must be >= 1");
  if (horizons.empty()) throw ConfigError("quasipotential.horizons must not be empty");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (!(horizons[i] > 0.0) || !std::isfinite(horizons[i])) throw ConfigError("horizons must be positive");
    if (i > 0 && !(horizons[i] > horizons[i - 1])) throw ConfigError("horizons must increase");
  }
  if (golden_steps < 0) throw ConfigError("quasipotential.golden_steps must be >= 0");
  if (!(endpoint_tol > 0.0)) throw ConfigError("quasipotential.endpoint_tol must be positive");
  if (!(certify_dt > 0.0)) throw ConfigError("quasipotential.certify_dt must be positive");
  if (radial_bins < 1) throw ConfigError("quasipotential.radial_bins must be >= 1");
  if (!(abs_tol >= 0.0) || !(rel_tol >= 0.0)) throw ConfigError("tolerances must be nonnegative");
  if (boundary_points < 2) throw ConfigError("quasipotential.boundary_points must be >= 2");
  if (boundary_rounds < 0) throw ConfigError("quasipotential.boundary_rounds must be >= 0");
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

namespace {

double tolerance_for(const QuasiPotentialOptions& opts, double value) {
  return std::max(opts.abs_tol, opts.rel_tol * std::abs(value));
}

/// Free parameters of a K-segment polyline from x to y on [0, t]: interior
/// knots followed by time logits (the first segment's logit is pinned at 0).
struct PathCodec {
  Vec x;
  Vec y;
  double t = 1.0;
  int d = 1;
  int K = 1;

  int size() const { return (K - 1) * (d + 1); }

  Polyline decode(const Vec& theta) const {
    Polyline p;
    std::vector<double> w(K, 1.0);
    for (int k = 1; k < K; ++k) w[k] = std::exp(std::clamp(theta((K - 1) * d + k - 1), -30.0, 30.0));
    double total = 0.0;
    for (double v : w) total += v;
    p.times.resize(K + 1);
    p.times[0] = 0.0;
    double acc = 0.0;
    for (int k = 0; k < K; ++k) {
      acc += w[k];
      p.times[k + 1] = t * acc / total;
    }
    p.times[K] = t;
    p.knots.reserve(K + 1);
    p.knots.push_back(x);
    for (int k = 1; k < K; ++k) p.knots.push_back(theta.segment((k - 1) * d, d));
    p.knots.push_back(y);
    return p;
  }

  Vec encode(const Polyline& p) const {
    Vec theta(size());
    for (int k = 1; k < K; ++k) theta.segment((k - 1) * d, d) = p.knots[k];
    const double first = p.times[1] - p.times[0];
    for (int k = 1; k < K; ++k) theta((K - 1) * d + k - 1) = std::log((p.times[k + 1] - p.times[k]) / first);
    return theta;
  }
};

/// Inserts the midpoint of every segment.
Polyline refine(const Polyline& p) {
  Polyline q;
  for (int k = 0; k < p.segments(); ++k) {
    q.times.push_back(p.times[k]);
    q.knots.push_back(p.knots[k]);
    q.times.push_back(0.5 * (p.times[k] + p.times[k + 1]));
    q.knots.push_back(0.5 * (p.knots[k] + p.knots[k + 1]));
  }
  q.times.push_back(p.times.back());
  q.knots.push_back(p.knots.back());
  return q;
}

struct Evaluator {
  const SystemSpec& system;
  const LevyMeasure& measure;
  std::shared_ptr<const MarkPartition> partition;

  Control build(const Polyline& path, bool ball, double ode_step) const {
    if (ball) return control_for_path(path, system, measure);
    return grid_control_for_path(path, system, measure, partition, {ode_step, 1e-11});
  }

  double cost(const Polyline& path, bool ball) const {
    try {
      return entropy(build(path, ball, 0.05));
    } catch (const Error&) {
      return kInfinite;
    }
  }
};

struct Candidate {
  double value = kInfinite;
  Polyline path;
  int knots = 0;
  int level = 0;
  int restart = 0;
};

struct Certified {
  bool ok = false;
  double value = kInfinite;
  double endpoint_error = 0.0;
  std::shared_ptr<const Control> control;
  Candidate candidate;
};

Certified certify(const Evaluator& ev, const Candidate& cand, bool ball, const Vec& x, const Vec& y,
                  const QuasiPotentialOptions& opts) {
  Certified out;
  out.candidate = cand;
  try {
    auto control = std::make_shared<const Control>(ev.build(cand.path, ball, 0.005));
    const ControlledPath sol = solve_controlled_ode(*control, ev.system, x, opts.certify_dt, false);
    out.endpoint_error = (sol.terminal - y).norm();
    if (!(out.endpoint_error <= opts.endpoint_tol)) return out;
    out.value = entropy(*control);
    out.ok = std::isfinite(out.value);
    out.control = std::move(control);
  } catch (const Error&) {
  }
  return out;
}

struct FamilyRun {
  Certified best;
  std::vector<TraceEntry> trace;
  int evals = 0;
};

FamilyRun optimize_family(const Evaluator& ev, bool ball, const Vec& x, const Vec& y, double t,
                          const QuasiPotentialOptions& opts) {
  const int d = static_cast<int>(x.size());
  const double span = (y - x).norm();
  const double scale = std::max(0.05, span);
  FamilyRun run;
  std::vector<Candidate> finalists;
  const char* family = ball ? "ball" : "grid";

  for (int r = 0; r < opts.restarts; ++r) {
    if (r > 0 && opts.max_knots < 2) break;
    PathCodec codec{x, y, t, d, r == 0 ? 1 : 2};
    Polyline start = Polyline::straight(x, y, t);
    if (r > 0) {
      Rng rng(derive_seed(opts.seed, 0x51, static_cast<std::uint64_t>(r)));
      start = refine(start);
      const Vec dir = span > 0.0 ? Vec((y - x) / span) : Vec(Vec::Unit(d, 0));
      Vec perp = Vec::Zero(d);
      if (d >= 2) {
        perp(0) = -dir(1);
        perp(1) = dir(0);
      }
      start.knots[1] += (y - x) * (0.35 * rng.normal()) + scale * 0.25 * rng.normal() * perp;
      const double split = 1.0 / (1.0 + std::exp(-0.8 * rng.normal()));
      start.times[1] = t * std::clamp(split, 0.05, 0.95);
    }
    Candidate best;
    best.restart = r;
    double previous = kInfinite;
    for (int level = 0; codec.K <= opts.max_knots; ++level) {
      const Vec theta0 = codec.encode(start);
      OptimResult res;
      auto objective = [&](const Vec& th) { return ev.cost(codec.decode(th), ball); };
      if (codec.size() == 0) {
        res.x = theta0;
        res.f = objective(theta0);
        res.evals = 1;
      } else {
        Vec steps(codec.size());
        const double shrink = 1.0 / (1.0 + level);
        for (int i = 0; i < (codec.K - 1) * d; ++i) steps(i) = 0.3 * scale * shrink;
        for (int i = (codec.K - 1) * d; i < codec.size(); ++i) steps(i) = 0.6 * shrink;
        res = nelder_mead(objective, theta0, steps, {opts.nm_max_evals, 1e-9, 1e-9});
        if (codec.K * 2 > opts.max_knots) res = coordinate_refine(objective, res, 0.25 * steps, 1, 1e-3);
      }
      run.evals += res.evals;
      const Polyline path = codec.decode(res.x);
      if (res.f < best.value) {
        best.value = res.f;
        best.path = path;
        best.knots = codec.K;
        best.level = level;
      }
      run.trace.push_back({"chain", family, t, codec.K, r, res.f, res.evals});
      const bool stalled = std::isfinite(previous) &&
                           (previous - res.f) <= opts.improvement_tol * std::max(std::abs(previous), 1e-12);
      previous = std::min(previous, res.f);
      if (stalled) break;
      start = refine(std::isfinite(res.f) ? path : start);
      codec.K *= 2;
    }
    if (std::isfinite(best.value)) finalists.push_back(best);
  }
  std::stable_sort(finalists.begin(), finalists.end(),
                   [](const Candidate& a, const Candidate& b) { return a.value < b.value; });
  for (const auto& cand : finalists) {
    Certified c = certify(ev, cand, ball, x, y, opts);
    run.trace.push_back({c.ok ? "certified" : "rejected", family, t, cand.knots, cand.restart,
                         c.ok ? c.value : cand.value, 0});
    if (c.ok) {
      run.best = std::move(c);
      break;
    }
  }
  return run;
}

/// Flow from x on [0, t]; returns the endpoint.
Vec flow_end(const SystemSpec& system, const Vec& x, double t, double dt) {
  Rk4 rk(system.dimension);
  Vec u = x;
  auto field = [&](double, const Vec& v, Vec& out) { system.drift(v, out); };
  rk.advance(field, 0.0, t, dt, u);
  return u;
}

Polyline flow_polyline(const SystemSpec& system, const Vec& x, double t, int segments) {
  Polyline p;
  p.times.push_back(0.0);
  p.knots.push_back(x);
  if (t <= 0.0) return p;
  Vec u = x;
  Rk4 rk(system.dimension);
  auto field = [&](double, const Vec& v, Vec& out) { system.drift(v, out); };
  for (int k = 1; k <= segments; ++k) {
    rk.advance(field, t * (k - 1) / segments, t * k / segments, 1e-3, u);
    p.times.push_back(t * k / segments);
    p.knots.push_back(u);
  }
  return p;
}

QuasiPotentialResult zero_cost(const Vec& x, const Vec& y, double t, const SystemSpec& system,
                               const LevyMeasure& measure, const QuasiPotentialOptions& opts, double error) {
  QuasiPotentialResult res;
  res.feasible = true;
  res.value = 0.0;
  res.start = x;
  res.target = y;
  res.path = flow_polyline(system, x, t, t > 0.0 ? 16 : 0);
  res.control = std::make_shared<const Control>(Control::identity(measure, t));
  res.family = "flow";
  res.horizon = t;
  res.knots = res.path.segments();
  res.ball_value = 0.0;
  res.grid_value = 0.0;
  res.endpoint_error = error;
  res.tolerance = tolerance_for(opts, 0.0);
  res.trace.push_back({"flow", "identity", t, res.knots, 0, 0.0, 1});
  return res;
}

}  // namespace

QuasiPotentialResult transfer_cost(const Vec& x, const Vec& y, double t, const SystemSpec& system,
                                   const LevyMeasure& measure, const QuasiPotentialOptions& opts) {
  opts.validate();
  if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("transfer horizon must be positive");
  if (x.size() != system.dimension || y.size() != system.dimension) throw ConfigError("state dimension mismatch");
  const Vec end = flow_end(system, x, t, opts.certify_dt);
  const double flow_error = (end - y).norm();
  if (flow_error <= opts.endpoint_tol) return zero_cost(x, y, t, system, measure, opts, flow_error);

  Evaluator ev{system, measure, nullptr};
  if (opts.family != PathFamily::Ball) ev.partition = MarkPartition::build(measure, opts.radial_bins);

  std::vector<bool> families;
  if (opts.family != PathFamily::Grid) families.push_back(true);
  if (opts.family != PathFamily::Ball) families.push_back(false);
  std::vector<FamilyRun> runs(families.size());
  parallel_for(families.size(), static_cast<unsigned>(opts.workers),
               [&](std::size_t i) { runs[i] = optimize_family(ev, families[i], x, y, t, opts); });

  QuasiPotentialResult res;
  res.start = x;
  res.target = y;
  res.horizon = t;
  res.restarts = opts.restarts;
  for (std::size_t i = 0; i < families.size(); ++i) {
    const FamilyRun& run = runs[i];
    res.evaluations += run.evals;
    res.trace.insert(res.trace.end(), run.trace.begin(), run.trace.end());
    if (!run.best.ok) continue;
    (families[i] ? res.ball_value : res.grid_value) = run.best.value;
    if (run.best.value < res.value) {
      res.feasible = true;
      res.value = run.best.value;
      res.path = run.best.candidate.path;
      res.control = run.best.control;
      res.family = families[i] ? "ball" : "grid";
      res.knots = run.best.candidate.knots;
      res.refinement_level = run.best.candidate.level;
      res.endpoint_error = run.best.endpoint_error;
    }
  }
  if (!res.feasible) throw InfeasibleError("no admissible path candidate from any start");
  res.tolerance = tolerance_for(opts, res.value);
  return res;
}

namespace {

/// Closest approach of the flow from x to z on [0, T]: (time, distance).
std::pair<double, double> flow_approach(const SystemSpec& system, const Vec& x, const Vec& z, double T, double dt) {
  Rk4 rk(system.dimension);
  auto field = [&](double, const Vec& v, Vec& out) { system.drift(v, out); };
  Vec u = x;
  double best_t = 0.0;
  double best = (u - z).norm();
  const int n = static_cast<int>(std::ceil(T / dt));
  for (int i = 1; i <= n; ++i) {
    rk.step(field, (i - 1) * dt, dt, u);
    const double dist = (u - z).norm();
    if (dist < best) {
      best = dist;
      best_t = i * dt;
    }
  }
  if (best_t > 0.0) {
    // Golden search of the distance on the neighbouring steps.
    auto dist_at = [&](double s) { return (flow_end(system, x, s, dt * 0.1) - z).norm(); };
    const auto [s, v] = golden_section(dist_at, std::max(0.0, best_t - dt), best_t + dt, 1e-10 * (1.0 + best_t), 60);
    if (v < best) return {s, v};
  }
  return {best_t, best};
}

}  // namespace

QuasiPotentialResult quasipotential_point(const Vec& x, const Vec& z, const SystemSpec& system,
                                          const LevyMeasure& measure, const QuasiPotentialOptions& opts) {
  opts.validate();
  if (x.size() != system.dimension || z.size() != system.dimension) throw ConfigError("state dimension mismatch");
  const auto [tau, dist] = flow_approach(system, x, z, opts.horizons.back(), opts.certify_dt);
  if (dist <= opts.endpoint_tol) {
    const double err = tau > 0.0 ? (flow_end(system, x, tau, opts.certify_dt) - z).norm() : dist;
    if (err <= opts.endpoint_tol) return zero_cost(x, z, tau, system, measure, opts, err);
  }

  QuasiPotentialOptions inner = opts;
  const std::size_t nh = opts.horizons.size();
  inner.workers = 1;
  std::map<double, QuasiPotentialResult> cache;
  std::vector<QuasiPotentialResult> grid(nh);
  std::vector<bool> ok(nh, false);
  parallel_for(nh, static_cast<unsigned>(opts.workers), [&](std::size_t i) {
    try {
      grid[i] = transfer_cost(x, z, opts.horizons[i], system, measure, inner);
      ok[i] = true;
    } catch (const InfeasibleError&) {
    }
  });
  QuasiPotentialResult best;
  std::vector<TraceEntry> summary;
  std::size_t arg = nh;
  int evals = 0;
  for (std::size_t i = 0; i < nh; ++i) {
    summary.push_back({"horizon", ok[i] ? grid[i].family : "none", opts.horizons[i], ok[i] ? grid[i].knots : 0, 0,
                       ok[i] ? grid[i].value : kInfinite, grid[i].evaluations});
    evals += grid[i].evaluations;
    if (ok[i] && (arg == nh || grid[i].value < grid[arg].value)) arg = i;
  }
  if (arg == nh) throw InfeasibleError("no admissible path at any horizon");
  best = grid[arg];
  double ball_best = kInfinite;
  double grid_best = kInfinite;
  for (std::size_t i = 0; i < nh; ++i) {
    ball_best = std::min(ball_best, grid[i].ball_value);
    grid_best = std::min(grid_best, grid[i].grid_value);
  }

  if (opts.golden_steps > 0 && nh > 1) {
    const double lo = std::log(opts.horizons[arg == 0 ? 0 : arg - 1]);
    const double hi = std::log(opts.horizons[std::min(arg + 1, nh - 1)]);
    auto at = [&](double logt) {
      const double t = std::exp(logt);
      try {
        QuasiPotentialResult r = transfer_cost(x, z, t, system, measure, inner);
        evals += r.evaluations;
        ball_best = std::min(ball_best, r.ball_value);
        grid_best = std::min(grid_best, r.grid_value);
        summary.push_back({"golden", r.family, t, r.knots, 0, r.value, r.evaluations});
        if (r.value < best.value) best = std::move(r);
        return summary.back().value;
      } catch (const InfeasibleError&) {
        summary.push_back({"golden", "none", t, 0, 0, kInfinite, 0});
        return kInfinite;
      }
    };
    golden_section(at, lo, hi, 0.0, std::max(0, opts.golden_steps - 2));
  }
  best.trace.insert(best.trace.begin(), summary.begin(), summary.end());
  best.evaluations = evals;
  best.ball_value = ball_best;
  best.grid_value = grid_best;
  best.tolerance = tolerance_for(opts, best.value);
  return best;
}

namespace {

QuasiPotentialResult evaluate_points(const std::vector<Vec>& points, const SystemSpec& system,
                                     const LevyMeasure& measure, const QuasiPotentialOptions& opts,
                                     std::vector<BoundaryValue>& values, QuasiPotentialResult best) {
  QuasiPotentialOptions inner = opts;
  const std::size_t n = points.size();
  inner.workers = std::max(1, opts.workers / static_cast<int>(std::max<std::size_t>(n, 1)));
  std::vector<QuasiPotentialResult> out(n);
  std::vector<bool> ok(n, false);
  const Vec origin = Vec::Zero(system.dimension);
  parallel_for(n, static_cast<unsigned>(opts.workers), [&](std::size_t i) {
    try {
      out[i] = quasipotential_point(origin, points[i], system, measure, inner);
      ok[i] = true;
    } catch (const InfeasibleError&) {
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    values.push_back({points[i], ok[i] ? out[i].value : kInfinite});
    if (ok[i] && (!best.feasible || out[i].value < best.value)) best = std::move(out[i]);
  }
  return best;
}

}  // namespace

QuasiPotentialResult barrier_height(const SystemSpec& system, const LevyMeasure& measure,
                                    const QuasiPotentialOptions& opts) {
  opts.validate();
  const Domain& domain = system.domain;
  if (!domain.bounded()) throw ConfigError("barrier height needs a bounded domain");
  if (!domain.contains(Vec::Zero(system.dimension))) throw ConfigError("the origin must lie inside the domain");
  const int d = system.dimension;
  std::vector<BoundaryValue> values;
  QuasiPotentialResult best;
  double spacing = 0.0;
  if (d == 2) {
    std::vector<Vec> mesh;
    for (int i = 0; i < opts.boundary_points; ++i) mesh.push_back(domain.boundary_point(double(i) / opts.boundary_points));
    best = evaluate_points(mesh, system, measure, opts, values, best);
    double u_best = 0.0;
    for (int i = 0; i < opts.boundary_points; ++i) {
      if (best.feasible && values[i].value == best.value) {
        u_best = double(i) / opts.boundary_points;
        break;
      }
    }
    double h = 1.0 / opts.boundary_points;
    for (int round = 0; round < opts.boundary_rounds && best.feasible; ++round) {
      h *= 0.5;
      std::vector<double> us = {u_best - h, u_best - 0.5 * h, u_best + 0.5 * h, u_best + h};
      std::vector<Vec> pts;
      for (double& u : us) {
        u -= std::floor(u);
        pts.push_back(domain.boundary_point(u));
      }
      const double before = best.value;
      const std::size_t offset = values.size();
      best = evaluate_points(pts, system, measure, opts, values, best);
      if (best.value < before) {
        for (std::size_t i = 0; i < us.size(); ++i) {
          if (values[offset + i].value == best.value) u_best = us[i];
        }
      }
    }
    spacing = 2.0 * domain.bounding_radius() * std::sin(std::numbers::pi / opts.boundary_points) * 2.0;
  } else {
    best = evaluate_points(domain.boundary_samples(d == 1 ? 2 : opts.boundary_points), system, measure, opts,
                           values, best);
  }
  if (!best.feasible) throw InfeasibleError("no boundary point is reachable with an admissible control");
  best.boundary = values;
  best.tolerance = tolerance_for(opts, best.value);
  // Argmin set within twice the tolerance; runner-up among well-separated points.
  best.argmin_set.clear();
  for (const auto& bv : values) {
    if (bv.value <= best.value + 2.0 * best.tolerance) {
      bool separate = true;
      for (const auto& a : best.argmin_set) separate = separate && (a - bv.point).norm() > spacing;
      if (separate) best.argmin_set.push_back(bv.point);
    }
  }
  double runner = kInfinite;
  for (const auto& bv : values) {
    if ((bv.point - best.target).norm() > std::max(spacing, 1e-12)) runner = std::min(runner, bv.value);
  }
  best.runner_up_gap = runner - best.value;
  return best;
}

std::vector<ContinuityRow> continuity_probe(const std::vector<double>& rhos, const SystemSpec& system,
                                            const LevyMeasure& measure, const QuasiPotentialOptions& opts,
                                            int pairs) {
  opts.validate();
  if (pairs < 1) throw ConfigError("continuity probe needs at least one pair");
  const int d = system.dimension;
  // Unit-ball samples shared by every rho; the last pair is antipodal.
  std::vector<std::pair<Vec, Vec>> unit;
  Rng rng(derive_seed(opts.seed, 0xC0));
  auto ball_point = [&] {
    Vec v(d);
    for (int i = 0; i < d; ++i) v(i) = rng.normal();
    const double r = std::pow(rng.uniform(), 1.0 / d);
    return Vec(r * v / v.norm());
  };
  for (int i = 0; i + 1 < pairs; ++i) {
    Vec a = ball_point();
    Vec b = ball_point();
    unit.emplace_back(a, b);
  }
  unit.emplace_back(Vec::Unit(d, 0), Vec(-Vec::Unit(d, 0)));
  const std::vector<double> times = {0.25, 0.5, 1.0};
  QuasiPotentialOptions inner = opts;
  inner.workers = 1;

  std::vector<ContinuityRow> rows;
  for (double rho : rhos) {
    if (!(rho >= 0.0)) throw ConfigError("rho must be nonnegative");
    ContinuityRow row;
    row.rho = rho;
    row.pairs = static_cast<int>(unit.size());
    std::vector<double> costs(unit.size(), 0.0);
    parallel_for(unit.size(), static_cast<unsigned>(opts.workers), [&](std::size_t i) {
      const Vec x = rho * unit[i].first;
      const Vec y = rho * unit[i].second;
      double best = kInfinite;
      for (double t : times) {
        try {
          best = std::min(best, transfer_cost(x, y, t, system, measure, inner).value);
        } catch (const InfeasibleError&) {
        }
        if (best == 0.0) break;
      }
      costs[i] = best;
    });
    for (double c : costs) row.value = std::max(row.value, c);
    if (rho > 0.0) {
      const Vec e = rho * Vec::Unit(d, 0);
      double bound = 0.0;
      for (int sgn : {1, -1}) {
        try {
          bound = std::max(bound, entropy(control_for_path(Polyline::straight(sgn * e, -sgn * e, 1.0), system, measure)));
        } catch (const Error&) {
          bound = kInfinite;
        }
      }
      row.bound = bound;
    }
    rows.push_back(row);
  }
  return rows;
}

CertificateCheck verify_certificate(const QuasiPotentialResult& result, const SystemSpec& system, double dt) {
  CertificateCheck check;
  if (!result.control) return check;
  const ControlledPath sol = solve_controlled_ode(*result.control, system, result.start, dt, false);
  check.endpoint_error = (sol.terminal - result.target).norm();
  check.entropy = entropy(*result.control);
  check.ok = check.endpoint_error <= 1e-4 && std::abs(check.entropy - result.value) <= 1e-10 * (1.0 + result.value);
  return check;
}

std::vector<std::pair<std::string, std::string>> serialize_result(const QuasiPotentialResult& r,
                                                                  const std::string& prefix) {
  std::vector<std::pair<std::string, std::string>> out;
  auto put = [&](const std::string& key, std::string value) { out.emplace_back(prefix + "." + key, std::move(value)); };
  put("bound", "certified upper bound");
  put("feasible", r.feasible ? "true" : "false");
  put("value", format_double(r.value));
  put("tolerance", format_double(r.tolerance));
  put("family", r.family);
  put("start", format_vec(r.start));
  put("target", format_vec(r.target));
  put("horizon", format_double(r.horizon));
  put("knots", std::to_string(r.knots));
  put("refinement_level", std::to_string(r.refinement_level));
  put("ball_value", format_double(r.ball_value));
  put("grid_value", format_double(r.grid_value));
  put("relaxation_delta", format_double(r.ball_value - r.grid_value));
  put("endpoint_error", format_double(r.endpoint_error));
  put("restarts", std::to_string(r.restarts));
  put("evaluations", std::to_string(r.evaluations));
  put("path.times", format_list(r.path.times));
  {
    std::string knots;
    for (std::size_t i = 0; i < r.path.knots.size(); ++i) {
      if (i) knots += "; ";
      knots += format_vec(r.path.knots[i], ", ");
    }
    put("path.knots", knots);
  }
  if (!r.argmin_set.empty()) {
    std::string s;
    for (std::size_t i = 0; i < r.argmin_set.size(); ++i) {
      if (i) s += "; ";
      s += format_vec(r.argmin_set[i], ", ");
    }
    put("argmin", s);
    put("runner_up_gap", format_double(r.runner_up_gap));
    put("boundary.count", std::to_string(r.boundary.size()));
    for (std::size_t i = 0; i < r.boundary.size(); ++i) {
      put("boundary." + std::to_string(i), format_vec(r.boundary[i].point, ", ") + "; " + format_double(r.boundary[i].value));
    }
  }
  if (r.control) {
    for (auto& kv : serialize_control(*r.control, prefix + ".control")) out.push_back(std::move(kv));
  }
  put("trace.count", std::to_string(r.trace.size()));
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    const TraceEntry& e = r.trace[i];
    put("trace." + std::to_string(i), e.stage + " " + e.family + " " + format_double(e.horizon) + " " +
                                          std::to_string(e.knots) + " " + std::to_string(e.restart) + " " +
                                          format_double(e.value) + " " + std::to_string(e.evals));
  }
  return out;
}

}  // namespace kramers

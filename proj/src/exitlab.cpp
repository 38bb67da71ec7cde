#include "kramers/exitlab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kramers/errors.hpp"
#include "kramers/noise.hpp"
#include "kramers/parallel.hpp"
#include "kramers/random.hpp"

namespace kramers {

namespace {

constexpr std::uint64_t kCycleStream = 0xC7C1E;
constexpr std::uint64_t kBootstrapStream = 0xB0075;

}  // namespace

void ExitExperiment::validate() const {
  if (epsilons.empty()) throw ConfigError("epsilon schedule is empty");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0 && epsilons[i] <= 1.0)) throw ConfigError("epsilon must lie in (0, 1]");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1])) throw ConfigError("epsilon schedule must decrease strictly");
  }
  if (paths < 100) throw ConfigError("at least 100 paths per epsilon are required");
  if (!(t_cap >= 0.0)) throw ConfigError("t_cap must be nonnegative");
  if (!(t_cap_factor > 0.0) || !(fallback_t_cap > 0.0)) throw ConfigError("t_cap policy factors must be positive");
  if (bootstrap < 1) throw ConfigError("bootstrap resamples must be >= 1");
  if (!(location_delta > 0.0)) throw ConfigError("location delta must be positive");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (start.size() != system.dimension) throw ConfigError("start state has the wrong dimension");
  if (measure.dimension() != system.dimension) throw ConfigError("measure and system dimensions differ");
}

double ExitExperiment::cap_for(double epsilon, double vbar) const {
  if (t_cap > 0.0) return t_cap;
  if (!std::isfinite(vbar)) return fallback_t_cap;
  const double delta = window_delta < 0.0 ? 0.5 * vbar : window_delta;
  return std::max(fallback_t_cap, t_cap_factor * std::exp((vbar + delta) / epsilon));
}

BarrierInfo BarrierInfo::from(const QuasiPotentialResult& result) {
  BarrierInfo info;
  info.vbar = result.value;
  info.argmin = result.argmin_set.empty() ? std::vector<Vec>{result.target} : result.argmin_set;
  info.unique = info.argmin.size() == 1 && result.runner_up_gap > 2.0 * result.tolerance;
  return info;
}

std::vector<std::vector<ExitSample>> simulate_exits(const ExitExperiment& exp, const BarrierInfo& barrier) {
  exp.validate();
  std::vector<std::vector<ExitSample>> out(exp.epsilons.size());
  for (std::size_t k = 0; k < exp.epsilons.size(); ++k) {
    const double eps = exp.epsilons[k];
    const double cap = exp.cap_for(eps, barrier.vbar);
    auto& slot = out[k];
    slot.resize(static_cast<std::size_t>(exp.paths));
    parallel_for(slot.size(), static_cast<unsigned>(exp.workers), [&](std::size_t i) {
      Rng rng(derive_seed(exp.seed, k, i));
      const ExitResult r = first_exit(exp.system, exp.measure, exp.start, eps, rng, cap, exp.sim);
      slot[i] = {r.time, r.timeout, r.point};
    });
  }
  return out;
}

namespace {

std::vector<double> histogram_edges(const Domain& domain) {
  std::vector<double> edges;
  if (domain.dimension() == 1) {
    const double R = domain.bounded() ? domain.bounding_radius() : 1.0;
    const int bins = 40;
    for (int i = 0; i <= bins; ++i) edges.push_back(-1.5 * R + 3.0 * R * i / bins);
  } else {
    const int bins = 36;
    for (int i = 0; i <= bins; ++i) edges.push_back(-std::numbers::pi + 2.0 * std::numbers::pi * i / bins);
  }
  return edges;
}

std::vector<int> histogram(const std::vector<ExitSample>& samples, const std::vector<double>& edges) {
  std::vector<int> counts(edges.size() - 1, 0);
  for (const auto& s : samples) {
    if (s.timeout) continue;
    const double v = s.point.size() == 1 ? s.point(0) : std::atan2(s.point(1), s.point(0));
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    long idx = static_cast<long>(it - edges.begin()) - 1;
    idx = std::clamp(idx, 0L, static_cast<long>(counts.size()) - 1);
    ++counts[static_cast<std::size_t>(idx)];
  }
  return counts;
}

double min_distance(const Vec& p, const std::vector<Vec>& targets) {
  double best = kInfinite;
  for (const auto& z : targets) best = std::min(best, (p - z).norm());
  return best;
}

}  // namespace

KramersReport summarize_exits(const ExitExperiment& exp, const BarrierInfo& barrier,
                              const std::vector<std::vector<ExitSample>>& samples) {
  exp.validate();
  if (samples.size() != exp.epsilons.size()) throw ConfigError("one sample set per epsilon is required");
  KramersReport rep;
  rep.vbar = barrier.vbar;
  rep.argmin = barrier.argmin;
  rep.concentration_label = barrier.unique ? "unique" : "symmetric-pair";
  rep.window_delta = exp.window_delta < 0.0 ? 0.5 * barrier.vbar : exp.window_delta;
  rep.location_delta = exp.location_delta;
  rep.histogram_edges = histogram_edges(exp.system.domain);
  const auto stat_mean = [](const std::vector<double>& v) { return mean(v); };

  for (std::size_t k = 0; k < samples.size(); ++k) {
    const double eps = exp.epsilons[k];
    const auto& s = samples[k];
    EpsilonRow row;
    row.epsilon = eps;
    row.paths = static_cast<int>(s.size());
    row.t_cap = exp.cap_for(eps, barrier.vbar);
    std::vector<double> times;
    std::vector<double> window;
    std::vector<double> near;
    row.location_mass.assign(barrier.argmin.size(), 0.0);
    const double lo = std::exp((barrier.vbar - rep.window_delta) / eps);
    const double hi = std::exp((barrier.vbar + rep.window_delta) / eps);
    for (const auto& e : s) {
      times.push_back(e.time);
      if (e.timeout) ++row.timeouts;
      const bool in_window = std::isfinite(barrier.vbar) && !e.timeout && e.time > lo && e.time < hi;
      window.push_back(in_window ? 1.0 : 0.0);
      const bool close = !e.timeout && min_distance(e.point, barrier.argmin) < exp.location_delta;
      near.push_back(close ? 1.0 : 0.0);
      for (std::size_t j = 0; j < barrier.argmin.size(); ++j) {
        if (!e.timeout && (e.point - barrier.argmin[j]).norm() < exp.location_delta) row.location_mass[j] += 1.0;
      }
    }
    for (auto& m : row.location_mass) m /= static_cast<double>(s.size());
    row.timeout_fraction = static_cast<double>(row.timeouts) / static_cast<double>(s.size());
    row.invalid_for_mean = row.timeout_fraction > exp.max_timeout_fraction;
    Rng rng(derive_seed(exp.seed, kBootstrapStream, k));
    row.mean = bootstrap_ci(times, stat_mean, rng, exp.bootstrap);
    row.window = bootstrap_ci(window, stat_mean, rng, exp.bootstrap);
    row.concentration = bootstrap_ci(near, stat_mean, rng, exp.bootstrap);
    row.median = median(times);
    row.eps_log_mean = eps * std::log(row.mean.estimate);
    row.histogram = histogram(s, rep.histogram_edges);
    rep.invalid_for_mean = rep.invalid_for_mean || row.invalid_for_mean;
    rep.rows.push_back(std::move(row));
  }
  if (rep.invalid_for_mean) rep.flags.push_back("INVALID-FOR-MEAN");
  std::vector<double> eps;
  std::vector<double> gap;
  std::vector<double> value;
  for (const auto& r : rep.rows) {
    if (r.invalid_for_mean || !std::isfinite(r.eps_log_mean)) continue;
    eps.push_back(r.epsilon);
    value.push_back(r.eps_log_mean);
    gap.push_back(std::abs(r.eps_log_mean - barrier.vbar));
  }
  if (eps.size() >= 2 && std::isfinite(barrier.vbar)) {
    rep.trend_spearman = spearman(gap, eps);
    rep.trend_fit = linear_fit(eps, value);
  }
  if (!barrier.unique) rep.flags.push_back("NON-UNIQUE-ARGMIN");
  return rep;
}

KramersReport run_exit_mc(const ExitExperiment& exp, const BarrierInfo& barrier) {
  return summarize_exits(exp, barrier, simulate_exits(exp, barrier));
}

LocationStats exit_location_stats(const ExitExperiment& exp, const BarrierInfo& barrier, double delta) {
  if (!(delta > 0.0)) throw ConfigError("location delta must be positive");
  ExitExperiment local = exp;
  local.location_delta = delta;
  const KramersReport rep = run_exit_mc(local, barrier);
  LocationStats out;
  out.label = rep.concentration_label;
  out.histogram_edges = rep.histogram_edges;
  for (const auto& r : rep.rows) {
    out.epsilons.push_back(r.epsilon);
    out.concentration.push_back(r.concentration);
    out.location_mass.push_back(r.location_mass);
    out.histograms.push_back(r.histogram);
  }
  out.nondecreasing = nondecreasing_within_ci(out.concentration);
  return out;
}

std::vector<CycleRow> cycle_diagnostic(const ExitExperiment& exp, double rho, double rho_prime, double t_cap) {
  exp.validate();
  if (!(rho > 0.0) || !(rho < rho_prime)) throw ConfigError("cycle diagnostic needs 0 < rho < rho_prime");
  if (!(t_cap > 0.0)) throw ConfigError("cycle diagnostic needs a positive t_cap");
  if (exp.start.norm() > rho) throw ConfigError("the start must lie in the closed ball of radius rho");
  const Domain& domain = exp.system.domain;
  const double dt = exp.sim.dt > 0.0 ? exp.sim.dt : default_dt(exp.system);
  std::vector<CycleRow> rows;
  for (std::size_t k = 0; k < exp.epsilons.size(); ++k) {
    const double eps = exp.epsilons[k];
    struct PathOut {
      int attempts = 0;
      double first_cycle = 0.0;
      double exit_time = 0.0;
      bool timeout = false;
    };
    std::vector<PathOut> paths(static_cast<std::size_t>(exp.paths));
    parallel_for(paths.size(), static_cast<unsigned>(exp.workers), [&](std::size_t i) {
      Rng rng(derive_seed(derive_seed(exp.seed, kCycleStream), k, i));
      JumpStream stream(exp.measure, eps, nullptr, rng);
      PathSimulator sim(exp.system, exp.measure, eps, dt, stream, exp.sim.jump_cap);
      sim.reset(exp.start);
      auto outward = [&](const Vec& v) { return std::max(v.norm() - rho_prime, domain.signed_distance(v)); };
      auto inward = [&](const Vec& v) { return std::max(rho - v.norm(), domain.signed_distance(v)); };
      PathOut& out = paths[i];
      for (;;) {
        ++out.attempts;
        const double cycle_start = sim.time();
        bool done = false;
        if (sim.run_until(outward, t_cap) == PathSimulator::Stop::TimeLimit) {
          out.timeout = true;
          break;
        }
        if (domain.signed_distance(sim.state()) >= 0.0) {
          done = true;
        } else {
          if (sim.run_until(inward, t_cap) == PathSimulator::Stop::TimeLimit) {
            out.timeout = true;
            break;
          }
          done = domain.signed_distance(sim.state()) >= 0.0;
        }
        if (out.attempts == 1) out.first_cycle = sim.time() - cycle_start;
        if (done) {
          out.exit_time = sim.time();
          break;
        }
      }
    });
    CycleRow row;
    row.epsilon = eps;
    double sum_attempts = 0.0;
    double sum_cycle = 0.0;
    double sum_exit = 0.0;
    for (const auto& p : paths) {
      if (p.timeout) {
        ++row.timeouts;
        continue;
      }
      ++row.paths;
      row.attempts.push_back(p.attempts);
      sum_attempts += p.attempts;
      sum_cycle += p.first_cycle;
      sum_exit += p.exit_time;
    }
    if (row.paths > 0) {
      row.mean_attempts = sum_attempts / row.paths;
      row.q_hat = 1.0 / row.mean_attempts;
      row.mean_cycle = sum_cycle / row.paths;
      row.mean_exit_time = sum_exit / row.paths;
      row.wald_relative_error =
          std::abs(row.mean_exit_time - row.mean_attempts * row.mean_cycle) / std::max(row.mean_exit_time, 1e-300);
      row.wald_ok = row.wald_relative_error <= 0.15;
      row.chi_square = chi_square_geometric(row.attempts, std::min(1.0, row.q_hat));
      row.geometric_ok = row.chi_square.p_value > 0.05;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<IsRow> importance_sampled_exit(const ExitExperiment& exp, const Control& tilt, double horizon) {
  exp.validate();
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("IS horizon must be positive and finite");
  if (!std::isfinite(tilt.g_max())) throw ConfigError("IS tilt must be bounded");
  if (tilt.kind() == ControlKind::ConstantTilt && !(tilt.level() > 0.0)) throw ConfigError("IS tilt must be positive");
  if (tilt.kind() == ControlKind::GridTilt) {
    for (const auto& row : tilt.grid_levels()) {
      for (double l : row) {
        if (!(l > 0.0)) throw ConfigError("IS tilt must be strictly positive");
      }
    }
  }
  std::vector<IsRow> rows;
  for (std::size_t k = 0; k < exp.epsilons.size(); ++k) {
    const double eps = exp.epsilons[k];
    IsRow row;
    row.epsilon = eps;
    row.horizon = horizon;
    row.paths = exp.paths;
    const auto n = static_cast<std::size_t>(exp.paths);
    std::vector<double> direct(n);
    std::vector<double> weighted(n);
    row.log_weights.resize(n);
    row.exited.resize(n);
    parallel_for(n, static_cast<unsigned>(exp.workers), [&](std::size_t i) {
      const std::uint64_t seed = derive_seed(exp.seed, k, i);
      Rng plain(seed);
      const ExitResult d = first_exit(exp.system, exp.measure, exp.start, eps, plain, horizon, exp.sim);
      direct[i] = d.timeout ? 0.0 : 1.0;
      Rng tilted(seed);
      const ExitResult t = first_exit(exp.system, exp.measure, exp.start, eps, tilted, horizon, exp.sim, &tilt);
      row.log_weights[i] = t.log_weight;
      row.exited[i] = t.timeout ? 0 : 1;
      weighted[i] = t.timeout ? 0.0 : std::exp(t.log_weight);
    });
    const double dn = static_cast<double>(n);
    row.direct = mean(direct);
    row.direct_se = std::sqrt(row.direct * (1.0 - row.direct) / dn);
    row.weighted = mean(weighted);
    row.weighted_se = std::sqrt(variance(weighted) / dn);
    row.ess = effective_sample_size(weighted);
    row.unreliable = row.ess < 50.0;
    row.agree = std::abs(row.direct - row.weighted) <= 3.0 * (row.direct_se + row.weighted_se);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace kramers

#include "kramers/dynamics.hpp"

#include <cmath>
#include <ostream>

#include "kramers/errors.hpp"
#include "kramers/text.hpp"

namespace kramers {

double default_dt(const SystemSpec& system) {
  Rng rng(0x5eedULL);
  const double bound = drift_jacobian_bound(system, rng);
  return 1e-3 * std::min(1.0, bound > 0.0 ? 1.0 / bound : 1.0);
}

FlowPath flow_deterministic(const SystemSpec& system, const Vec& x, double T, double dt) {
  if (!(dt > 0.0)) throw ConfigError("flow step must be positive");
  if (!(T >= 0.0)) throw ConfigError("flow horizon must be nonnegative");
  FlowPath path;
  Vec u = x;
  Rk4 rk(system.dimension);
  auto field = [&](double, const Vec& v, Vec& out) { system.drift(v, out); };
  path.times.push_back(0.0);
  path.states.push_back(u);
  const int n = T > 0.0 ? std::max(1, static_cast<int>(std::ceil(T / dt - 1e-12))) : 0;
  const double h = n > 0 ? T / n : 0.0;
  for (int i = 0; i < n; ++i) {
    rk.step(field, i * h, h, u);
    path.times.push_back((i + 1) * h);
    path.states.push_back(u);
  }
  return path;
}

Vec effective_drift(const SystemSpec& system, const LevyMeasure& measure, const Vec& x) {
  Vec out(x.size());
  system.drift(x, out);
  const Vec& m1 = measure.first_moment();
  if (m1.norm() > 0.0) out -= system.G(x) * m1;
  return out;
}

PathSimulator::PathSimulator(const SystemSpec& system, const LevyMeasure& measure, double epsilon, double dt,
                             JumpSource& source, std::uint64_t jump_cap)
    : system_(system),
      epsilon_(epsilon),
      dt_(dt),
      source_(source),
      jump_cap_(jump_cap),
      m1_(measure.first_moment()),
      rk_(system.dimension),
      x_(Vec::Zero(system.dimension)),
      prev_(system.dimension),
      probe_(system.dimension),
      pending_z_(system.dimension) {
  if (!(dt > 0.0)) throw ConfigError("simulation step must be positive");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in (0, 1]");
  has_m1_ = m1_.norm() > 0.0;
}

void PathSimulator::reset(const Vec& x, double t) {
  x_ = x;
  t_ = t;
  jumps_ = 0;
  log_g_sum_ = 0.0;
  pending_ = false;
}

PathSimulator::Stop PathSimulator::run_until(const EventFn& event, double t_limit) {
  auto field = [this](double, const Vec& v, Vec& out) {
    system_.drift(v, out);
    if (has_m1_) out -= system_.G(v) * m1_;
  };
  if (event(x_) >= 0.0) return Stop::Event;
  for (;;) {
    if (!pending_) {
      pending_t_ = source_.next(pending_z_);
      pending_ = true;
    }
    const double target = std::min(pending_t_, t_limit);
    while (t_ < target) {
      const double h = std::min(dt_, target - t_);
      prev_ = x_;
      rk_.step(field, t_, h, x_);
      if (event(x_) >= 0.0) {
        // Locate the crossing inside this sub-step.
        double lo = 0.0;
        double hi = h;
        const double tol = dt_ * 1e-3;
        while (hi - lo > tol) {
          const double mid = 0.5 * (lo + hi);
          probe_ = prev_;
          rk_.step(field, t_, mid, probe_);
          if (event(probe_) >= 0.0) {
            hi = mid;
            x_ = probe_;
          } else {
            lo = mid;
          }
        }
        t_ += hi;
        return Stop::Event;
      }
      t_ = h == target - t_ ? target : t_ + h;
    }
    if (pending_t_ > t_limit) {
      t_ = t_limit;
      return Stop::TimeLimit;
    }
    // Jump at pending_t_.
    prev_ = x_;
    x_.noalias() += (epsilon_ * system_.G(prev_)) * pending_z_;
    if (!x_.allFinite()) throw NumericalError("non-finite state after a jump");
    pending_ = false;
    ++jumps_;
    log_g_sum_ += source_.last_log_g();
    if (on_jump) on_jump(t_, prev_, x_);
    if (jumps_ > jump_cap_) throw NumericalError("jump count exceeded the configured cap");
    if (event(x_) >= 0.0) return Stop::Event;
  }
}

namespace {

Trajectory run_trajectory(const SystemSpec& system, const LevyMeasure& measure, const Vec& x, double epsilon,
                          double T, JumpSource& source, const SimOptions& opts) {
  if (!x.allFinite()) throw ConfigError("initial state must be finite");
  if (!(T >= 0.0)) throw ConfigError("horizon must be nonnegative");
  const double dt = opts.dt > 0.0 ? opts.dt : default_dt(system);
  PathSimulator sim(system, measure, epsilon, dt, source, opts.jump_cap);
  sim.reset(x);
  Trajectory traj;
  traj.breakpoints.push_back({0.0, x, x, false});
  sim.on_jump = [&](double t, const Vec& before, const Vec& after) {
    traj.breakpoints.push_back({t, before, after, true});
  };
  const Domain& domain = system.domain;
  auto exit_event = [&](const Vec& v) { return domain.signed_distance(v); };
  if (sim.run_until(exit_event, T) == PathSimulator::Stop::Event) {
    traj.exited = true;
    traj.exit_time = sim.time();
    traj.exit_point = sim.state();
    if (traj.breakpoints.back().time != sim.time() || !traj.breakpoints.back().jump) {
      traj.breakpoints.push_back({sim.time(), sim.state(), sim.state(), false});
    }
    sim.run_until([](const Vec&) { return -1.0; }, T);
  }
  traj.terminal_time = sim.time();
  traj.terminal_state = sim.state();
  traj.jumps = sim.jumps();
  traj.breakpoints.push_back({sim.time(), sim.state(), sim.state(), false});
  return traj;
}

}  // namespace

Trajectory simulate_sde(const SystemSpec& system, const LevyMeasure& measure, const Vec& x, double epsilon, double T,
                        Rng& rng, const SimOptions& opts, const Control* tilt) {
  JumpStream stream(measure, epsilon, tilt, rng);
  return run_trajectory(system, measure, x, epsilon, T, stream, opts);
}

Trajectory simulate_sde(const SystemSpec& system, const LevyMeasure& measure, const Vec& x, double epsilon, double T,
                        const std::vector<JumpRecord>& jumps, const SimOptions& opts) {
  for (std::size_t i = 1; i < jumps.size(); ++i) {
    if (!(jumps[i].time > jumps[i - 1].time)) throw ConfigError("jump times must increase strictly");
  }
  ListJumpSource source(jumps);
  return run_trajectory(system, measure, x, epsilon, T, source, opts);
}

ExitResult first_exit(const SystemSpec& system, const LevyMeasure& measure, const Vec& x, double epsilon, Rng& rng,
                      double t_cap, const SimOptions& opts, const Control* tilt) {
  if (!(t_cap > 0.0)) throw ConfigError("t_cap must be positive");
  ExitResult res;
  const Domain& domain = system.domain;
  if (!domain.contains(x)) {
    res.point = x;
    return res;
  }
  JumpStream stream(measure, epsilon, tilt, rng);
  const double dt = opts.dt > 0.0 ? opts.dt : default_dt(system);
  PathSimulator sim(system, measure, epsilon, dt, stream, opts.jump_cap);
  sim.reset(x);
  const auto stop = sim.run_until([&](const Vec& v) { return domain.signed_distance(v); }, t_cap);
  res.timeout = stop == PathSimulator::Stop::TimeLimit;
  res.time = sim.time();
  res.point = sim.state();
  res.jumps = sim.jumps();
  if (tilt) res.log_weight = -sim.log_g_sum() + tilt->excess_integral(0.0, res.time) / epsilon;
  return res;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  const Eigen::Index d = trajectory.terminal_state.size();
  out << "time";
  for (Eigen::Index i = 0; i < d; ++i) out << ",pre_" << i + 1;
  for (Eigen::Index i = 0; i < d; ++i) out << ",post_" << i + 1;
  out << ",jump\n";
  for (const auto& bp : trajectory.breakpoints) {
    out << format_double(bp.time);
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << format_double(bp.before(i));
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << format_double(bp.after(i));
    out << ',' << (bp.jump ? 1 : 0) << '\n';
  }
}

}  // namespace kramers

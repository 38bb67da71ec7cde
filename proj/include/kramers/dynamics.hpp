#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "kramers/controls.hpp"
#include "kramers/noise.hpp"
#include "kramers/ode.hpp"
#include "kramers/system.hpp"

namespace kramers {

struct SimOptions {
  /// Inter-jump step; 0 selects default_dt(system).
  double dt = 0.0;
  /// Guard against runaway jump counts for tiny epsilon.
  std::uint64_t jump_cap = 500'000'000;
};

/// 1e-3 * min(1, 1 / |Db|) with |Db| estimated on probes inside D.
double default_dt(const SystemSpec& system);

struct FlowPath {
  std::vector<double> times;
  std::vector<Vec> states;
};

/// RK4 solution of x' = b(x) on [0, T].
FlowPath flow_deterministic(const SystemSpec& system, const Vec& x, double T, double dt);

/// b(x) - G(x) m1 with m1 = int_{|z| > cutoff} z nu(dz).
Vec effective_drift(const SystemSpec& system, const LevyMeasure& measure, const Vec& x);

struct Breakpoint {
  double time = 0.0;
  Vec before;
  Vec after;
  bool jump = false;
};

struct Trajectory {
  std::vector<Breakpoint> breakpoints;
  double terminal_time = 0.0;
  Vec terminal_state;
  bool exited = false;
  double exit_time = 0.0;
  Vec exit_point;
  std::uint64_t jumps = 0;
};

/// Pathwise integrator of the SDE: effective drift between jumps (RK4 landing
/// exactly on jump times), X <- X + eps G(X-) z at jumps, and events located
/// by bisection on the sub-step to dt * 1e-3.
class PathSimulator {
 public:
  using EventFn = std::function<double(const Vec&)>;
  enum class Stop { Event, TimeLimit };

  PathSimulator(const SystemSpec& system, const LevyMeasure& measure, double epsilon, double dt,
                JumpSource& source, std::uint64_t jump_cap = 500'000'000);

  void reset(const Vec& x, double t = 0.0);
  /// Runs until event(X) >= 0 (checked continuously) or the time limit.
  Stop run_until(const EventFn& event, double t_limit);

  double time() const { return t_; }
  const Vec& state() const { return x_; }
  std::uint64_t jumps() const { return jumps_; }
  /// Sum of ln g over applied jumps.
  double log_g_sum() const { return log_g_sum_; }

  /// Called at each applied jump with (time, state before, state after).
  std::function<void(double, const Vec&, const Vec&)> on_jump;

 private:
  const SystemSpec& system_;
  double epsilon_;
  double dt_;
  JumpSource& source_;
  std::uint64_t jump_cap_;
  Vec m1_;
  bool has_m1_ = false;
  Rk4 rk_;
  Vec x_;
  Vec prev_;
  Vec probe_;
  Vec pending_z_;
  double pending_t_ = 0.0;
  bool pending_ = false;
  double t_ = 0.0;
  std::uint64_t jumps_ = 0;
  double log_g_sum_ = 0.0;
};

/// Path on [0, T] with breakpoints at the start, every jump, and T. The first
/// exit from D, if any, is recorded but does not stop the path. With `tilt`
/// the noise is N^{g/eps}.
Trajectory simulate_sde(const SystemSpec& system, const LevyMeasure& measure, const Vec& x, double epsilon, double T,
                        Rng& rng, const SimOptions& opts = {}, const Control* tilt = nullptr);
/// Same with a prescribed jump list.
Trajectory simulate_sde(const SystemSpec& system, const LevyMeasure& measure, const Vec& x, double epsilon, double T,
                        const std::vector<JumpRecord>& jumps, const SimOptions& opts = {});

struct ExitResult {
  bool timeout = false;
  double time = 0.0;
  Vec point;
  std::uint64_t jumps = 0;
  /// ln dP/dQ at min(sigma, t_cap) when tilted; 0 otherwise.
  double log_weight = 0.0;
};

/// First exit time and point of D, or a timeout at t_cap.
ExitResult first_exit(const SystemSpec& system, const LevyMeasure& measure, const Vec& x, double epsilon, Rng& rng,
                      double t_cap, const SimOptions& opts = {}, const Control* tilt = nullptr);

/// Delimited dump: time, pre_1..pre_d, post_1..post_d, jump.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace kramers

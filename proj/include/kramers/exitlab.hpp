#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "kramers/controls.hpp"
#include "kramers/dynamics.hpp"
#include "kramers/quasipotential.hpp"
#include "kramers/statistics.hpp"

namespace kramers {

struct ExitExperiment {
  ExitExperiment(SystemSpec system_, LevyMeasure measure_)
      : system(std::move(system_)), measure(std::move(measure_)), start(Vec::Zero(system.dimension)) {}

  SystemSpec system;
  LevyMeasure measure;
  Vec start;
  /// Strictly decreasing.
  std::vector<double> epsilons = {0.4, 0.3, 0.2, 0.15};
  int paths = 2000;
  /// Explicit cap on each path; 0 selects the policy below.
  double t_cap = 0.0;
  /// Policy cap: t_cap_factor * exp((Vbar + window_delta) / eps), or
  /// fallback_t_cap when no finite barrier is known.
  double t_cap_factor = 10.0;
  double fallback_t_cap = 100.0;
  SimOptions sim;
  std::uint64_t seed = 1;
  int workers = 1;
  int bootstrap = 1000;
  /// Window half-width; negative means 0.5 * Vbar.
  double window_delta = -1.0;
  double location_delta = 0.25;
  /// Timeout fraction above which the mean is not estimable.
  double max_timeout_fraction = 0.2;

  void validate() const;
  double cap_for(double epsilon, double vbar) const;
};

/// Barrier facts used by the experiments.
struct BarrierInfo {
  double vbar = kInfinite;
  std::vector<Vec> argmin;
  /// False when the argmin is not separated from the runner-up.
  bool unique = true;

  static BarrierInfo from(const QuasiPotentialResult& result);
};

struct ExitSample {
  double time = 0.0;
  bool timeout = false;
  Vec point;
};

/// n first exits per epsilon; path i at epsilon index k uses the stream
/// derive_seed(seed, k, i).
std::vector<std::vector<ExitSample>> simulate_exits(const ExitExperiment& exp, const BarrierInfo& barrier);

struct EpsilonRow {
  double epsilon = 0.0;
  int paths = 0;
  int timeouts = 0;
  double timeout_fraction = 0.0;
  double t_cap = 0.0;
  Interval mean;
  double median = 0.0;
  double eps_log_mean = 0.0;
  Interval window;
  Interval concentration;
  /// Mass near each argmin point.
  std::vector<double> location_mass;
  std::vector<int> histogram;
  bool invalid_for_mean = false;
};

struct KramersReport {
  double vbar = kInfinite;
  std::vector<Vec> argmin;
  /// "unique" or "symmetric-pair".
  std::string concentration_label = "unique";
  double window_delta = 0.0;
  double location_delta = 0.0;
  std::vector<double> histogram_edges;
  std::vector<EpsilonRow> rows;
  /// Spearman correlation of |eps ln mean - Vbar| against eps.
  double trend_spearman = 0.0;
  /// eps ln mean ~ intercept + slope * eps.
  LinearFit trend_fit;
  bool invalid_for_mean = false;
  std::vector<std::string> flags;
};

KramersReport run_exit_mc(const ExitExperiment& exp, const BarrierInfo& barrier);
/// Report from precomputed samples (as returned by simulate_exits).
KramersReport summarize_exits(const ExitExperiment& exp, const BarrierInfo& barrier,
                              const std::vector<std::vector<ExitSample>>& samples);

struct LocationStats {
  std::string label;
  std::vector<double> epsilons;
  std::vector<Interval> concentration;
  /// Per epsilon, mass near each argmin point.
  std::vector<std::vector<double>> location_mass;
  std::vector<double> histogram_edges;
  std::vector<std::vector<int>> histograms;
  bool nondecreasing = true;
};

LocationStats exit_location_stats(const ExitExperiment& exp, const BarrierInfo& barrier, double delta);

struct CycleRow {
  double epsilon = 0.0;
  int paths = 0;
  int timeouts = 0;
  double mean_attempts = 0.0;
  /// Per-attempt success probability 1 / mean attempts.
  double q_hat = 0.0;
  /// Mean length of a path's first cycle.
  double mean_cycle = 0.0;
  double mean_exit_time = 0.0;
  /// |E sigma - E N * E L| / E sigma.
  double wald_relative_error = 0.0;
  bool wald_ok = false;
  ChiSquare chi_square;
  bool geometric_ok = false;
  std::vector<int> attempts;
};

/// Stopping-time ladder between the small ball B_rho and the sphere of radius rho_prime.
std::vector<CycleRow> cycle_diagnostic(const ExitExperiment& exp, double rho, double rho_prime, double t_cap);

struct IsRow {
  double epsilon = 0.0;
  double horizon = 0.0;
  int paths = 0;
  double direct = 0.0;
  double direct_se = 0.0;
  double weighted = 0.0;
  double weighted_se = 0.0;
  double ess = 0.0;
  bool unreliable = false;
  /// |direct - weighted| <= 3 (se_direct + se_weighted).
  bool agree = false;
  std::vector<double> log_weights;
  std::vector<int> exited;
};

/// P(sigma <= horizon) directly and under `tilt` with Girsanov weights,
/// using the same per-path streams for both estimators.
std::vector<IsRow> importance_sampled_exit(const ExitExperiment& exp, const Control& tilt, double horizon);

}  // namespace kramers

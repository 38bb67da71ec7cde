#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "kramers/controls.hpp"
#include "kramers/measures.hpp"
#include "kramers/system.hpp"

namespace kramers {

/// Which explicit control family certifies a path.
enum class PathFamily { Both, Ball, Grid };
const char* to_string(PathFamily family);
PathFamily parse_path_family(const std::string& text);

struct QuasiPotentialOptions {
  PathFamily family = PathFamily::Both;
  /// Independent simplex chains per transfer cost; chain 0 starts on the straight line.
  int restarts = 3;
  /// Largest segment count reached by knot doubling (1, 2, 4, ...).
  int max_knots = 16;
  int nm_max_evals = 1200;
  /// A doubling round that improves by less than this (relative) ends a chain.
  double improvement_tol = 1e-4;
  std::vector<double> horizons = {0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  /// Golden-section steps in log T around the best grid horizon.
  int golden_steps = 6;
  double endpoint_tol = 1e-4;
  double certify_dt = 1e-3;
  int radial_bins = 16;
  /// Reported optimizer tolerance: max(abs_tol, rel_tol * value).
  double abs_tol = 1e-3;
  double rel_tol = 1e-2;
  int boundary_points = 64;
  int boundary_rounds = 3;
  std::uint64_t seed = 1;
  int workers = 1;

  void validate() const;
};

struct TraceEntry {
  std::string stage;
  std::string family;
  double horizon = 0.0;
  int knots = 0;
  int restart = 0;
  double value = 0.0;
  int evals = 0;
};

struct BoundaryValue {
  Vec point;
  double value = 0.0;
};

struct QuasiPotentialResult {
  bool feasible = false;
  /// Certified upper bound: entropy of `control`.
  double value = kInfinite;
  Vec start;
  Vec target;
  Polyline path;
  std::shared_ptr<const Control> control;
  std::string family;
  double horizon = 0.0;
  int knots = 0;
  int refinement_level = 0;
  /// Certified values per family (infinite when not run or infeasible).
  double ball_value = kInfinite;
  double grid_value = kInfinite;
  double endpoint_error = 0.0;
  double tolerance = 0.0;
  int restarts = 0;
  int evaluations = 0;
  std::vector<TraceEntry> trace;
  // Barrier height only.
  std::vector<Vec> argmin_set;
  double runner_up_gap = kInfinite;
  std::vector<BoundaryValue> boundary;
};

/// Certified upper bound on V(x, y, t). Throws InfeasibleError when no
/// candidate of any chain is admissible.
QuasiPotentialResult transfer_cost(const Vec& x, const Vec& y, double t, const SystemSpec& system,
                                   const LevyMeasure& measure, const QuasiPotentialOptions& opts = {});

/// V(x, z): outer minimization over the horizon grid plus golden refinement.
QuasiPotentialResult quasipotential_point(const Vec& x, const Vec& z, const SystemSpec& system,
                                          const LevyMeasure& measure, const QuasiPotentialOptions& opts = {});

/// Barrier height: min of V(0, z) over boundary points.
QuasiPotentialResult barrier_height(const SystemSpec& system, const LevyMeasure& measure,
                                    const QuasiPotentialOptions& opts = {});

struct ContinuityRow {
  double rho = 0.0;
  /// Max over sampled pairs of the min-over-t transfer cost.
  double value = 0.0;
  /// Straight-line ball-control entropy at distance 2 rho over one time unit.
  double bound = 0.0;
  int pairs = 0;
};

/// Sampled sup_{x, y in B_rho} inf_{t <= 1} V(x, y, t) per rho.
std::vector<ContinuityRow> continuity_probe(const std::vector<double>& rhos, const SystemSpec& system,
                                            const LevyMeasure& measure, const QuasiPotentialOptions& opts = {},
                                            int pairs = 6);

/// Re-solves the controlled ODE of `result.control` and re-evaluates its entropy.
struct CertificateCheck {
  bool ok = false;
  double entropy = 0.0;
  double endpoint_error = 0.0;
};
CertificateCheck verify_certificate(const QuasiPotentialResult& result, const SystemSpec& system, double dt = 1e-3);

/// Report lines "key = value" (values via format_double).
std::vector<std::pair<std::string, std::string>> serialize_result(const QuasiPotentialResult& result,
                                                                  const std::string& prefix = "result");

}  // namespace kramers

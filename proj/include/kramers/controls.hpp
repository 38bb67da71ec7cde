#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "kramers/measures.hpp"
#include "kramers/system.hpp"

namespace kramers {

/// Continuous piecewise-linear path with knot times 0 = t_0 < ... < t_K.
struct Polyline {
  std::vector<double> times;
  std::vector<Vec> knots;

  static Polyline straight(const Vec& from, const Vec& to, double duration);

  double horizon() const { return times.back(); }
  int segments() const { return static_cast<int>(times.size()) - 1; }
  int segment_of(double s) const;
  void at(double s, Vec& out) const;
  Vec at(double s) const;
  /// Constant velocity on segment k.
  Vec velocity(int k) const;
  void validate() const;
};

/// Mark-space partition for grid controls: `radial_bins` log-spaced shells
/// between r_inner and r_outer times the measure's direction cells. The core
/// {r < r_inner} and the tail {r >= r_outer} are not tiltable (level 1).
struct MarkPartition {
  int radial_bins = 16;
  double r_inner = 0.0;
  double r_outer = 0.0;
  int cells = 1;
  std::vector<MarkRegion> regions;
  std::vector<double> mass;
  std::vector<Vec> first;
  std::vector<Vec> centroid;
  std::vector<double> abs_first;
  std::vector<double> abs_second;

  static std::shared_ptr<const MarkPartition> build(const LevyMeasure& measure, int radial_bins = 16,
                                                    double r_inner = 0.0, double r_outer = 0.0);
  int size() const { return static_cast<int>(regions.size()); }
  /// Region index of a mark, or -1 for the pinned core/tail.
  int locate(const LevyMeasure& measure, const Vec& z) const;
};

enum class ControlKind { Identity, ConstantTilt, GridTilt, BallIndicator };
const char* to_string(ControlKind kind);

/// Steering ball of a BallIndicator control at one instant.
struct SteeringBall {
  bool active = false;
  Vec center;
  double radius = 0.0;
  /// Added intensity per unit Lebesgue measure on the ball: (g - 1) nu = height.
  double height = 0.0;
  double G = 1.0;
};

/// Jump-intensity control g(s, z) >= 0 on [0, horizon] x R^d; g = 1 after
/// the horizon. Immutable; holds its measure (and for BallIndicator the
/// system) by value.
class Control {
 public:
  static Control identity(const LevyMeasure& measure, double horizon);
  /// g = level on {|z| > cutoff} (all of R^d \ {0} for finite measures).
  static Control constant_tilt(const LevyMeasure& measure, double level, double horizon);
  /// levels[k][j] on time cell [times[k], times[k+1]) and partition region j.
  static Control grid_tilt(const LevyMeasure& measure, std::shared_ptr<const MarkPartition> partition,
                           std::vector<double> times, std::vector<std::vector<double>> levels);
  /// Ball-indicator control realizing `path`; see control_for_path.
  static Control ball_indicator(const SystemSpec& system, const LevyMeasure& measure, Polyline path);

  ControlKind kind() const { return kind_; }
  double horizon() const { return horizon_; }
  const LevyMeasure& measure() const { return measure_; }
  double level() const { return level_; }
  const Polyline& path() const { return path_; }
  const std::vector<double>& grid_times() const { return times_; }
  const std::vector<std::vector<double>>& grid_levels() const { return levels_; }
  const std::shared_ptr<const MarkPartition>& partition() const { return partition_; }
  const SystemSpec* system() const { return system_.get(); }

  double g(double s, const Vec& z) const;
  /// Integral of (g(s, z) - 1) z nu(dz).
  void mark_drift(double s, Vec& out) const;
  Vec mark_drift(double s) const;
  /// Integral of (g(s, z) - 1) nu(dz).
  double excess_mass(double s) const;
  /// Integral of excess_mass over [t0, t1].
  double excess_integral(double t0, double t1) const;
  /// Quadrature cells: [0, T] split at knots (ball segments further split to <= 0.25).
  std::vector<double> time_breaks() const;
  SteeringBall ball_at(double s) const;
  /// Declared upper bound of g on [0, T] x supp(nu).
  double g_max() const { return g_max_; }

 private:
  Control() = default;
  void compute_ball_bound();

  ControlKind kind_ = ControlKind::Identity;
  static const LevyMeasure& placeholder_measure();
  LevyMeasure measure_ = placeholder_measure();
  double horizon_ = 0.0;
  double level_ = 1.0;
  std::vector<double> times_;
  std::vector<std::vector<double>> levels_;
  std::shared_ptr<const MarkPartition> partition_;
  Polyline path_;
  std::shared_ptr<const SystemSpec> system_;
  double g_max_ = 1.0;
};

/// l(g) = g ln g - g + 1 with l(0) = 1.
double entropy_density(double g);

/// E_T(g) = int_0^T int l(g(s, z)) nu(dz) ds.
double entropy(const Control& control);
/// int l(g(s, .)) d nu at one instant.
double entropy_rate(const Control& control, double s);

/// Explicit steering control for a polyline: a ball of radius
/// R' = (d(c, supp(nu)^c) / 2) ^ 1 about c(s) = sign(G) P(s),
/// P = dPhi/ds - b(Phi), carrying uniform extra intensity 1 / (vol |G(Phi)|).
/// Returns Identity when P vanishes on the whole path.
Control control_for_path(const Polyline& path, const SystemSpec& system, const LevyMeasure& measure);

struct GridShootOptions {
  double ode_step = 0.02;
  double tolerance = 1e-11;
};

/// Grid-tilt control through the knots of `path`: on each segment the mark
/// drift w is shot so that the controlled ODE lands on the next knot, and
/// the levels are the entropy-minimal exponential tilt exp(theta . zbar_j)
/// with that drift. Throws InfeasibleError if a drift is not attainable.
Control grid_control_for_path(const Polyline& path, const SystemSpec& system, const LevyMeasure& measure,
                              std::shared_ptr<const MarkPartition> partition,
                              const GridShootOptions& opts = {});

/// Entropy-minimal levels exp(theta . zbar_j) with sum (g_j - 1) first_j = w.
std::vector<double> exponential_levels(const MarkPartition& partition, const Vec& w);

struct ControlledPath {
  std::vector<double> times;
  std::vector<Vec> states;
  Vec terminal;
};

/// U' = b(U) + G(U) int (g(s, z) - 1) z nu(dz) on [0, horizon].
ControlledPath solve_controlled_ode(const Control& control, const SystemSpec& system, const Vec& x,
                                    double dt = 1e-3, bool record = true, double bound = 1e8);

struct IntegrabilityReport {
  double second_moment = 0.0;      // int int |z|^2 g nu ds
  double first_deviation = 0.0;    // int int |z| |g - 1| nu ds
  std::vector<std::pair<double, double>> modulus;  // (delta, sup_t int_t^{t+delta} int |z||g-1| nu ds)
};

IntegrabilityReport verify_control_integrability(const Control& control,
                                                 const std::vector<double>& deltas = {0.1, 0.01, 0.001});

/// int_0^T int_{|z| <= radius} |z|^2 g nu ds.
double restricted_second_moment(const Control& control, double radius);

/// Time concatenation (b runs after a). Both must have the same kind.
Control concatenate(const Control& a, const Control& b);

/// Structured text block "control.<key> = value".
std::vector<std::pair<std::string, std::string>> serialize_control(const Control& control,
                                                                   const std::string& prefix = "control");
Control deserialize_control(const std::map<std::string, std::string>& entries, const SystemSpec& system,
                            const LevyMeasure& measure, const std::string& prefix = "control");

}  // namespace kramers

#pragma once

#include <Eigen/Core>
#include <limits>
#include <memory>
#include <vector>

#include "kramers/quadrature.hpp"
#include "kramers/random.hpp"

namespace kramers {

using Vec = Eigen::VectorXd;

inline constexpr double kInfinite = std::numeric_limits<double>::infinity();

enum class MeasureKind { ExponentialLight, GaussTemperedStable, CompactSupport };

const char* to_string(MeasureKind kind);

struct WeightedDirection {
  Vec direction;
  double weight = 0.0;
};

/// A subset of mark space written in polar coordinates about the measure's
/// center: radius in [r_lo, r_hi) and one direction cell (-1 selects all).
struct MarkRegion {
  double r_lo = 0.0;
  double r_hi = kInfinite;
  int cell = -1;
};

/// Moments of the measure restricted to a MarkRegion.
struct RegionMoments {
  double mass = 0.0;
  Vec first;             // integral of z
  double abs_first = 0.0;   // integral of |z|
  double abs_second = 0.0;  // integral of |z|^2
};

namespace detail {
struct RadialTable;
}

/// Jump intensity measure nu on R^d \ {0}.
///
/// Every kind is represented as a radial law times a direction law about a
/// center c (c = 0 except for a shifted one-dimensional CompactSupport):
///   ExponentialLight      density exp(-|z|^beta), beta >= 2, uniform directions
///   GaussTemperedStable   radial density exp(-gamma r^2 / 2) / r^(alpha + 1) along
///                         a finite weighted set of unit directions
///   CompactSupport        constant density `level` on the ball B_radius(c)
///
/// Infinite-intensity measures are simulated on {|z| > cutoff}; the
/// "effective" quantities below refer to that restriction. Instances are
/// immutable and cheap to copy (the sampling table is shared).
class LevyMeasure {
 public:
  static LevyMeasure exponential_light(int dimension, double beta);
  static LevyMeasure gauss_tempered_stable(int dimension, double alpha, double gamma,
                                           std::vector<WeightedDirection> directions,
                                           double cutoff);
  /// Symmetric two-point direction law in d = 1: R = w (delta_1 + delta_-1).
  static LevyMeasure gauss_tempered_stable_1d(double alpha, double gamma, double weight_each,
                                              double cutoff);
  static LevyMeasure compact_support(int dimension, double radius, double level,
                                     Vec center = Vec());

  MeasureKind kind() const { return kind_; }
  int dimension() const { return dim_; }
  double cutoff() const { return cutoff_; }
  double beta() const { return beta_; }
  double alpha() const { return alpha_; }
  double gamma() const { return gamma_; }
  double support_radius() const { return radius_; }
  double level() const { return level_; }
  const Vec& center() const { return center_; }
  const std::vector<WeightedDirection>& directions() const { return directions_; }
  /// Integral of |v|^alpha R(dv) for the direction measure (GaussTemperedStable).
  double direction_weight() const { return weight_total_; }

  /// d nu / dz. For GaussTemperedStable in d >= 2 this is the density with
  /// respect to arc length on the supporting rays (zero off the rays).
  double density(const Vec& z) const;
  double density(double z) const;

  /// nu(R^d \ {0}); +infinity for GaussTemperedStable.
  double total_mass() const;
  /// nu({|z| > cutoff}).
  double effective_mass() const { return mass_eff_; }
  /// Integral of z over {|z| > cutoff}; the compensator drift per unit G.
  const Vec& first_moment() const { return m1_; }
  /// Integral of |z|^2 over {|z| > cutoff}.
  double effective_second_moment() const { return m2_eff_; }

  /// Integral of |z|^2 over {0 < |z| <= r}.
  double second_moment_below(double r) const;
  /// Integral of exp(Gamma |z|^2) over {|z| > 1}; +infinity when divergent.
  double exp_tail_integral(double Gamma) const;

  /// Draws a mark from nu restricted to {|z| > cutoff}, normalized.
  Vec sample_jump(Rng& rng) const;
  /// Draws a mark from the normalized restriction of nu to a region.
  Vec sample_in_region(const MarkRegion& region, Rng& rng) const;
  /// Allocation-free variant of sample_in_region; `out` must have size d.
  void sample_into(const MarkRegion& region, Rng& rng, Eigen::Ref<Vec> out) const;

  /// Tabulated CDF of the radius |z - c| under the normalized effective measure.
  double radial_cdf(double r) const;
  double sample_radius(Rng& rng) const;
  /// Radius range covered by the sampling table.
  double table_min_radius() const;
  double table_max_radius() const;

  /// Total radial density: d/dr nu({|z - c| <= r}).
  double radial_density(double r) const;
  /// Integral of radial_density(r) f(r) over [a, b]. `f_order` is the power of
  /// f at r = 0, used to handle the pole of infinite-intensity measures.
  double radial_integral(const ScalarFn& f, double a, double b, double f_order = 0.0) const;

  RegionMoments region_moments(const MarkRegion& region) const;

  // Direction cells used for mark-space partitions.
  int direction_cell_count() const;
  double direction_cell_fraction(int cell) const;
  Vec direction_cell_mean(int cell) const;

  /// Half-line / ray support checks for steering-ball constructions.
  double distance_to_support_complement(const Vec& x) const;
  /// Lower bound of the density on the closed ball B_radius(center).
  double density_lower_bound(const Vec& center, double radius) const;
  /// Largest radius needed to capture the effective mass to double precision.
  double outer_radius() const { return r_max_; }

 private:
  LevyMeasure() = default;
  void finalize();
  double radial_profile(double r) const;
  void sample_direction(int cell, Rng& rng, Eigen::Ref<Vec> out) const;
  double sample_radius_between(double r_lo, double r_hi, Rng& rng) const;
  double line_integral(const ScalarFn& f, double a, double b) const;

  MeasureKind kind_ = MeasureKind::ExponentialLight;
  int dim_ = 1;
  double beta_ = 2.0;
  double alpha_ = 0.0;
  double gamma_ = 0.0;
  std::vector<WeightedDirection> directions_;
  double weight_total_ = 0.0;
  double radius_ = 0.0;
  double level_ = 0.0;
  Vec center_;
  double cutoff_ = 0.0;

  double r_max_ = 0.0;
  double mass_eff_ = 0.0;
  double m2_eff_ = 0.0;
  Vec m1_;
  std::shared_ptr<const detail::RadialTable> table_;
};

}  // namespace kramers

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kramers/measures.hpp"

namespace kramers {

/// Writes b(x) into `out` (already sized d). Must not allocate.
using DriftFn = std::function<void(const Vec& x, Vec& out)>;
using ScalarField = std::function<double(const Vec& x)>;

/// Region D containing the origin, described by a signed distance that is
/// negative inside. A state with signed_distance >= 0 has left D.
class Domain {
 public:
  enum class Kind { Box, Ball, Whole, Custom };

  static Domain box(Vec lower, Vec upper);
  static Domain interval(double lower, double upper);
  static Domain ball(int dimension, double radius);
  static Domain whole(int dimension);
  static Domain custom(int dimension, ScalarField signed_distance, double bounding_radius);

  Kind kind() const { return kind_; }
  int dimension() const { return dim_; }
  bool bounded() const { return kind_ != Kind::Whole; }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  double radius() const { return radius_; }

  double signed_distance(const Vec& x) const;
  bool contains(const Vec& x) const { return signed_distance(x) < 0.0; }
  /// Outward unit normal at a boundary point (finite-difference gradient for Custom).
  Vec outward_normal(const Vec& z) const;
  /// n roughly uniform boundary points; in d = 1 the two endpoints.
  std::vector<Vec> boundary_samples(int n) const;
  /// Boundary point at parameter u in [0, 1) along the boundary (d = 2).
  Vec boundary_point(double u) const;
  /// Radius of a ball about 0 that contains D.
  double bounding_radius() const;

 private:
  Kind kind_ = Kind::Whole;
  int dim_ = 1;
  Vec lower_;
  Vec upper_;
  double radius_ = 0.0;
  ScalarField custom_;
};

/// Drift b, scalar noise coefficient G, their constants and the domain D.
struct SystemSpec {
  int dimension = 1;
  DriftFn drift;
  ScalarField G;
  double c1 = 1.0;
  double L = 0.0;
  Domain domain = Domain::whole(1);
  std::string drift_name = "custom";
  std::string G_name = "custom";

  Vec b(const Vec& x) const {
    Vec out(x.size());
    drift(x, out);
    return out;
  }
};

/// b(x) = -rate x.
DriftFn linear_drift(double rate = 1.0);
/// b(x) = -x^3 - x componentwise.
DriftFn cubic_drift();
/// b_i(x) = sum_k coefficients[k] x_i^(k+1); no constant term so b(0) = 0.
DriftFn polynomial_drift(std::vector<double> coefficients);

ScalarField constant_G(double value);
/// G(x) = max(floor, intercept + slope * x_0): affine, clamped away from 0.
ScalarField affine_clamped_G(double intercept, double slope, double floor);

/// Benchmark system b(x) = -x, G = 1 on the interval (lower, upper).
SystemSpec benchmark_system(double lower = -1.0, double upper = 1.0);

struct HypothesisReport {
  bool drift_vanishes_at_origin = false;  // A.2
  bool coercive = false;                  // A.1 on probe pairs
  bool G_lipschitz = false;               // C
  bool G_nonzero = false;
  bool inward_pointing = false;           // D (true for unbounded domains)
  double worst_coercivity = 0.0;          // max of <db, dy> / |dy|^2 over probes
  double worst_G_ratio = 0.0;             // max of |G(y1) - G(y2)| / |y1 - y2|
  std::vector<std::string> messages;

  bool ok() const {
    return drift_vanishes_at_origin && coercive && G_lipschitz && G_nonzero && inward_pointing;
  }
};

/// Probes the runtime-checkable hypotheses on random pairs in a box of radius
/// `probe_radius` and on boundary samples.
HypothesisReport check_hypotheses(const SystemSpec& system, Rng& rng, int probes = 2000,
                                  double probe_radius = 3.0);

/// Operator-norm estimate of Db on probes inside D, used for the default step.
double drift_jacobian_bound(const SystemSpec& system, Rng& rng, int probes = 256);

}  // namespace kramers

#include "kramers/system.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kramers/errors.hpp"

namespace kramers {

Domain Domain::box(Vec lower, Vec upper) {
  if (lower.size() != upper.size() || lower.size() == 0) throw ConfigError("box bounds have mismatched sizes");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower(i) < 0.0 && upper(i) > 0.0)) throw ConfigError("domain must contain 0 in its interior");
  }
  Domain d;
  d.kind_ = Kind::Box;
  d.dim_ = static_cast<int>(lower.size());
  d.lower_ = std::move(lower);
  d.upper_ = std::move(upper);
  return d;
}

Domain Domain::interval(double lower, double upper) {
  return box(Vec::Constant(1, lower), Vec::Constant(1, upper));
}

Domain Domain::ball(int dimension, double radius) {
  if (!(radius > 0.0)) throw ConfigError("ball domain radius must be positive");
  Domain d;
  d.kind_ = Kind::Ball;
  d.dim_ = dimension;
  d.radius_ = radius;
  return d;
}

Domain Domain::whole(int dimension) {
  Domain d;
  d.kind_ = Kind::Whole;
  d.dim_ = dimension;
  return d;
}

Domain Domain::custom(int dimension, ScalarField signed_distance, double bounding_radius) {
  Domain d;
  d.kind_ = Kind::Custom;
  d.dim_ = dimension;
  d.custom_ = std::move(signed_distance);
  d.radius_ = bounding_radius;
  if (!(d.custom_(Vec::Zero(dimension)) < 0.0)) throw ConfigError("domain must contain 0 in its interior");
  return d;
}

double Domain::signed_distance(const Vec& x) const {
  switch (kind_) {
    case Kind::Whole:
      return -kInfinite;
    case Kind::Ball:
      return x.norm() - radius_;
    case Kind::Custom:
      return custom_(x);
    case Kind::Box: {
      double inside = -kInfinite;
      double outside2 = 0.0;
      for (int i = 0; i < dim_; ++i) {
        const double q = std::max(lower_(i) - x(i), x(i) - upper_(i));
        inside = std::max(inside, q);
        if (q > 0.0) outside2 += q * q;
      }
      return inside > 0.0 ? std::sqrt(outside2) : inside;
    }
  }
  return -kInfinite;
}

Vec Domain::outward_normal(const Vec& z) const {
  Vec n = Vec::Zero(dim_);
  switch (kind_) {
    case Kind::Whole:
      return n;
    case Kind::Ball:
      return z / z.norm();
    case Kind::Box: {
      int best = 0;
      double best_q = -kInfinite;
      double sign = 1.0;
      for (int i = 0; i < dim_; ++i) {
        const double lo = lower_(i) - z(i);
        const double hi = z(i) - upper_(i);
        if (lo > best_q) {
          best_q = lo;
          best = i;
          sign = -1.0;
        }
        if (hi > best_q) {
          best_q = hi;
          best = i;
          sign = 1.0;
        }
      }
      n(best) = sign;
      return n;
    }
    case Kind::Custom: {
      const double h = 1e-6;
      Vec y = z;
      for (int i = 0; i < dim_; ++i) {
        y(i) = z(i) + h;
        const double up = custom_(y);
        y(i) = z(i) - h;
        const double down = custom_(y);
        y(i) = z(i);
        n(i) = (up - down) / (2 * h);
      }
      return n / n.norm();
    }
  }
  return n;
}

double Domain::bounding_radius() const {
  switch (kind_) {
    case Kind::Whole:
      return kInfinite;
    case Kind::Ball:
    case Kind::Custom:
      return radius_;
    case Kind::Box:
      return std::sqrt(lower_.cwiseAbs().cwiseMax(upper_.cwiseAbs()).squaredNorm());
  }
  return kInfinite;
}

Vec Domain::boundary_point(double u) const {
  if (dim_ != 2) throw DomainError("boundary_point is defined for d = 2");
  const double theta = 2.0 * std::numbers::pi * u;
  Vec dir(2);
  dir << std::cos(theta), std::sin(theta);
  if (kind_ == Kind::Ball) return radius_ * dir;
  if (kind_ == Kind::Whole) throw DomainError("unbounded domain has no boundary");
  // Star-shaped about 0: bisection along the ray.
  double lo = 0.0;
  double hi = bounding_radius() * 1.01 + 1e-9;
  for (int i = 0; i < 200 && hi - lo > 1e-14; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (signed_distance(mid * dir) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi * dir;
}

std::vector<Vec> Domain::boundary_samples(int n) const {
  std::vector<Vec> out;
  if (!bounded()) return out;
  if (dim_ == 1) {
    if (kind_ == Kind::Box) {
      out.push_back(lower_);
      out.push_back(upper_);
    } else {
      out.push_back(Vec::Constant(1, -radius_));
      out.push_back(Vec::Constant(1, radius_));
    }
    return out;
  }
  if (dim_ != 2) throw DomainError("boundary sampling is implemented for d <= 2");
  out.reserve(n);
  for (int k = 0; k < n; ++k) out.push_back(boundary_point(static_cast<double>(k) / n));
  return out;
}

DriftFn linear_drift(double rate) {
  return [rate](const Vec& x, Vec& out) { out = -rate * x; };
}

DriftFn cubic_drift() {
  return [](const Vec& x, Vec& out) {
    for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = -x(i) * x(i) * x(i) - x(i);
  };
}

DriftFn polynomial_drift(std::vector<double> coefficients) {
  if (coefficients.empty()) throw ConfigError("polynomial drift needs at least one coefficient");
  return [c = std::move(coefficients)](const Vec& x, Vec& out) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      // Horner on x * (c0 + c1 x + ...).
      double acc = 0.0;
      for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x(i) + *it;
      out(i) = acc * x(i);
    }
  };
}

ScalarField constant_G(double value) {
  if (value == 0.0) throw ConfigError("G must not vanish");
  return [value](const Vec&) { return value; };
}

ScalarField affine_clamped_G(double intercept, double slope, double floor) {
  if (!(floor > 0.0)) throw ConfigError("affine G needs a positive floor");
  return [=](const Vec& x) { return std::max(floor, intercept + slope * x(0)); };
}

SystemSpec benchmark_system(double lower, double upper) {
  SystemSpec s;
  s.dimension = 1;
  s.drift = linear_drift(1.0);
  s.G = constant_G(1.0);
  s.c1 = 1.0;
  s.L = 0.0;
  s.domain = Domain::interval(lower, upper);
  s.drift_name = "linear";
  s.G_name = "constant";
  return s;
}

namespace {

Vec random_point(int d, double radius, Rng& rng) {
  Vec y(d);
  for (int i = 0; i < d; ++i) y(i) = radius * (2.0 * rng.uniform() - 1.0);
  return y;
}

}  // namespace

HypothesisReport check_hypotheses(const SystemSpec& system, Rng& rng, int probes,
                                  double probe_radius) {
  HypothesisReport rep;
  const int d = system.dimension;
  Vec b1(d);
  Vec b2(d);
  system.drift(Vec::Zero(d), b1);
  rep.drift_vanishes_at_origin = b1.norm() <= 1e-12;
  if (!rep.drift_vanishes_at_origin) rep.messages.push_back("b(0) != 0");

  rep.worst_coercivity = -kInfinite;
  rep.worst_G_ratio = 0.0;
  rep.G_nonzero = true;
  for (int k = 0; k < probes; ++k) {
    const Vec y1 = random_point(d, probe_radius, rng);
    const Vec y2 = random_point(d, probe_radius, rng);
    const Vec dy = y1 - y2;
    const double n2 = dy.squaredNorm();
    if (n2 < 1e-16) continue;
    system.drift(y1, b1);
    system.drift(y2, b2);
    rep.worst_coercivity = std::max(rep.worst_coercivity, (b1 - b2).dot(dy) / n2);
    const double g1 = system.G(y1);
    const double g2 = system.G(y2);
    if (g1 == 0.0 || g2 == 0.0) rep.G_nonzero = false;
    rep.worst_G_ratio = std::max(rep.worst_G_ratio, std::abs(std::abs(g1) - std::abs(g2)) / std::sqrt(n2));
  }
  rep.coercive = rep.worst_coercivity <= -system.c1 * (1.0 - 1e-9);
  if (!rep.coercive) rep.messages.push_back("coercivity constant c1 not confirmed on probes");
  rep.G_lipschitz = rep.worst_G_ratio <= system.L * (1.0 + 1e-9) + 1e-12;
  if (!rep.G_lipschitz) rep.messages.push_back("|G| Lipschitz constant L exceeded on probes");
  if (!rep.G_nonzero) rep.messages.push_back("G vanishes at a probe point");

  rep.inward_pointing = true;
  if (system.domain.bounded() && d <= 2) {
    for (const Vec& z : system.domain.boundary_samples(64)) {
      system.drift(z, b1);
      if (!(b1.dot(system.domain.outward_normal(z)) < 0.0)) {
        rep.inward_pointing = false;
        rep.messages.push_back("drift not inward-pointing at a boundary sample");
        break;
      }
    }
  }
  return rep;
}

double drift_jacobian_bound(const SystemSpec& system, Rng& rng, int probes) {
  const int d = system.dimension;
  const double radius = std::min(system.domain.bounding_radius(), 3.0);
  Vec b1(d);
  Vec b2(d);
  double worst = 0.0;
  const double h = 1e-6;
  for (int k = 0; k < probes; ++k) {
    Vec y = random_point(d, radius, rng);
    if (system.domain.bounded() && !system.domain.contains(y)) continue;
    for (int i = 0; i < d; ++i) {
      Vec yp = y;
      yp(i) += h;
      system.drift(yp, b1);
      system.drift(y, b2);
      // Column norms bound the operator norm up to sqrt(d).
      worst = std::max(worst, (b1 - b2).norm() / h * std::sqrt(static_cast<double>(d)));
    }
  }
  return worst;
}

}  // namespace kramers

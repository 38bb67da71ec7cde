#include "kramers/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kramers/errors.hpp"

namespace kramers {

namespace detail {

/// Radial CDF tabulated on log-spaced knots, interpolated by monotone cubic
/// Hermite segments with exact density slopes (Fritsch-Carlson limited).
struct RadialTable {
  std::vector<double> r;
  std::vector<double> F;
  std::vector<double> slope;

  double eval(double x) const {
    if (x <= r.front()) return 0.0;
    if (x >= r.back()) return 1.0;
    const auto it = std::upper_bound(r.begin(), r.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - r.begin()) - 1;
    return segment(k, (x - r[k]) / (r[k + 1] - r[k]));
  }

  double segment(std::size_t k, double t) const {
    const double h = r[k + 1] - r[k];
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * F[k] + (t3 - 2 * t2 + t) * h * slope[k] +
           (-2 * t3 + 3 * t2) * F[k + 1] + (t3 - t2) * h * slope[k + 1];
  }

  double segment_derivative(std::size_t k, double t) const {
    const double h = r[k + 1] - r[k];
    const double t2 = t * t;
    return ((6 * t2 - 6 * t) * F[k] + (-6 * t2 + 6 * t) * F[k + 1]) / h +
           (3 * t2 - 4 * t + 1) * slope[k] + (3 * t2 - 2 * t) * slope[k + 1];
  }

  double invert(double u) const {
    if (u <= 0.0) return r.front();
    if (u >= 1.0) return r.back();
    auto it = std::upper_bound(F.begin(), F.end(), u);
    std::size_t k = static_cast<std::size_t>(it - F.begin());
    k = std::clamp<std::size_t>(k, 1, F.size() - 1) - 1;
    // Safeguarded Newton on the cubic segment.
    double lo = 0.0;
    double hi = 1.0;
    const double span = F[k + 1] - F[k];
    double t = span > 0.0 ? (u - F[k]) / span : 0.5;
    for (int iter = 0; iter < 60; ++iter) {
      const double value = segment(k, t) - u;
      if (value > 0.0) {
        hi = t;
      } else {
        lo = t;
      }
      if (std::abs(value) <= 1e-16 || hi - lo <= 1e-15) break;
      const double d = segment_derivative(k, t) * (r[k + 1] - r[k]);
      double next = d > 0.0 ? t - value / d : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      t = next;
    }
    return r[k] + t * (r[k + 1] - r[k]);
  }
};

}  // namespace detail

namespace {

constexpr int kTableKnots = 4096;
constexpr int kPlaneSectors = 8;

double sphere_area(int d) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

double gl8(const ScalarFn& f, double a, double b) {
  double sum = 0.0;
  for (int i = 0; i < GaussLegendre8::kOrder; ++i) {
    sum += GaussLegendre8::weights[i] * f(a + (b - a) * GaussLegendre8::nodes[i]);
  }
  return sum * (b - a);
}

}  // namespace

const char* to_string(MeasureKind kind) {
  switch (kind) {
    case MeasureKind::ExponentialLight:
      return "exponential_light";
    case MeasureKind::GaussTemperedStable:
      return "gauss_tempered_stable";
    case MeasureKind::CompactSupport:
      return "compact_support";
  }
  return "unknown";
}

LevyMeasure LevyMeasure::exponential_light(int dimension, double beta) {
  if (dimension < 1) throw ConfigError("measure dimension must be positive");
  if (!(beta >= 2.0)) throw ConfigError("exponential_light requires beta >= 2");
  LevyMeasure m;
  m.kind_ = MeasureKind::ExponentialLight;
  m.dim_ = dimension;
  m.beta_ = beta;
  m.center_ = Vec::Zero(dimension);
  m.finalize();
  return m;
}

LevyMeasure LevyMeasure::gauss_tempered_stable(int dimension, double alpha, double gamma,
                                               std::vector<WeightedDirection> directions,
                                               double cutoff) {
  if (dimension < 1) throw ConfigError("measure dimension must be positive");
  if (!(alpha > 0.0 && alpha < 2.0)) throw ConfigError("gauss_tempered_stable requires alpha in (0,2)");
  if (!(gamma > 0.0)) throw ConfigError("gauss_tempered_stable requires gamma > 0");
  if (!(cutoff >= 0.0)) throw ConfigError("cutoff must be nonnegative");
  if (directions.empty()) throw ConfigError("gauss_tempered_stable needs at least one direction");
  LevyMeasure m;
  m.kind_ = MeasureKind::GaussTemperedStable;
  m.dim_ = dimension;
  m.alpha_ = alpha;
  m.gamma_ = gamma;
  m.cutoff_ = cutoff;
  m.center_ = Vec::Zero(dimension);
  for (auto& d : directions) {
    if (d.direction.size() != dimension) throw ConfigError("direction has wrong dimension");
    if (!(d.weight >= 0.0)) throw ConfigError("direction weights must be nonnegative");
    const double n = d.direction.norm();
    if (!(n > 0.0)) throw ConfigError("direction vectors must be nonzero");
    d.direction /= n;
    if (d.weight == 0.0) continue;
    // Merge repeated directions so that direction cells are distinct.
    auto same = std::find_if(m.directions_.begin(), m.directions_.end(), [&](const auto& e) {
      return (e.direction - d.direction).norm() < 1e-12;
    });
    if (same != m.directions_.end()) {
      same->weight += d.weight;
    } else {
      m.directions_.push_back(d);
    }
    m.weight_total_ += d.weight;
  }
  if (!(m.weight_total_ > 0.0)) throw ConfigError("direction weights sum to zero");
  m.finalize();
  return m;
}

LevyMeasure LevyMeasure::gauss_tempered_stable_1d(double alpha, double gamma, double weight_each,
                                                  double cutoff) {
  std::vector<WeightedDirection> dirs{{Vec::Constant(1, 1.0), weight_each},
                                      {Vec::Constant(1, -1.0), weight_each}};
  return gauss_tempered_stable(1, alpha, gamma, std::move(dirs), cutoff);
}

LevyMeasure LevyMeasure::compact_support(int dimension, double radius, double level, Vec center) {
  if (dimension < 1) throw ConfigError("measure dimension must be positive");
  if (!(radius > 0.0)) throw ConfigError("compact_support radius must be positive");
  if (!(level > 0.0)) throw ConfigError("compact_support level must be positive");
  LevyMeasure m;
  m.kind_ = MeasureKind::CompactSupport;
  m.dim_ = dimension;
  m.radius_ = radius;
  m.level_ = level;
  if (center.size() == 0) center = Vec::Zero(dimension);
  if (center.size() != dimension) throw ConfigError("compact_support center has wrong dimension");
  if (dimension > 1 && center.norm() > 0.0) {
    throw ConfigError("a shifted compact_support measure is only supported in d = 1");
  }
  m.center_ = std::move(center);
  m.finalize();
  return m;
}

double LevyMeasure::radial_profile(double r) const {
  if (r <= 0.0) return 0.0;
  switch (kind_) {
    case MeasureKind::ExponentialLight:
      return sphere_area(dim_) * std::pow(r, dim_ - 1) * std::exp(-std::pow(r, beta_));
    case MeasureKind::GaussTemperedStable:
      return weight_total_ * std::exp(-0.5 * gamma_ * r * r) / std::pow(r, alpha_ + 1.0);
    case MeasureKind::CompactSupport:
      return r <= radius_ ? level_ * sphere_area(dim_) * std::pow(r, dim_ - 1) : 0.0;
  }
  return 0.0;
}

double LevyMeasure::radial_density(double r) const { return radial_profile(r); }

double LevyMeasure::radial_integral(const ScalarFn& f, double a, double b, double f_order) const {
  a = std::max(a, 0.0);
  b = std::min(b, r_max_);
  if (!(b > a)) return 0.0;
  auto integrand = [&](double r) { return radial_profile(r) * f(r); };
  double sum = 0.0;
  if (kind_ == MeasureKind::GaussTemperedStable && a == 0.0) {
    const double power = alpha_ + 1.0 - f_order;
    if (power >= 1.0) return kInfinite;
    const double split = std::min(b, 1.0);
    sum += integrate_left_singular(integrand, 0.0, split, power);
    a = split;
  }
  if (a == 0.0) return sum + integrate(integrand, 0.0, b);
  // Geometric panels keep the steep pole region well resolved.
  double left = a;
  while (left < b) {
    const double right = std::min(b, left * 4.0);
    sum += integrate(integrand, left, right);
    left = right;
  }
  return sum;
}

double LevyMeasure::line_integral(const ScalarFn& f, double a, double b) const {
  // Shifted one-dimensional compact support: constant density on [c - rho, c + rho].
  const double lo = std::max(a, center_(0) - radius_);
  const double hi = std::min(b, center_(0) + radius_);
  if (!(hi > lo)) return 0.0;
  double sum = 0.0;
  if (lo < 0.0 && hi > 0.0) {
    sum += integrate(f, lo, 0.0) + integrate(f, 0.0, hi);
  } else {
    sum += integrate(f, lo, hi);
  }
  return level_ * sum;
}

void LevyMeasure::finalize() {
  switch (kind_) {
    case MeasureKind::ExponentialLight:
      r_max_ = std::pow(60.0 + 2.0 * dim_, 1.0 / beta_);
      break;
    case MeasureKind::GaussTemperedStable:
      r_max_ = std::max(std::sqrt(120.0 / gamma_), 4.0 * cutoff_);
      break;
    case MeasureKind::CompactSupport:
      r_max_ = radius_;
      break;
  }
  const bool shifted = center_.norm() > 0.0;
  const double r_lo = kind_ == MeasureKind::GaussTemperedStable ? cutoff_ : 0.0;

  m1_ = Vec::Zero(dim_);
  if (kind_ == MeasureKind::GaussTemperedStable && cutoff_ == 0.0) {
    mass_eff_ = kInfinite;
    m2_eff_ = radial_integral([](double r) { return r * r; }, 0.0, r_max_, 2.0);
    return;
  }
  mass_eff_ = radial_integral([](double) { return 1.0; }, r_lo, r_max_);
  const double radial_first = radial_integral([](double r) { return r; }, r_lo, r_max_);
  for (int c = 0; c < direction_cell_count(); ++c) {
    m1_ += direction_cell_fraction(c) * radial_first * direction_cell_mean(c);
  }
  m1_ += center_ * mass_eff_;
  if (shifted) {
    m2_eff_ = line_integral([](double z) { return z * z; }, -kInfinite, kInfinite);
  } else {
    m2_eff_ = radial_integral([](double r) { return r * r; }, r_lo, r_max_);
  }

  auto table = std::make_shared<detail::RadialTable>();
  table->r.resize(kTableKnots);
  if (r_lo > 0.0) {
    const double ratio = std::log(r_max_ / r_lo) / (kTableKnots - 1);
    for (int k = 0; k < kTableKnots; ++k) table->r[k] = r_lo * std::exp(ratio * k);
  } else {
    const double first = r_max_ * 1e-8;
    const double ratio = std::log(r_max_ / first) / (kTableKnots - 2);
    table->r[0] = 0.0;
    for (int k = 1; k < kTableKnots; ++k) table->r[k] = first * std::exp(ratio * (k - 1));
  }
  table->r.back() = r_max_;
  table->F.assign(kTableKnots, 0.0);
  auto profile = [this](double r) { return radial_profile(r); };
  for (int k = 1; k < kTableKnots; ++k) {
    table->F[k] = table->F[k - 1] + gl8(profile, table->r[k - 1], table->r[k]);
  }
  const double total = table->F.back();
  for (auto& v : table->F) v /= total;
  table->F.back() = 1.0;
  table->slope.resize(kTableKnots);
  for (int k = 0; k < kTableKnots; ++k) {
    // One-sided value at the support edge of a compact measure.
    const double r = std::min(table->r[k], r_max_ * (1.0 - 1e-15));
    table->slope[k] = radial_profile(std::max(r, 0.0)) / total;
  }
  for (int k = 0; k + 1 < kTableKnots; ++k) {
    const double h = table->r[k + 1] - table->r[k];
    const double secant = (table->F[k + 1] - table->F[k]) / h;
    if (secant <= 0.0) {
      table->slope[k] = table->slope[k + 1] = 0.0;
      continue;
    }
    const double a = table->slope[k] / secant;
    const double b = table->slope[k + 1] / secant;
    const double norm2 = a * a + b * b;
    if (norm2 > 9.0) {
      const double tau = 3.0 / std::sqrt(norm2);
      table->slope[k] = tau * a * secant;
      table->slope[k + 1] = tau * b * secant;
    }
  }
  table_ = std::move(table);
}

double LevyMeasure::density(const Vec& z) const {
  if (z.size() != dim_) throw DomainError("density: point has wrong dimension");
  const double r = z.norm();
  if (r == 0.0) throw DomainError("density: nu lives on R^d \\ {0}");
  switch (kind_) {
    case MeasureKind::ExponentialLight:
      return std::exp(-std::pow(r, beta_));
    case MeasureKind::CompactSupport:
      return (z - center_).norm() <= radius_ ? level_ : 0.0;
    case MeasureKind::GaussTemperedStable: {
      const Vec u = z / r;
      double w = 0.0;
      for (const auto& d : directions_) {
        if ((u - d.direction).norm() < 1e-12) w += d.weight;
      }
      return w * std::exp(-0.5 * gamma_ * r * r) / std::pow(r, alpha_ + 1.0);
    }
  }
  return 0.0;
}

double LevyMeasure::density(double z) const { return density(Vec::Constant(1, z)); }

double LevyMeasure::total_mass() const {
  switch (kind_) {
    case MeasureKind::ExponentialLight:
      return sphere_area(dim_) * std::tgamma(dim_ / beta_) / beta_;
    case MeasureKind::GaussTemperedStable:
      return kInfinite;
    case MeasureKind::CompactSupport:
      return level_ * sphere_area(dim_) * std::pow(radius_, dim_) / dim_;
  }
  return 0.0;
}

double LevyMeasure::second_moment_below(double r) const {
  if (!(r > 0.0)) return 0.0;
  if (center_.norm() > 0.0) {
    return line_integral([](double z) { return z * z; }, -r, r);
  }
  return radial_integral([](double s) { return s * s; }, 0.0, r, 2.0);
}

double LevyMeasure::exp_tail_integral(double Gamma) const {
  if (!(Gamma > 0.0)) throw DomainError("exp_tail_integral requires Gamma > 0");
  switch (kind_) {
    case MeasureKind::ExponentialLight: {
      const double area = sphere_area(dim_);
      return integrate_tail_or_diverge(
          [&](double r) {
            return area * std::pow(r, dim_ - 1) * std::exp(Gamma * r * r - std::pow(r, beta_));
          },
          1.0);
    }
    case MeasureKind::GaussTemperedStable:
      return integrate_tail_or_diverge(
          [&](double r) {
            return weight_total_ * std::exp((Gamma - 0.5 * gamma_) * r * r) /
                   std::pow(r, alpha_ + 1.0);
          },
          1.0);
    case MeasureKind::CompactSupport: {
      if (center_.norm() > 0.0) {
        auto f = [&](double z) { return std::exp(Gamma * z * z); };
        return line_integral(f, 1.0, kInfinite) + line_integral(f, -kInfinite, -1.0);
      }
      if (radius_ <= 1.0) return 0.0;
      const double area = sphere_area(dim_);
      return integrate(
          [&](double r) { return level_ * area * std::pow(r, dim_ - 1) * std::exp(Gamma * r * r); },
          1.0, radius_);
    }
  }
  return 0.0;
}

int LevyMeasure::direction_cell_count() const {
  if (kind_ == MeasureKind::GaussTemperedStable) {
    return dim_ == 1 ? 2 : static_cast<int>(directions_.size());
  }
  if (dim_ == 1) return 2;
  if (dim_ == 2) return kPlaneSectors;
  return 1;
}

double LevyMeasure::direction_cell_fraction(int cell) const {
  if (cell < 0) return 1.0;
  if (kind_ == MeasureKind::GaussTemperedStable) {
    if (dim_ == 1) {
      const double sign = cell == 0 ? -1.0 : 1.0;
      double w = 0.0;
      for (const auto& d : directions_) {
        if (d.direction(0) * sign > 0.0) w += d.weight;
      }
      return w / weight_total_;
    }
    return directions_.at(cell).weight / weight_total_;
  }
  return 1.0 / direction_cell_count();
}

Vec LevyMeasure::direction_cell_mean(int cell) const {
  if (cell < 0) {
    Vec mean = Vec::Zero(dim_);
    for (int c = 0; c < direction_cell_count(); ++c) {
      mean += direction_cell_fraction(c) * direction_cell_mean(c);
    }
    return mean;
  }
  if (dim_ == 1) return Vec::Constant(1, cell == 0 ? -1.0 : 1.0);
  if (kind_ == MeasureKind::GaussTemperedStable) return directions_.at(cell).direction;
  if (dim_ == 2) {
    const double width = 2.0 * std::numbers::pi / kPlaneSectors;
    const double a = width * cell;
    const double b = a + width;
    Vec m(2);
    m << (std::sin(b) - std::sin(a)) / width, (std::cos(a) - std::cos(b)) / width;
    return m;
  }
  return Vec::Zero(dim_);
}

void LevyMeasure::sample_direction(int cell, Rng& rng, Eigen::Ref<Vec> out) const {
  if (cell < 0) {
    const int count = direction_cell_count();
    if (count == 1) {
      cell = 0;
    } else {
      double u = rng.uniform();
      cell = count - 1;
      for (int c = 0; c < count; ++c) {
        u -= direction_cell_fraction(c);
        if (u < 0.0) {
          cell = c;
          break;
        }
      }
    }
  }
  if (dim_ == 1) {
    out(0) = cell == 0 ? -1.0 : 1.0;
    return;
  }
  if (kind_ == MeasureKind::GaussTemperedStable) {
    out = directions_.at(cell).direction;
    return;
  }
  if (dim_ == 2) {
    const double width = 2.0 * std::numbers::pi / kPlaneSectors;
    const double theta = width * (cell + rng.uniform());
    out(0) = std::cos(theta);
    out(1) = std::sin(theta);
    return;
  }
  for (int i = 0; i < dim_; ++i) out(i) = rng.normal();
  out /= out.norm();
}

double LevyMeasure::table_min_radius() const {
  if (!table_) throw ConfigError("measure has no sampling table (infinite mass without cutoff)");
  return table_->r.front();
}

double LevyMeasure::table_max_radius() const {
  if (!table_) throw ConfigError("measure has no sampling table (infinite mass without cutoff)");
  return table_->r.back();
}

double LevyMeasure::radial_cdf(double r) const {
  if (!table_) throw ConfigError("measure has no sampling table (infinite mass without cutoff)");
  return table_->eval(r);
}

double LevyMeasure::sample_radius_between(double r_lo, double r_hi, Rng& rng) const {
  const double u_lo = table_->eval(r_lo);
  const double u_hi = table_->eval(r_hi);
  return table_->invert(u_lo + (u_hi - u_lo) * rng.uniform());
}

double LevyMeasure::sample_radius(Rng& rng) const {
  if (!table_) throw ConfigError("infinite-intensity measure requires a positive cutoff to sample");
  return table_->invert(rng.uniform());
}

Vec LevyMeasure::sample_jump(Rng& rng) const {
  Vec z(dim_);
  sample_into(MarkRegion{}, rng, z);
  return z;
}

Vec LevyMeasure::sample_in_region(const MarkRegion& region, Rng& rng) const {
  Vec z(dim_);
  sample_into(region, rng, z);
  return z;
}

void LevyMeasure::sample_into(const MarkRegion& region, Rng& rng, Eigen::Ref<Vec> out) const {
  if (!table_) throw ConfigError("infinite-intensity measure requires a positive cutoff to sample");
  const double lo = std::max(region.r_lo, table_->r.front());
  const double hi = std::min(region.r_hi, table_->r.back());
  double r;
  if (lo == table_->r.front() && hi == table_->r.back()) {
    r = table_->invert(rng.uniform());
  } else {
    r = sample_radius_between(lo, hi, rng);
  }
  sample_direction(region.cell, rng, out);
  out *= r;
  out += center_;
}

RegionMoments LevyMeasure::region_moments(const MarkRegion& region) const {
  RegionMoments out;
  out.first = Vec::Zero(dim_);
  const double lo = std::max(region.r_lo, kind_ == MeasureKind::GaussTemperedStable ? cutoff_ : 0.0);
  const double hi = std::min(region.r_hi, r_max_);
  if (!(hi > lo)) return out;
  const double frac = direction_cell_fraction(region.cell);
  const double radial_mass = radial_integral([](double) { return 1.0; }, lo, hi, 0.0);
  const double radial_first = radial_integral([](double r) { return r; }, lo, hi, 1.0);
  out.mass = frac * radial_mass;
  out.first = frac * (center_ * radial_mass + radial_first * direction_cell_mean(region.cell));
  if (dim_ == 1 && center_(0) != 0.0) {
    const double c = center_(0);
    auto cells = region.cell < 0 ? std::vector<int>{0, 1} : std::vector<int>{region.cell};
    for (int cell : cells) {
      const double u = cell == 0 ? -1.0 : 1.0;
      const double f = direction_cell_fraction(cell);
      out.abs_first += f * radial_integral([&](double r) { return std::abs(c + u * r); }, lo, hi, 0.0);
      out.abs_second += f * radial_integral([&](double r) { return (c + u * r) * (c + u * r); }, lo, hi, 0.0);
    }
  } else {
    out.abs_first = frac * radial_first;
    out.abs_second = frac * radial_integral([](double r) { return r * r; }, lo, hi, 2.0);
  }
  return out;
}

double LevyMeasure::distance_to_support_complement(const Vec& x) const {
  switch (kind_) {
    case MeasureKind::ExponentialLight:
      return kInfinite;
    case MeasureKind::CompactSupport:
      return std::max(0.0, radius_ - (x - center_).norm());
    case MeasureKind::GaussTemperedStable: {
      if (dim_ > 1) return 0.0;
      const bool neg = direction_cell_fraction(0) > 0.0;
      const bool pos = direction_cell_fraction(1) > 0.0;
      if (neg && pos) return kInfinite;
      if (pos) return std::max(0.0, x(0));
      return std::max(0.0, -x(0));
    }
  }
  return 0.0;
}

double LevyMeasure::density_lower_bound(const Vec& center, double radius) const {
  switch (kind_) {
    case MeasureKind::ExponentialLight:
      return std::exp(-std::pow(center.norm() + radius, beta_));
    case MeasureKind::CompactSupport:
      return (center - center_).norm() + radius <= radius_ * (1.0 + 1e-12) ? level_ : 0.0;
    case MeasureKind::GaussTemperedStable: {
      if (dim_ > 1) return 0.0;
      const double a = center(0) - radius;
      const double b = center(0) + radius;
      double bound = kInfinite;
      auto side = [&](int cell, double r) {
        const double w = direction_cell_fraction(cell) * weight_total_;
        return w * std::exp(-0.5 * gamma_ * r * r) / std::pow(r, alpha_ + 1.0);
      };
      if (b > 0.0) bound = std::min(bound, side(1, b));
      if (a < 0.0) bound = std::min(bound, side(0, -a));
      return bound;
    }
  }
  return 0.0;
}

}  // namespace kramers

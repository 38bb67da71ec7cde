#include "kramers/controls.hpp"

#include <algorithm>
#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <numbers>

#include "kramers/errors.hpp"
#include "kramers/ode.hpp"
#include "kramers/quadrature.hpp"
#include "kramers/text.hpp"

namespace kramers {

namespace {

constexpr double kMaxBallCell = 0.25;

double unit_ball_volume(int d) { return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0); }

template <class F>
double gl8_sum(const F& f, double a, double b) {
  double sum = 0.0;
  for (int i = 0; i < GaussLegendre8::kOrder; ++i) {
    sum += GaussLegendre8::weights[i] * f(a + (b - a) * GaussLegendre8::nodes[i]);
  }
  return sum * (b - a);
}

/// Integral of f over [a, b] split at 0, where nu densities are undefined.
double integrate_avoiding_origin(const ScalarFn& f, double a, double b, const QuadratureOptions& q = {}) {
  if (!(b > a)) return 0.0;
  if (a < 0.0 && b > 0.0) return integrate(f, a, 0.0, q) + integrate(f, 0.0, b, q);
  return integrate(f, a, b, q);
}

/// Integral of f over the disc B_R(c) in polar coordinates about c.
double integrate_disc(const std::function<double(const Vec&)>& f, const Vec& c, double R,
                      const QuadratureOptions& q) {
  Vec z(2);
  auto radial = [&](double r) {
    if (r == 0.0) return 0.0;
    auto angular = [&](double phi) {
      z(0) = c(0) + r * std::cos(phi);
      z(1) = c(1) + r * std::sin(phi);
      return f(z);
    };
    return r * integrate(angular, 0.0, 2.0 * std::numbers::pi, q);
  };
  return integrate(radial, 0.0, R, q);
}

/// Integral of f over the ball B_R(c), d <= 2.
double integrate_ball(const std::function<double(const Vec&)>& f, const Vec& c, double R,
                      const QuadratureOptions& q = {}) {
  if (c.size() == 1) {
    Vec z(1);
    return integrate_avoiding_origin(
        [&](double x) {
          z(0) = x;
          return f(z);
        },
        c(0) - R, c(0) + R, q);
  }
  if (c.size() == 2) return integrate_disc(f, c, R, q);
  throw DomainError("ball integrals are implemented for d <= 2");
}

/// Integral of |z|^power over [a, b].
double abs_power_integral(double a, double b, double power) {
  auto prim = [power](double x) { return std::copysign(std::pow(std::abs(x), power + 1.0) / (power + 1.0), x); };
  if (!(b > a)) return 0.0;
  return prim(b) - prim(a);
}

}  // namespace

// ---------------------------------------------------------------- Polyline

Polyline Polyline::straight(const Vec& from, const Vec& to, double duration) {
  Polyline p;
  p.times = {0.0, duration};
  p.knots = {from, to};
  p.validate();
  return p;
}

void Polyline::validate() const {
  if (times.size() < 2 || times.size() != knots.size()) throw ConfigError("polyline needs >= 2 knots with times");
  if (times.front() != 0.0) throw ConfigError("polyline must start at time 0");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw ConfigError("polyline times must increase strictly");
    if (knots[i].size() != knots[0].size() || !knots[i].allFinite()) throw ConfigError("polyline knots invalid");
  }
}

int Polyline::segment_of(double s) const {
  const auto it = std::upper_bound(times.begin(), times.end(), s);
  const int k = static_cast<int>(it - times.begin()) - 1;
  return std::clamp(k, 0, segments() - 1);
}

void Polyline::at(double s, Vec& out) const {
  const int k = segment_of(s);
  const double u = (s - times[k]) / (times[k + 1] - times[k]);
  out = (1.0 - u) * knots[k] + u * knots[k + 1];
}

Vec Polyline::at(double s) const {
  Vec out(knots[0].size());
  at(s, out);
  return out;
}

Vec Polyline::velocity(int k) const { return (knots[k + 1] - knots[k]) / (times[k + 1] - times[k]); }

// ----------------------------------------------------------- MarkPartition

std::shared_ptr<const MarkPartition> MarkPartition::build(const LevyMeasure& measure, int radial_bins,
                                                          double r_inner, double r_outer) {
  if (radial_bins < 1) throw ConfigError("partition needs at least one radial bin");
  auto p = std::make_shared<MarkPartition>();
  p->radial_bins = radial_bins;
  if (r_outer <= 0.0) {
    switch (measure.kind()) {
      case MeasureKind::ExponentialLight:
        r_outer = std::pow(25.0, 1.0 / measure.beta());
        break;
      case MeasureKind::GaussTemperedStable:
        r_outer = std::sqrt(50.0 / measure.gamma());
        break;
      case MeasureKind::CompactSupport:
        r_outer = measure.support_radius();
        break;
    }
  }
  if (r_inner <= 0.0) r_inner = std::max(measure.cutoff(), 1e-2 * r_outer);
  if (!(r_outer > r_inner)) throw ConfigError("partition needs r_outer > r_inner");
  p->r_inner = r_inner;
  p->r_outer = r_outer;
  p->cells = measure.direction_cell_count();
  const double ratio = std::pow(r_outer / r_inner, 1.0 / radial_bins);
  for (int b = 0; b < radial_bins; ++b) {
    const double lo = r_inner * std::pow(ratio, b);
    const double hi = b + 1 == radial_bins ? r_outer : r_inner * std::pow(ratio, b + 1);
    for (int c = 0; c < p->cells; ++c) {
      MarkRegion region{lo, hi, c};
      const RegionMoments m = measure.region_moments(region);
      p->regions.push_back(region);
      p->mass.push_back(m.mass);
      p->first.push_back(m.first);
      p->centroid.push_back(m.mass > 0.0 ? Vec(m.first / m.mass) : Vec(Vec::Zero(measure.dimension())));
      p->abs_first.push_back(m.abs_first);
      p->abs_second.push_back(m.abs_second);
    }
  }
  return p;
}

int MarkPartition::locate(const LevyMeasure& measure, const Vec& z) const {
  const Vec& c = measure.center();
  const double r = (z - c).norm();
  if (r < r_inner || r >= r_outer) return -1;
  const double ratio = std::log(r_outer / r_inner) / radial_bins;
  const int bin = std::clamp(static_cast<int>(std::log(r / r_inner) / ratio), 0, radial_bins - 1);
  // Guard against rounding at shell boundaries.
  int b = bin;
  if (r < regions[b * cells].r_lo && b > 0) --b;
  if (r >= regions[b * cells].r_hi && b + 1 < radial_bins) ++b;
  int cell = 0;
  const int d = measure.dimension();
  if (d == 1) {
    cell = z(0) - c(0) < 0.0 ? 0 : 1;
  } else if (measure.kind() == MeasureKind::GaussTemperedStable) {
    double best = -kInfinite;
    for (int k = 0; k < cells; ++k) {
      const double dot = measure.directions()[k].direction.dot(z);
      if (dot > best) {
        best = dot;
        cell = k;
      }
    }
  } else if (d == 2) {
    double phi = std::atan2(z(1) - c(1), z(0) - c(0));
    if (phi < 0.0) phi += 2.0 * std::numbers::pi;
    cell = std::clamp(static_cast<int>(phi / (2.0 * std::numbers::pi / cells)), 0, cells - 1);
  }
  return b * cells + cell;
}

// ----------------------------------------------------------------- Control

const char* to_string(ControlKind kind) {
  switch (kind) {
    case ControlKind::Identity:
      return "identity";
    case ControlKind::ConstantTilt:
      return "constant_tilt";
    case ControlKind::GridTilt:
      return "grid_tilt";
    case ControlKind::BallIndicator:
      return "ball_indicator";
  }
  return "unknown";
}

const LevyMeasure& Control::placeholder_measure() {
  static const LevyMeasure measure = LevyMeasure::exponential_light(1, 2.0);
  return measure;
}

Control Control::identity(const LevyMeasure& measure, double horizon) {
  if (!(horizon >= 0.0)) throw ConfigError("control horizon must be nonnegative");
  Control c;
  c.kind_ = ControlKind::Identity;
  c.measure_ = measure;
  c.horizon_ = horizon;
  return c;
}

Control Control::constant_tilt(const LevyMeasure& measure, double level, double horizon) {
  if (!(level > 0.0) || !std::isfinite(level)) throw ConfigError("constant tilt level must be positive and finite");
  if (!(horizon > 0.0)) throw ConfigError("control horizon must be positive");
  if (!std::isfinite(measure.effective_mass())) {
    throw ConfigError("constant tilt needs a finite effective mass (set a cutoff)");
  }
  Control c;
  c.kind_ = ControlKind::ConstantTilt;
  c.measure_ = measure;
  c.horizon_ = horizon;
  c.level_ = level;
  c.g_max_ = std::max(1.0, level);
  return c;
}

Control Control::grid_tilt(const LevyMeasure& measure, std::shared_ptr<const MarkPartition> partition,
                           std::vector<double> times, std::vector<std::vector<double>> levels) {
  if (!partition) throw ConfigError("grid tilt needs a partition");
  if (times.size() < 2 || times.front() != 0.0) throw ConfigError("grid tilt times must start at 0");
  if (levels.size() + 1 != times.size()) throw ConfigError("grid tilt needs one level row per time cell");
  Control c;
  c.kind_ = ControlKind::GridTilt;
  c.measure_ = measure;
  c.g_max_ = 1.0;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (!(times[k + 1] > times[k])) throw ConfigError("grid tilt times must increase strictly");
    if (static_cast<int>(levels[k].size()) != partition->size()) throw ConfigError("grid tilt row has wrong length");
    for (double l : levels[k]) {
      if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("grid tilt levels must be finite and nonnegative");
      c.g_max_ = std::max(c.g_max_, l);
    }
  }
  c.horizon_ = times.back();
  c.times_ = std::move(times);
  c.levels_ = std::move(levels);
  c.partition_ = std::move(partition);
  return c;
}

Control Control::ball_indicator(const SystemSpec& system, const LevyMeasure& measure, Polyline path) {
  path.validate();
  if (measure.dimension() != system.dimension || path.knots[0].size() != system.dimension) {
    throw ConfigError("ball control: dimension mismatch");
  }
  if (system.dimension > 2) throw ConfigError("ball control is implemented for d <= 2");
  Control c;
  c.kind_ = ControlKind::BallIndicator;
  c.measure_ = measure;
  c.horizon_ = path.horizon();
  c.path_ = std::move(path);
  c.system_ = std::make_shared<const SystemSpec>(system);
  c.compute_ball_bound();
  return c;
}

SteeringBall Control::ball_at(double s) const {
  SteeringBall ball;
  if (kind_ != ControlKind::BallIndicator || s < 0.0 || s >= horizon_) return ball;
  const int d = system_->dimension;
  const int k = path_.segment_of(s);
  Vec phi(d);
  path_.at(s, phi);
  Vec b(d);
  system_->drift(phi, b);
  Vec P = path_.velocity(k) - b;
  const double scale = 1.0 + phi.norm() + b.norm();
  if (P.norm() <= 1e-13 * scale) return ball;
  const double G = system_->G(phi);
  if (G == 0.0) throw DomainError("ball control: G vanishes on the path");
  ball.active = true;
  ball.G = G;
  ball.center = G > 0.0 ? P : Vec(-P);
  ball.radius = std::min(1.0, 0.5 * measure_.distance_to_support_complement(ball.center));
  ball.height = ball.radius > 0.0 ? 1.0 / (unit_ball_volume(d) * std::pow(ball.radius, d) * std::abs(G)) : kInfinite;
  return ball;
}

void Control::compute_ball_bound() {
  g_max_ = 1.0;
  for (int k = 0; k < path_.segments(); ++k) {
    const double t0 = path_.times[k];
    const double t1 = path_.times[k + 1];
    for (int i = 0; i <= 32; ++i) {
      const double s = std::min(t0 + (t1 - t0) * i / 32.0, std::nextafter(t1, t0));
      const SteeringBall ball = ball_at(s);
      if (!ball.active) continue;
      if (!(ball.radius > 0.0)) {
        throw SupportViolation("steering ball centre lies outside the support of nu at s = " + format_double(s));
      }
      const double lower = measure_.density_lower_bound(ball.center, ball.radius);
      if (!(lower > 0.0)) throw SupportViolation("steering ball leaves the support of nu");
      g_max_ = std::max(g_max_, 1.0 + ball.height / lower);
    }
  }
  // Declared bound with margin for the unsampled interior of each segment.
  g_max_ *= 1.05;
}

double Control::g(double s, const Vec& z) const {
  if (s < 0.0 || s >= horizon_) return 1.0;
  switch (kind_) {
    case ControlKind::Identity:
      return 1.0;
    case ControlKind::ConstantTilt:
      return z.norm() > measure_.cutoff() ? level_ : 1.0;
    case ControlKind::GridTilt: {
      const int j = partition_->locate(measure_, z);
      if (j < 0) return 1.0;
      const auto it = std::upper_bound(times_.begin(), times_.end(), s);
      const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - times_.begin()) - 1, levels_.size() - 1);
      return levels_[k][j];
    }
    case ControlKind::BallIndicator: {
      const SteeringBall ball = ball_at(s);
      if (!ball.active || (z - ball.center).norm() > ball.radius) return 1.0;
      return 1.0 + ball.height / measure_.density(z);
    }
  }
  return 1.0;
}

void Control::mark_drift(double s, Vec& out) const {
  out.setZero();
  if (s < 0.0 || s >= horizon_) return;
  switch (kind_) {
    case ControlKind::Identity:
      return;
    case ControlKind::ConstantTilt:
      out = (level_ - 1.0) * measure_.first_moment();
      return;
    case ControlKind::GridTilt: {
      const auto it = std::upper_bound(times_.begin(), times_.end(), s);
      const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - times_.begin()) - 1, levels_.size() - 1);
      for (int j = 0; j < partition_->size(); ++j) out += (levels_[k][j] - 1.0) * partition_->first[j];
      return;
    }
    case ControlKind::BallIndicator: {
      const SteeringBall ball = ball_at(s);
      if (ball.active) out = ball.center / std::abs(ball.G);
      return;
    }
  }
}

Vec Control::mark_drift(double s) const {
  Vec out(measure_.dimension());
  mark_drift(s, out);
  return out;
}

double Control::excess_mass(double s) const {
  if (s < 0.0 || s >= horizon_) return 0.0;
  switch (kind_) {
    case ControlKind::Identity:
      return 0.0;
    case ControlKind::ConstantTilt:
      return (level_ - 1.0) * measure_.effective_mass();
    case ControlKind::GridTilt: {
      const auto it = std::upper_bound(times_.begin(), times_.end(), s);
      const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - times_.begin()) - 1, levels_.size() - 1);
      double sum = 0.0;
      for (int j = 0; j < partition_->size(); ++j) sum += (levels_[k][j] - 1.0) * partition_->mass[j];
      return sum;
    }
    case ControlKind::BallIndicator: {
      const SteeringBall ball = ball_at(s);
      return ball.active ? 1.0 / std::abs(ball.G) : 0.0;
    }
  }
  return 0.0;
}

double Control::excess_integral(double t0, double t1) const {
  t0 = std::max(t0, 0.0);
  t1 = std::min(t1, horizon_);
  if (!(t1 > t0) || kind_ == ControlKind::Identity) return 0.0;
  const std::vector<double> breaks = time_breaks();
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double a = std::max(t0, breaks[k]);
    const double b = std::min(t1, breaks[k + 1]);
    if (!(b > a)) continue;
    if (kind_ == ControlKind::BallIndicator) {
      sum += gl8_sum([this](double s) { return excess_mass(s); }, a, b);
    } else {
      sum += (b - a) * excess_mass(0.5 * (breaks[k] + breaks[k + 1]));
    }
  }
  return sum;
}

std::vector<double> Control::time_breaks() const {
  switch (kind_) {
    case ControlKind::Identity:
    case ControlKind::ConstantTilt:
      return {0.0, horizon_};
    case ControlKind::GridTilt:
      return times_;
    case ControlKind::BallIndicator: {
      std::vector<double> out{0.0};
      for (int k = 0; k < path_.segments(); ++k) {
        const double t0 = path_.times[k];
        const double t1 = path_.times[k + 1];
        const int n = std::max(1, static_cast<int>(std::ceil((t1 - t0) / kMaxBallCell - 1e-12)));
        for (int i = 1; i < n; ++i) out.push_back(t0 + (t1 - t0) * i / n);
        out.push_back(t1);
      }
      return out;
    }
  }
  return {0.0, horizon_};
}

// ----------------------------------------------------------------- entropy

double entropy_density(double g) {
  if (g == 0.0) return 1.0;
  return g * std::log(g) - g + 1.0;
}

double entropy_rate(const Control& control, double s) {
  if (s < 0.0 || s >= control.horizon()) return 0.0;
  const LevyMeasure& nu = control.measure();
  switch (control.kind()) {
    case ControlKind::Identity:
      return 0.0;
    case ControlKind::ConstantTilt:
      return entropy_density(control.level()) * nu.effective_mass();
    case ControlKind::GridTilt: {
      const auto& times = control.grid_times();
      const auto it = std::upper_bound(times.begin(), times.end(), s);
      const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - times.begin()) - 1,
                                                   control.grid_levels().size() - 1);
      const auto& p = *control.partition();
      double sum = 0.0;
      for (int j = 0; j < p.size(); ++j) sum += p.mass[j] * entropy_density(control.grid_levels()[k][j]);
      return sum;
    }
    case ControlKind::BallIndicator: {
      const SteeringBall ball = control.ball_at(s);
      if (!ball.active) return 0.0;
      const double h = ball.height;
      // l(1 + h / nu) nu = (nu + h) log(1 + h / nu) - h
      auto f = [&](const Vec& z) {
        const double v = nu.density(z);
        if (v == 0.0) return kInfinite;
        return (v + h) * std::log1p(h / v) - h;
      };
      return integrate_ball(f, ball.center, ball.radius, QuadratureOptions{1e-13, 1e-10, 12});
    }
  }
  return 0.0;
}

double entropy(const Control& control) {
  const std::vector<double> breaks = control.time_breaks();
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double a = breaks[k];
    const double b = breaks[k + 1];
    if (control.kind() == ControlKind::BallIndicator) {
      sum += gl8_sum([&](double s) { return entropy_rate(control, s); }, a, b);
    } else {
      sum += (b - a) * entropy_rate(control, 0.5 * (a + b));
    }
  }
  return sum;
}

// ------------------------------------------------------- path constructions

Control control_for_path(const Polyline& path, const SystemSpec& system, const LevyMeasure& measure) {
  Control c = Control::ball_indicator(system, measure, path);
  // Identity when nothing needs steering anywhere.
  const auto breaks = c.time_breaks();
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    for (int i = 0; i < GaussLegendre8::kOrder; ++i) {
      const double s = breaks[k] + (breaks[k + 1] - breaks[k]) * GaussLegendre8::nodes[i];
      if (c.ball_at(s).active) return c;
    }
  }
  return Control::identity(measure, path.horizon());
}

std::vector<double> exponential_levels(const MarkPartition& p, const Vec& w) {
  const int d = static_cast<int>(w.size());
  const int n = p.size();
  std::vector<double> levels(n, 1.0);
  if (w.norm() == 0.0) return levels;
  double zmax = 0.0;
  for (int j = 0; j < n; ++j) zmax = std::max(zmax, p.centroid[j].norm());
  const double theta_cap = 700.0 / std::max(zmax, 1e-300);

  Vec theta = Vec::Zero(d);
  auto objective = [&](const Vec& th) {
    double val = -th.dot(w);
    for (int j = 0; j < n; ++j) {
      if (p.mass[j] == 0.0) continue;
      const double a = th.dot(p.centroid[j]);
      val += p.mass[j] * (std::expm1(a) - a);
    }
    return val;
  };
  Vec grad(d);
  Eigen::MatrixXd hess(d, d);
  double f = objective(theta);
  auto finish = [&] {
    for (int j = 0; j < n; ++j) levels[j] = std::exp(theta.dot(p.centroid[j]));
    return levels;
  };
  for (int iter = 0; iter < 200; ++iter) {
    grad = -w;
    hess.setZero();
    double scale = w.norm();
    for (int j = 0; j < n; ++j) {
      if (p.mass[j] == 0.0) continue;
      const double e = std::exp(theta.dot(p.centroid[j]));
      grad += (e - 1.0) * p.first[j];
      scale += (e + 1.0) * p.first[j].norm();
      hess += (p.mass[j] * e) * p.centroid[j] * p.centroid[j].transpose();
    }
    if (grad.norm() <= 1e-14 * scale) return finish();
    Vec step = hess.ldlt().solve(-grad);
    if (!step.allFinite()) break;
    if (step.norm() <= 1e-12 * (1.0 + theta.norm())) return finish();
    double alpha = 1.0;
    bool moved = false;
    if (std::abs(grad.dot(step)) <= 1e-12 * (1.0 + std::abs(f))) {
      // Decrease below rounding of the objective: plain Newton.
      theta += step;
      f = objective(theta);
      continue;
    }
    for (int ls = 0; ls < 60; ++ls) {
      const Vec trial = theta + alpha * step;
      const double ft = objective(trial);
      if (std::isfinite(ft) && ft <= f + 1e-4 * alpha * grad.dot(step)) {
        theta = trial;
        f = ft;
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    // Stalled at rounding level.
    if (!moved) {
      if (grad.norm() <= 1e-9 * scale) return finish();
      break;
    }
    if (theta.norm() > theta_cap) break;
  }
  throw InfeasibleError("mark drift not attainable by a grid tilt (one-sided support?)");
}

namespace {

/// Endpoint of U' = b(U) + G(U) w over [0, dt] from x.
void shoot(const SystemSpec& system, const Vec& w, double dt, double step, Vec& x, Rk4& rk) {
  auto field = [&](double, const Vec& u, Vec& out) {
    system.drift(u, out);
    out += system.G(u) * w;
  };
  rk.advance(field, 0.0, dt, step, x);
}

/// Secant (d = 1) or Broyden iteration on the shooting residual, started
/// from the Jacobian guess scale * I. Returns false instead of throwing.
template <class Residual>
bool broyden_shoot(const Residual& residual, Vec& w, double scale, double tol) {
  const Eigen::Index d = w.size();
  Eigen::MatrixXd J = Eigen::MatrixXd::Identity(d, d) * scale;
  try {
    Vec r = residual(w);
    for (int iter = 0; iter < 16; ++iter) {
      if (r.norm() <= tol) return true;
      const Vec dw = d == 1 ? Vec(-r / J(0, 0)) : Vec(J.partialPivLu().solve(-r));
      if (!dw.allFinite() || dw.norm() == 0.0) return false;
      w += dw;
      const Vec rn = residual(w);
      J += ((rn - r) - J * dw) * dw.transpose() / dw.squaredNorm();
      r = rn;
    }
    return r.norm() <= tol;
  } catch (const NumericalError&) {
    return false;
  }
}

}  // namespace

Control grid_control_for_path(const Polyline& path, const SystemSpec& system, const LevyMeasure& measure,
                              std::shared_ptr<const MarkPartition> partition, const GridShootOptions& opts) {
  path.validate();
  const int d = system.dimension;
  if (!partition) partition = MarkPartition::build(measure);
  Rk4 rk(d);
  Vec x = path.knots[0];
  Vec y(d);
  Vec b(d);
  std::vector<std::vector<double>> levels;
  levels.reserve(path.segments());
  for (int k = 0; k < path.segments(); ++k) {
    const double dt = path.times[k + 1] - path.times[k];
    const double step = std::min(opts.ode_step, dt / 4.0);
    const Vec& target = path.knots[k + 1];
    const Vec mid = 0.5 * (x + target);
    system.drift(mid, b);
    const double G0 = system.G(mid);
    Vec w = ((target - x) / dt - b) / G0;
    auto residual = [&](const Vec& wv) {
      y = x;
      shoot(system, wv, dt, step, y, rk);
      return Vec(y - target);
    };
    if (broyden_shoot(residual, w, dt * G0, opts.tolerance)) {
      // converged
    } else if (d == 1) {
      w = ((target - x) / dt - b) / G0;
      auto f = [&](double v) { return residual(Vec::Constant(1, v))(0); };
      const double w0 = w(0);
      const double f0 = f(w0);
      if (f0 == 0.0) {
        w(0) = w0;
      } else {
        // Endpoint is monotone in w with the sign of G.
        const double dir = (f0 > 0.0) == (G0 > 0.0) ? -1.0 : 1.0;
        double span = std::max(1e-3, 0.5 * std::abs(w0));
        double a = w0;
        double fa = f0;
        double c = w0 + dir * span;
        double fc = f(c);
        int expand = 0;
        while (fa * fc > 0.0 && expand < 80) {
          a = c;
          fa = fc;
          span *= 2.0;
          c = w0 + dir * span;
          fc = f(c);
          ++expand;
        }
        if (fa * fc > 0.0) throw InfeasibleError("grid shooting failed to bracket the mark drift");
        double lo = std::min(a, c);
        double hi = std::max(a, c);
        double flo = lo == a ? fa : fc;
        double fhi = lo == a ? fc : fa;
        std::uintmax_t iters = 200;
        auto tol = [&](double u, double v) { return std::abs(u - v) <= 1e-14 * (1.0 + std::abs(u)); };
        auto root = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
        w(0) = 0.5 * (root.first + root.second);
      }
    } else {
      w = ((target - x) / dt - b) / G0;
      Eigen::MatrixXd J(d, d);
      Vec r = residual(w);
      for (int iter = 0; iter < 60 && r.norm() > opts.tolerance; ++iter) {
        for (int i = 0; i < d; ++i) {
          Vec wp = w;
          const double h = 1e-6 * (1.0 + std::abs(w(i)));
          wp(i) += h;
          J.col(i) = (residual(wp) - r) / h;
        }
        const Vec step_w = J.fullPivLu().solve(-r);
        double lambda = 1.0;
        for (int ls = 0; ls < 40; ++ls) {
          const Vec trial = w + lambda * step_w;
          const Vec rt = residual(trial);
          if (rt.norm() < r.norm()) {
            w = trial;
            r = rt;
            break;
          }
          lambda *= 0.5;
        }
      }
      if (r.norm() > 1e-8) throw InfeasibleError("grid shooting did not converge");
    }
    levels.push_back(exponential_levels(*partition, w));
    // Advance with the realized (not the nominal) drift of the levels.
    Vec realized = Vec::Zero(d);
    for (int j = 0; j < partition->size(); ++j) realized += (levels.back()[j] - 1.0) * partition->first[j];
    shoot(system, realized, dt, step, x, rk);
  }
  return Control::grid_tilt(measure, partition, path.times, std::move(levels));
}

ControlledPath solve_controlled_ode(const Control& control, const SystemSpec& system, const Vec& x, double dt,
                                    bool record, double bound) {
  if (!(dt > 0.0)) throw ConfigError("controlled ODE step must be positive");
  const int d = system.dimension;
  ControlledPath out;
  Vec u = x;
  Vec md(d);
  Rk4 rk(d);
  // Within a quadrature cell grid and constant drifts are frozen.
  const bool frozen = control.kind() != ControlKind::BallIndicator;
  double cell_end = 0.0;
  auto field = [&](double t, const Vec& v, Vec& o) {
    // Stages at the cell end belong to the current cell.
    if (!frozen) control.mark_drift(std::min(t, std::nextafter(cell_end, 0.0)), md);
    system.drift(v, o);
    o += system.G(v) * md;
  };
  if (record) {
    out.times.push_back(0.0);
    out.states.push_back(u);
  }
  const std::vector<double> breaks = control.time_breaks();
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double a = breaks[k];
    const double b = breaks[k + 1];
    if (!(b > a)) continue;
    cell_end = b;
    if (frozen) control.mark_drift(0.5 * (a + b), md);
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / dt - 1e-12)));
    const double h = (b - a) / n;
    for (int i = 0; i < n; ++i) {
      rk.step(field, a + i * h, h, u);
      if (u.norm() > bound) throw NumericalError("controlled ODE left the a-priori bound");
      if (record) {
        out.times.push_back(a + (i + 1) * h);
        out.states.push_back(u);
      }
    }
  }
  out.terminal = u;
  return out;
}

// ----------------------------------------------------------- integrability

namespace {

/// int |z|^power nu(dz) on [a, b] (d = 1).
double line_moment(const LevyMeasure& nu, double a, double b, double power) {
  return integrate_avoiding_origin(
      [&](double z) { return std::pow(std::abs(z), power) * nu.density(z); }, a, b);
}

/// int |z|^power |g(s, z) - 1| nu(dz) restricted to |z| <= radius; with
/// `signed_weight` the factor is (g - 1) instead.
double deviation_rate(const Control& control, double s, double power, double radius, bool signed_weight = false) {
  if (s < 0.0 || s >= control.horizon()) return 0.0;
  const LevyMeasure& nu = control.measure();
  const int d = nu.dimension();
  switch (control.kind()) {
    case ControlKind::Identity:
      return 0.0;
    case ControlKind::ConstantTilt: {
      const double c = signed_weight ? control.level() - 1.0 : std::abs(control.level() - 1.0);
      if (c == 0.0) return 0.0;
      const double lo = nu.cutoff();
      if (d == 1 && nu.center()(0) != 0.0) {
        return c * (line_moment(nu, -radius, -lo, power) + line_moment(nu, lo, radius, power));
      }
      return c * nu.radial_integral([power](double r) { return std::pow(r, power); }, lo, radius, power);
    }
    case ControlKind::GridTilt: {
      const auto& times = control.grid_times();
      const auto it = std::upper_bound(times.begin(), times.end(), s);
      const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - times.begin()) - 1,
                                                   control.grid_levels().size() - 1);
      const auto& p = *control.partition();
      const bool full = radius >= kInfinite;
      double sum = 0.0;
      for (int j = 0; j < p.size(); ++j) {
        const double l = control.grid_levels()[k][j] - 1.0;
        const double dev = signed_weight ? l : std::abs(l);
        if (dev == 0.0) continue;
        if (full && (power == 1.0 || power == 2.0)) {
          sum += dev * (power == 1.0 ? p.abs_first[j] : p.abs_second[j]);
          continue;
        }
        const MarkRegion& region = p.regions[j];
        if (d == 1) {
          const double u = region.cell == 0 ? -1.0 : 1.0;
          const double c = nu.center()(0);
          double a = c + u * region.r_lo;
          double b = c + u * region.r_hi;
          if (a > b) std::swap(a, b);
          sum += dev * line_moment(nu, std::max(a, -radius), std::min(b, radius), power);
        } else {
          MarkRegion clipped = region;
          clipped.r_hi = std::min(region.r_hi, radius);
          if (!(clipped.r_hi > clipped.r_lo)) continue;
          sum += dev * nu.direction_cell_fraction(region.cell) *
                 nu.radial_integral([power](double r) { return std::pow(r, power); }, clipped.r_lo, clipped.r_hi,
                                    power);
        }
      }
      return sum;
    }
    case ControlKind::BallIndicator: {
      const SteeringBall ball = control.ball_at(s);
      if (!ball.active) return 0.0;
      if (d == 1) {
        const double a = std::max(ball.center(0) - ball.radius, -radius);
        const double b = std::min(ball.center(0) + ball.radius, radius);
        return ball.height * abs_power_integral(a, b, power);
      }
      return ball.height * integrate_ball(
                               [&](const Vec& z) {
                                 const double r = z.norm();
                                 return r <= radius ? std::pow(r, power) : 0.0;
                               },
                               ball.center, ball.radius, QuadratureOptions{1e-12, 1e-9, 12});
    }
  }
  return 0.0;
}

double excess_second_rate(const Control& control, double s, double radius) {
  return deviation_rate(control, s, 2.0, radius, true);
}

template <class Rate>
double integrate_over_cells(const Control& control, const Rate& rate) {
  const auto breaks = control.time_breaks();
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    if (control.kind() == ControlKind::BallIndicator) {
      sum += gl8_sum(rate, breaks[k], breaks[k + 1]);
    } else {
      sum += (breaks[k + 1] - breaks[k]) * rate(0.5 * (breaks[k] + breaks[k + 1]));
    }
  }
  return sum;
}

double total_second_moment(const LevyMeasure& nu) {
  return nu.second_moment_below(nu.outer_radius() + nu.center().norm());
}

}  // namespace

double restricted_second_moment(const Control& control, double radius) {
  const LevyMeasure& nu = control.measure();
  const double base = control.horizon() * nu.second_moment_below(radius);
  return base + integrate_over_cells(control, [&](double s) { return excess_second_rate(control, s, radius); });
}

IntegrabilityReport verify_control_integrability(const Control& control, const std::vector<double>& deltas) {
  IntegrabilityReport rep;
  const LevyMeasure& nu = control.measure();
  const double T = control.horizon();
  rep.second_moment = T * total_second_moment(nu) +
                      integrate_over_cells(control, [&](double s) { return excess_second_rate(control, s, kInfinite); });
  auto beta = [&](double s) { return deviation_rate(control, s, 1.0, kInfinite); };
  rep.first_deviation = integrate_over_cells(control, beta);

  // Cumulative increment B(t) on a node set where it is (close to) piecewise linear.
  std::vector<double> nodes;
  std::vector<double> cum;
  const auto breaks = control.time_breaks();
  if (control.kind() == ControlKind::BallIndicator) {
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
      const int sub = 64;
      for (int i = 0; i < sub; ++i) nodes.push_back(breaks[k] + (breaks[k + 1] - breaks[k]) * i / sub);
    }
    nodes.push_back(T);
    cum.assign(nodes.size(), 0.0);
    for (std::size_t i = 1; i < nodes.size(); ++i) cum[i] = cum[i - 1] + gl8_sum(beta, nodes[i - 1], nodes[i]);
  } else {
    nodes = breaks;
    cum.assign(nodes.size(), 0.0);
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      cum[i] = cum[i - 1] + (nodes[i] - nodes[i - 1]) * beta(0.5 * (nodes[i - 1] + nodes[i]));
    }
  }
  auto B = [&](double t) {
    t = std::clamp(t, 0.0, T);
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), t);
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - nodes.begin(), 1)), nodes.size() - 1);
    const double u = (t - nodes[i - 1]) / (nodes[i] - nodes[i - 1]);
    return cum[i - 1] + u * (cum[i] - cum[i - 1]);
  };
  for (double delta : deltas) {
    double best = 0.0;
    if (T > 0.0) {
      for (double t : nodes) {
        for (double start : {t, t - delta}) {
          const double a = std::clamp(start, 0.0, std::max(0.0, T - delta));
          best = std::max(best, B(a + delta) - B(a));
        }
      }
    }
    rep.modulus.emplace_back(delta, best);
  }
  return rep;
}

// ------------------------------------------------------------ composition

Control concatenate(const Control& a, const Control& b) {
  if (a.kind() != b.kind()) throw ConfigError("concatenate: controls of different kinds");
  switch (a.kind()) {
    case ControlKind::Identity:
      return Control::identity(a.measure(), a.horizon() + b.horizon());
    case ControlKind::ConstantTilt:
      if (a.level() != b.level()) throw ConfigError("concatenate: constant tilts with different levels");
      return Control::constant_tilt(a.measure(), a.level(), a.horizon() + b.horizon());
    case ControlKind::GridTilt: {
      if (a.partition() != b.partition()) throw ConfigError("concatenate: grid tilts on different partitions");
      auto times = a.grid_times();
      auto levels = a.grid_levels();
      for (std::size_t k = 1; k < b.grid_times().size(); ++k) times.push_back(a.horizon() + b.grid_times()[k]);
      levels.insert(levels.end(), b.grid_levels().begin(), b.grid_levels().end());
      return Control::grid_tilt(a.measure(), a.partition(), std::move(times), std::move(levels));
    }
    case ControlKind::BallIndicator: {
      Polyline p = a.path();
      const Polyline& q = b.path();
      if ((q.knots.front() - p.knots.back()).norm() > 1e-12) throw ConfigError("concatenate: paths do not join");
      for (std::size_t k = 1; k < q.times.size(); ++k) {
        p.times.push_back(a.horizon() + q.times[k]);
        p.knots.push_back(q.knots[k]);
      }
      return Control::ball_indicator(*a.system(), a.measure(), std::move(p));
    }
  }
  throw ConfigError("concatenate: unknown control kind");
}

// ---------------------------------------------------------- serialization

std::vector<std::pair<std::string, std::string>> serialize_control(const Control& control, const std::string& prefix) {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back(prefix + ".kind", to_string(control.kind()));
  out.emplace_back(prefix + ".horizon", format_double(control.horizon()));
  switch (control.kind()) {
    case ControlKind::Identity:
      break;
    case ControlKind::ConstantTilt:
      out.emplace_back(prefix + ".level", format_double(control.level()));
      break;
    case ControlKind::GridTilt: {
      const auto& p = *control.partition();
      out.emplace_back(prefix + ".partition.bins", std::to_string(p.radial_bins));
      out.emplace_back(prefix + ".partition.r_inner", format_double(p.r_inner));
      out.emplace_back(prefix + ".partition.r_outer", format_double(p.r_outer));
      out.emplace_back(prefix + ".times", format_list(control.grid_times()));
      std::string rows;
      for (std::size_t k = 0; k < control.grid_levels().size(); ++k) {
        if (k) rows += "; ";
        rows += format_list(control.grid_levels()[k]);
      }
      out.emplace_back(prefix + ".levels", rows);
      break;
    }
    case ControlKind::BallIndicator: {
      out.emplace_back(prefix + ".path.times", format_list(control.path().times));
      std::string knots;
      for (std::size_t k = 0; k < control.path().knots.size(); ++k) {
        if (k) knots += "; ";
        knots += format_vec(control.path().knots[k], ", ");
      }
      out.emplace_back(prefix + ".path.knots", knots);
      break;
    }
  }
  return out;
}

Control deserialize_control(const std::map<std::string, std::string>& entries, const SystemSpec& system,
                            const LevyMeasure& measure, const std::string& prefix) {
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = entries.find(prefix + "." + key);
    if (it == entries.end()) throw ConfigError("missing key '" + prefix + "." + key + "'");
    return it->second;
  };
  const std::string kind = get("kind");
  const double horizon = parse_double(get("horizon"));
  if (kind == "identity") return Control::identity(measure, horizon);
  if (kind == "constant_tilt") return Control::constant_tilt(measure, parse_double(get("level")), horizon);
  if (kind == "grid_tilt") {
    const int bins = static_cast<int>(parse_double(get("partition.bins")));
    auto partition = MarkPartition::build(measure, bins, parse_double(get("partition.r_inner")),
                                          parse_double(get("partition.r_outer")));
    std::vector<std::vector<double>> levels;
    for (const auto& row : split(get("levels"), ';')) levels.push_back(parse_list(row));
    return Control::grid_tilt(measure, partition, parse_list(get("times")), std::move(levels));
  }
  if (kind == "ball_indicator") {
    Polyline p;
    p.times = parse_list(get("path.times"));
    for (const auto& k : split(get("path.knots"), ';')) {
      const auto v = parse_list(k);
      p.knots.push_back(Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    return Control::ball_indicator(system, measure, std::move(p));
  }
  throw ConfigError("unknown control kind '" + kind + "'");
}

}  // namespace kramers

#include "kramers/noise.hpp"

#include <cmath>
#include <numbers>

#include "kramers/errors.hpp"

namespace kramers {

void NoiseParams::validate() const {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in (0, 1]");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be finite and nonnegative");
  const double m = measure.effective_mass();
  if (!(m > 0.0)) throw ConfigError("effective jump mass is zero");
  if (!std::isfinite(m)) throw ConfigError("infinite-intensity measure requires a positive cutoff");
}

double ListJumpSource::next(Eigen::Ref<Vec> z) {
  if (pos_ >= jumps_.size()) return kInfinite;
  const JumpRecord& j = jumps_[pos_++];
  z = j.mark;
  return j.time;
}

JumpStream::JumpStream(const LevyMeasure& measure, double epsilon, const Control* control, Rng& rng)
    : measure_(measure), epsilon_(epsilon), control_(control), rng_(rng), scratch_(measure.dimension()) {
  if (!std::isfinite(measure.effective_mass())) {
    throw ConfigError("infinite-intensity measure requires a positive cutoff to simulate");
  }
  if (control_ && control_->kind() == ControlKind::Identity) control_ = nullptr;
  if (control_) {
    if (!std::isfinite(control_->g_max())) throw ConfigError("tilting control is unbounded");
    breaks_ = control_->time_breaks();
    enter_cell(0);
  }
}

void JumpStream::enter_cell(std::size_t k) {
  cell_ = k;
  channels_.clear();
  total_rate_ = 0.0;
  if (k + 1 >= breaks_.size()) {
    beyond_ = true;
    return;
  }
  beyond_ = false;
  const double base = measure_.effective_mass() / epsilon_;
  const double a = breaks_[k];
  const double b = breaks_[k + 1];
  switch (control_->kind()) {
    case ControlKind::Identity:
      channels_.push_back({MarkRegion{}, base, false});
      break;
    case ControlKind::ConstantTilt:
      channels_.push_back({MarkRegion{}, control_->level() * base, false});
      break;
    case ControlKind::GridTilt: {
      const auto& p = *control_->partition();
      const auto& levels = control_->grid_levels()[k];
      const MarkRegion core{0.0, p.r_inner, -1};
      const MarkRegion tail{p.r_outer, kInfinite, -1};
      channels_.push_back({core, measure_.region_moments(core).mass / epsilon_, false});
      channels_.push_back({tail, measure_.region_moments(tail).mass / epsilon_, false});
      for (int j = 0; j < p.size(); ++j) channels_.push_back({p.regions[j], levels[j] * p.mass[j] / epsilon_, false});
      break;
    }
    case ControlKind::BallIndicator: {
      channels_.push_back({MarkRegion{}, base, false});
      double bound = 0.0;
      for (int i = 0; i <= 16; ++i) {
        const double s = std::min(a + (b - a) * i / 16.0, std::nextafter(b, a));
        bound = std::max(bound, control_->excess_mass(s));
      }
      if (bound > 0.0) channels_.push_back({MarkRegion{}, 1.05 * bound / epsilon_, true});
      break;
    }
  }
  for (const auto& c : channels_) total_rate_ += c.rate;
}

double JumpStream::next(Eigen::Ref<Vec> z) {
  for (;;) {
    if (beyond_) {
      t_ += rng_.exponential(measure_.effective_mass() / epsilon_);
      measure_.sample_into(MarkRegion{}, rng_, z);
      last_log_g_ = 0.0;
      return t_;
    }
    const double end = breaks_[cell_ + 1];
    if (!(total_rate_ > 0.0)) {
      t_ = end;
      enter_cell(cell_ + 1);
      continue;
    }
    const double candidate = t_ + rng_.exponential(total_rate_);
    if (candidate >= end) {
      // Memoryless restart at the cell boundary.
      t_ = end;
      enter_cell(cell_ + 1);
      continue;
    }
    t_ = candidate;
    std::size_t pick = 0;
    if (channels_.size() > 1) {
      double u = rng_.uniform() * total_rate_;
      pick = channels_.size() - 1;
      for (std::size_t i = 0; i < channels_.size(); ++i) {
        u -= channels_[i].rate;
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
    }
    const Channel& ch = channels_[pick];
    if (ch.rate == 0.0) continue;
    if (ch.ball) {
      const SteeringBall ball = control_->ball_at(t_);
      const double rate = ball.active ? 1.0 / (std::abs(ball.G) * epsilon_) : 0.0;
      if (rate > ch.rate * (1.0 + 1e-12)) throw NumericalError("ball intensity exceeded its declared bound");
      if (rate < ch.rate && rng_.uniform() * ch.rate >= rate) continue;
      const int d = measure_.dimension();
      if (d == 1) {
        z(0) = ball.center(0) + ball.radius * (2.0 * rng_.uniform() - 1.0);
      } else {
        const double r = ball.radius * std::sqrt(rng_.uniform());
        const double phi = 2.0 * std::numbers::pi * rng_.uniform();
        z(0) = ball.center(0) + r * std::cos(phi);
        z(1) = ball.center(1) + r * std::sin(phi);
      }
    } else {
      measure_.sample_into(ch.region, rng_, z);
    }
    scratch_ = z;
    const double g = control_->g(t_, scratch_);
    if (!(g > 0.0)) throw DegenerateWeight("realized jump has zero control intensity");
    last_log_g_ = std::log(g);
    return t_;
  }
}

namespace {

std::vector<JumpRecord> collect(const NoiseParams& params, const Control* control, Rng& rng) {
  params.validate();
  std::vector<JumpRecord> out;
  if (params.horizon == 0.0) return out;
  JumpStream stream(params.measure, params.epsilon, control, rng);
  Vec z(params.measure.dimension());
  for (;;) {
    const double t = stream.next(z);
    if (t > params.horizon) break;
    out.push_back({t, z});
  }
  return out;
}

}  // namespace

std::vector<JumpRecord> simulate_prm(const NoiseParams& params, Rng& rng) { return collect(params, nullptr, rng); }

std::vector<JumpRecord> simulate_tilted_prm(const NoiseParams& params, const Control& control, Rng& rng) {
  return collect(params, &control, rng);
}

double girsanov_log_weight(const NoiseParams& params, const Control& control, const std::vector<JumpRecord>& jumps,
                           double stop) {
  if (stop < 0.0) stop = params.horizon;
  double log_w = 0.0;
  for (const auto& j : jumps) {
    if (j.time > stop) break;
    const double g = control.g(j.time, j.mark);
    if (!(g > 0.0)) throw DegenerateWeight("control vanishes at a realized jump");
    log_w -= std::log(g);
  }
  return log_w + control.excess_integral(0.0, stop) / params.epsilon;
}

}  // namespace kramers

#pragma once

#include <vector>

#include "kramers/controls.hpp"
#include "kramers/measures.hpp"
#include "kramers/random.hpp"

namespace kramers {

struct NoiseParams {
  double epsilon = 1.0;
  LevyMeasure measure = LevyMeasure::exponential_light(1, 2.0);
  double horizon = 1.0;

  void validate() const;
};

struct JumpRecord {
  double time = 0.0;
  Vec mark;
};

/// Source of jump times and marks for the path simulator.
class JumpSource {
 public:
  virtual ~JumpSource() = default;
  /// Time of the next jump (+infinity when exhausted); the mark goes to `z`.
  virtual double next(Eigen::Ref<Vec> z) = 0;
  /// ln g(t, z) of the jump last returned by next().
  virtual double last_log_g() const { return 0.0; }
};

/// Replays a fixed jump list.
class ListJumpSource final : public JumpSource {
 public:
  explicit ListJumpSource(const std::vector<JumpRecord>& jumps) : jumps_(jumps) {}
  double next(Eigen::Ref<Vec> z) override;

 private:
  const std::vector<JumpRecord>& jumps_;
  std::size_t pos_ = 0;
};

/// Streaming realization of N^{g/eps} restricted to {|z| > cutoff} on
/// [0, infinity), with g = 1 after the control horizon (or everywhere when
/// no control is given).
///
/// Each time cell carries a list of channels. Piecewise-constant tilts are
/// sampled exactly per mark region (rate level * nu(region) / eps). A ball
/// control adds a channel of uniform marks on the steering ball, thinned
/// against its declared rate bound. With no control, or g = 1, only the base
/// channel exists and the random stream is consumed exactly as untilted.
class JumpStream final : public JumpSource {
 public:
  JumpStream(const LevyMeasure& measure, double epsilon, const Control* control, Rng& rng);
  double next(Eigen::Ref<Vec> z) override;
  double last_log_g() const override { return last_log_g_; }

 private:
  struct Channel {
    MarkRegion region;
    double rate = 0.0;  // proposals per unit time
    bool ball = false;
  };
  void enter_cell(std::size_t k);

  const LevyMeasure& measure_;
  double epsilon_;
  const Control* control_;
  Rng& rng_;
  std::vector<double> breaks_;
  std::size_t cell_ = 0;
  bool beyond_ = true;
  std::vector<Channel> channels_;
  double total_rate_ = 0.0;
  double t_ = 0.0;
  double last_log_g_ = 0.0;
  Vec scratch_;
};

/// Jumps of N^{1/eps} on [0, T].
std::vector<JumpRecord> simulate_prm(const NoiseParams& params, Rng& rng);
/// Jumps of N^{g/eps} on [0, T].
std::vector<JumpRecord> simulate_tilted_prm(const NoiseParams& params, const Control& control, Rng& rng);

/// Log-likelihood ratio dP/dQ of the untilted law against the tilted one on
/// [0, stop], evaluated on a tilted realization:
///   sum_{t_i <= stop} ln(1 / g(t_i, z_i)) + (1/eps) int_0^stop int (g - 1) nu ds.
/// `stop` defaults to the horizon.
double girsanov_log_weight(const NoiseParams& params, const Control& control, const std::vector<JumpRecord>& jumps,
                           double stop = -1.0);

}  // namespace kramers

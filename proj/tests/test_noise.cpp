#include <doctest.h>

#include <cmath>
#include <numbers>

#include "kramers/noise.hpp"
#include "kramers/statistics.hpp"

using namespace kramers;

namespace {

NoiseParams params(double eps, double T) {
  NoiseParams p;
  p.epsilon = eps;
  p.horizon = T;
  return p;
}

}  // namespace

TEST_CASE("jump counts have the Poisson mean T m_eff / eps") {
  const auto p = params(0.1, 1.0);
  Rng rng(5);
  std::vector<double> counts;
  for (int i = 0; i < 10000; ++i) counts.push_back(static_cast<double>(simulate_prm(p, rng).size()));
  const double want = std::sqrt(std::numbers::pi) / 0.1;
  const double se = std::sqrt(variance(counts) / counts.size());
  CHECK(std::abs(mean(counts) - want) < 3.0 * se);
}

TEST_CASE("zero horizon gives no jumps") {
  Rng rng(1);
  CHECK(simulate_prm(params(1.0, 0.0), rng).empty());
}

TEST_CASE("compact-support counts are Poisson(8)") {
  auto p = params(0.5, 2.0);
  p.measure = LevyMeasure::compact_support(1, 0.5, 2.0);
  Rng rng(9);
  std::vector<double> counts;
  for (int i = 0; i < 10000; ++i) counts.push_back(static_cast<double>(simulate_prm(p, rng).size()));
  CHECK(mean(counts) == doctest::Approx(8.0).epsilon(0.03));
  CHECK(variance(counts) == doctest::Approx(8.0).epsilon(0.06));
}

TEST_CASE("jump times increase strictly and lie in [0, T]") {
  Rng rng(2);
  const auto jumps = simulate_prm(params(0.05, 3.0), rng);
  REQUIRE(jumps.size() > 10);
  for (std::size_t i = 1; i < jumps.size(); ++i) CHECK(jumps[i].time > jumps[i - 1].time);
  CHECK(jumps.back().time <= 3.0);
}

TEST_CASE("identity tilt reproduces the untilted stream bit for bit") {
  const auto p = params(0.2, 4.0);
  const auto id = Control::identity(p.measure, 4.0);
  Rng a(77), b(77);
  const auto plain = simulate_prm(p, a);
  const auto tilted = simulate_tilted_prm(p, id, b);
  REQUIRE(plain.size() == tilted.size());
  for (std::size_t i = 0; i < plain.size(); ++i) {
    CHECK(plain[i].time == tilted[i].time);
    CHECK(plain[i].mark(0) == tilted[i].mark(0));
  }
  CHECK(girsanov_log_weight(p, id, tilted) == 0.0);
}

TEST_CASE("constant tilt doubles the rate and the weight has mean one") {
  const auto p = params(0.5, 1.0);
  const auto c2 = Control::constant_tilt(p.measure, 2.0, 1.0);
  Rng rng(31);
  std::vector<double> counts, w;
  for (int i = 0; i < 10000; ++i) {
    const auto jumps = simulate_tilted_prm(p, c2, rng);
    counts.push_back(static_cast<double>(jumps.size()));
    const double lw = girsanov_log_weight(p, c2, jumps);
    // closed form n ln(1/2) + (T m / eps)(2 - 1)
    CHECK(lw == doctest::Approx(jumps.size() * std::log(0.5) + std::sqrt(std::numbers::pi) / 0.5).epsilon(1e-12));
    w.push_back(std::exp(lw));
  }
  const double want = 2.0 * std::sqrt(std::numbers::pi) / 0.5;
  CHECK(std::abs(mean(counts) - want) < 3.0 * std::sqrt(variance(counts) / counts.size()));
  CHECK(std::abs(mean(w) - 1.0) < 3.0 * std::sqrt(variance(w) / w.size()));
}

TEST_CASE("one-sided inflation shifts the mark mean") {
  // g = 1 + 1{z > 0} through a grid tilt whose positive cells sit at level 2
  const auto p = params(0.5, 1.0);
  auto part = MarkPartition::build(p.measure, 4);
  std::vector<double> levels(part->size());
  for (int j = 0; j < part->size(); ++j) levels[j] = part->centroid[j](0) > 0 ? 2.0 : 1.0;
  const auto g = Control::grid_tilt(p.measure, part, {0.0, 1.0}, {levels});
  Rng rng(8);
  double sum = 0.0;
  int n = 0;
  for (int i = 0; i < 2000; ++i) {
    for (const auto& j : simulate_tilted_prm(p, g, rng)) {
      sum += j.mark(0);
      ++n;
    }
  }
  CHECK(sum / n > 0.05);
}

TEST_CASE("thinned counts per time bin match the tilted intensity") {
  // piecewise-constant levels 1 on [0, 0.5) and 3 on [0.5, 1) in every region
  const auto p = params(0.5, 1.0);
  auto part = MarkPartition::build(p.measure, 4);
  const std::vector<double> ones(part->size(), 1.0), threes(part->size(), 3.0);
  const auto g = Control::grid_tilt(p.measure, part, {0.0, 0.5, 1.0}, {ones, threes});
  double inside = 0.0;
  for (int j = 0; j < part->size(); ++j) inside += part->mass[j];
  const double m = p.measure.effective_mass();
  const double want0 = 0.5 * m / 0.5;
  const double want1 = 0.5 * (m + 2.0 * inside) / 0.5;
  Rng rng(21);
  std::vector<double> c0, c1;
  for (int i = 0; i < 10000; ++i) {
    int a = 0, b = 0;
    for (const auto& j : simulate_tilted_prm(p, g, rng)) (j.time < 0.5 ? a : b)++;
    c0.push_back(a);
    c1.push_back(b);
  }
  CHECK(std::abs(mean(c0) - want0) < 3.0 * std::sqrt(want0 / 10000));
  CHECK(std::abs(mean(c1) - want1) < 3.0 * std::sqrt(want1 / 10000));
}

TEST_CASE("same seed, same jumps") {
  const auto p = params(0.3, 2.0);
  Rng a(4), b(4);
  const auto x = simulate_prm(p, a), y = simulate_prm(p, b);
  REQUIRE(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(x[i].mark(0) == y[i].mark(0));
}

#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "kramers/controls.hpp"
#include "kramers/errors.hpp"
#include "oracles.hpp"

using namespace kramers;

namespace {

const LevyMeasure& gauss() {
  static const auto nu = LevyMeasure::exponential_light(1, 2.0);
  return nu;
}

Vec v1(double x) { return Vec::Constant(1, x); }

// Entropy rate of the d = 1 steering ball about c: radius 1 (the support is
// R), extra intensity 1/2 per unit length.
double ball_rate(double c) {
  return oracle::simpson(
      [](double z) {
        const double nu = std::exp(-z * z);
        return entropy_density(1.0 + 0.5 / nu) * nu;
      },
      c - 1.0, c + 1.0, 4000);
}

}  // namespace

TEST_CASE("entropy closed forms") {
  CHECK(entropy(Control::identity(gauss(), 3.0)) == 0.0);
  const double want = std::sqrt(std::numbers::pi) * (2.0 * std::log(2.0) - 1.0);
  CHECK(oracle::rel_err(entropy(Control::constant_tilt(gauss(), 2.0, 1.0)), want) < 1e-6);
  CHECK(want == doctest::Approx(0.6846889280).epsilon(1e-9));
  CHECK(entropy_density(0.0) == 1.0);
  CHECK(entropy_density(1.0) == 0.0);
}

TEST_CASE("integrability report for a constant tilt") {
  const auto c3 = Control::constant_tilt(gauss(), 3.0, 1.0);
  const auto rep = verify_control_integrability(c3);
  CHECK(oracle::rel_err(rep.second_moment, 1.5 * std::sqrt(std::numbers::pi)) < 1e-8);
  CHECK(oracle::rel_err(rep.first_deviation, 2.0) < 1e-8);
  for (const auto& [delta, m] : rep.modulus) CHECK(m == doctest::Approx(2.0 * delta).epsilon(1e-8));
}

TEST_CASE("ball control on a straight line") {
  const auto sys = benchmark_system();
  const auto path = Polyline::straight(v1(0.0), v1(1.0), 2.0);
  const auto u = control_for_path(path, sys, gauss());
  CHECK(u.kind() == ControlKind::BallIndicator);
  // P(s) = 1/2 + s/2 along Phi(s) = s/2
  const double want = oracle::simpson([](double s) { return ball_rate(0.5 + 0.5 * s); }, 0.0, 2.0, 200);
  CHECK(oracle::rel_err(entropy(u), want) < 1e-6);
  const auto hit = solve_controlled_ode(u, sys, v1(0.0), 1e-3);
  CHECK(std::abs(hit.terminal(0) - 1.0) < 1e-6);
}

TEST_CASE("ball straight-line reference value") {
  const auto sys = benchmark_system();
  const auto u = control_for_path(Polyline::straight(v1(0.0), v1(1.0), 1.0), sys, gauss());
  const double want = oracle::simpson([](double s) { return ball_rate(1.0 + s); }, 0.0, 1.0, 200);
  CHECK(oracle::rel_err(entropy(u), want) < 1e-6);
}

TEST_CASE("a path following the flow costs nothing") {
  const auto sys = benchmark_system();
  Polyline p;
  for (int k = 0; k <= 1; ++k) {
    p.times.push_back(k);
    p.knots.push_back(v1(0.0));
  }
  const auto u = control_for_path(p, sys, gauss());
  CHECK(entropy(u) == 0.0);
}

TEST_CASE("constructive controllability on short hops") {
  const auto sys = benchmark_system();
  Rng rng(17);
  double prev = 0.0;
  for (double h : {0.05, 0.1, 0.2, 0.4}) {
    const auto u = control_for_path(Polyline::straight(v1(0.3), v1(0.3 + h), h), sys, gauss());
    const auto hit = solve_controlled_ode(u, sys, v1(0.3), 1e-3);
    CHECK(std::abs(hit.terminal(0) - 0.3 - h) < 1e-4);
    const double e = entropy(u);
    CHECK(e >= prev - 1e-6);
    prev = e;
  }
}

TEST_CASE("grid control hits its knots and matches the prescribed drift") {
  const auto sys = benchmark_system();
  Polyline p;
  p.times = {0.0, 0.7, 1.5};
  p.knots = {v1(0.0), v1(0.5), v1(0.9)};
  auto part = MarkPartition::build(gauss(), 16);
  const auto u = grid_control_for_path(p, sys, gauss(), part);
  CHECK(u.kind() == ControlKind::GridTilt);
  const auto hit = solve_controlled_ode(u, sys, v1(0.0), 1e-3);
  CHECK(std::abs(hit.terminal(0) - 0.9) < 1e-4);
  CHECK(entropy(u) > 0.0);
  CHECK(entropy(u) < entropy(control_for_path(p, sys, gauss())));
}

TEST_CASE("exponential levels realize the requested drift") {
  auto part = MarkPartition::build(gauss(), 16);
  const Vec w = v1(0.4);
  const auto g = exponential_levels(*part, w);
  double drift = 0.0;
  for (int j = 0; j < part->size(); ++j) drift += (g[j] - 1.0) * part->first[j](0);
  CHECK(drift == doctest::Approx(0.4).epsilon(1e-8));
}

TEST_CASE("serialization round-trips every kind") {
  const auto sys = benchmark_system();
  Polyline p;
  p.times = {0.0, 0.7, 1.5};
  p.knots = {v1(0.0), v1(0.5), v1(0.9)};
  auto part = MarkPartition::build(gauss(), 8);
  const std::vector<Control> controls = {
      Control::identity(gauss(), 1.0), Control::constant_tilt(gauss(), 2.0, 1.5),
      control_for_path(p, sys, gauss()), grid_control_for_path(p, sys, gauss(), part)};
  for (const auto& u : controls) {
    std::map<std::string, std::string> kv;
    for (const auto& [k, v] : serialize_control(u)) kv[k] = v;
    const auto back = deserialize_control(kv, sys, gauss());
    CHECK(back.kind() == u.kind());
    CHECK(std::abs(entropy(back) - entropy(u)) <= 1e-10 * (1.0 + entropy(u)));
  }
}

TEST_CASE("concatenation adds entropies") {
  const auto a = Control::constant_tilt(gauss(), 2.0, 1.0);
  const auto sys = benchmark_system();
  const auto b1 = control_for_path(Polyline::straight(v1(0.0), v1(0.5), 1.0), sys, gauss());
  const auto b2 = control_for_path(Polyline::straight(v1(0.5), v1(0.9), 0.5), sys, gauss());
  const auto ab = concatenate(b1, b2);
  CHECK(ab.horizon() == doctest::Approx(1.5));
  CHECK(entropy(ab) == doctest::Approx(entropy(b1) + entropy(b2)).epsilon(1e-8));
  CHECK_THROWS_AS(concatenate(a, b1), ConfigError);
}

TEST_CASE("controlled ODE under identity is the flow") {
  const auto sys = benchmark_system();
  const auto hit = solve_controlled_ode(Control::identity(gauss(), 1.0), sys, v1(0.6), 1e-3);
  CHECK(hit.terminal(0) == doctest::Approx(0.6 * std::exp(-1.0)).epsilon(1e-10));
}

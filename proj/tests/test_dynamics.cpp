#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "kramers/dynamics.hpp"
#include "kramers/noise.hpp"
#include "kramers/statistics.hpp"

using namespace kramers;

namespace {

SystemSpec free_system() {
  SystemSpec s;
  s.dimension = 1;
  s.drift = [](const Vec&, Vec& out) { out.setZero(); };
  s.G = constant_G(1.0);
  s.c1 = 0.0;
  s.drift_name = "zero";
  return s;
}

}  // namespace

TEST_CASE("deterministic flow of the linear benchmark decays exponentially") {
  const auto sys = benchmark_system();
  const auto flow = flow_deterministic(sys, Vec::Constant(1, 0.8), 2.0, 0.01);
  CHECK(flow.states.back()(0) == doctest::Approx(0.8 * std::exp(-2.0)).epsilon(1e-9));
}

TEST_CASE("hypothesis probes accept the benchmark and reject a repelling drift") {
  Rng rng(1);
  CHECK(check_hypotheses(benchmark_system(), rng).ok());
  auto bad = benchmark_system();
  bad.drift = [](const Vec& x, Vec& out) { out = x; };
  const auto rep = check_hypotheses(bad, rng);
  CHECK_FALSE(rep.coercive);
  CHECK_FALSE(rep.inward_pointing);
}

TEST_CASE("noise isometry for the free particle") {
  const auto sys = free_system();
  const auto nu = LevyMeasure::exponential_light(1, 2.0);
  const double eps = 0.2;
  std::vector<double> x;
  for (int i = 0; i < 4000; ++i) {
    Rng rng(derive_seed(99, i));
    x.push_back(simulate_sde(sys, nu, Vec::Zero(1), eps, 1.0, rng, {0.01}).terminal_state(0));
  }
  const double var = variance(x);
  CHECK(std::abs(mean(x)) < 3.0 * std::sqrt(var / x.size()));
  CHECK(var == doctest::Approx(eps * std::sqrt(std::numbers::pi) / 2.0).epsilon(0.08));
}

TEST_CASE("jumps are applied as eps G(X-) z and the flow between them is exact") {
  auto sys = benchmark_system(-10.0, 10.0);
  sys.G = affine_clamped_G(1.0, 0.5, 0.1);
  const auto nu = LevyMeasure::exponential_light(1, 2.0);
  const std::vector<JumpRecord> jumps = {{0.3, Vec::Constant(1, 1.0)}, {0.9, Vec::Constant(1, -0.5)}};
  const double eps = 0.5;
  const auto traj = simulate_sde(sys, nu, Vec::Constant(1, 0.2), eps, 1.5, jumps, {1e-3});
  REQUIRE(traj.breakpoints.size() == 4);
  // symmetric measure: no compensator drift, so between jumps x' = -x
  double x = 0.2 * std::exp(-0.3);
  CHECK(traj.breakpoints[1].before(0) == doctest::Approx(x).epsilon(1e-10));
  x += eps * (1.0 + 0.5 * x) * 1.0;
  CHECK(traj.breakpoints[1].after(0) == doctest::Approx(x).epsilon(1e-10));
  x *= std::exp(-0.6);
  x += eps * (1.0 + 0.5 * x) * -0.5;
  CHECK(traj.breakpoints[2].after(0) == doctest::Approx(x).epsilon(1e-9));
  CHECK(traj.terminal_state(0) == doctest::Approx(x * std::exp(-0.6)).epsilon(1e-9));
}

TEST_CASE("compensator drift enters between jumps for an asymmetric measure") {
  auto sys = free_system();
  const auto nu = LevyMeasure::compact_support(1, 0.5, 1.0, Vec::Constant(1, 0.5));
  const double m1 = nu.first_moment()(0);
  CHECK(m1 == doctest::Approx(0.5).epsilon(1e-9));
  const auto traj = simulate_sde(sys, nu, Vec::Zero(1), 0.1, 2.0, std::vector<JumpRecord>{}, {1e-3});
  CHECK(traj.terminal_state(0) == doctest::Approx(-2.0 * m1).epsilon(1e-9));
}

TEST_CASE("first exit is located on the boundary crossing") {
  const auto sys = benchmark_system();
  const auto nu = LevyMeasure::exponential_light(1, 2.0);
  Rng rng(3);
  const auto ex = first_exit(sys, nu, Vec::Zero(1), 0.5, rng, 1e4, {0.01});
  CHECK_FALSE(ex.timeout);
  CHECK(std::abs(ex.point(0)) >= 1.0);
  Rng a(44), b(44);
  const auto e1 = first_exit(sys, nu, Vec::Zero(1), 0.4, a, 1e4, {0.01});
  const auto e2 = first_exit(sys, nu, Vec::Zero(1), 0.4, b, 1e4, {0.01});
  CHECK(e1.time == e2.time);
  CHECK(e1.point(0) == e2.point(0));
}

TEST_CASE("timeouts are reported at the cap") {
  const auto sys = benchmark_system();
  const auto nu = LevyMeasure::exponential_light(1, 2.0);
  Rng rng(3);
  const auto ex = first_exit(sys, nu, Vec::Zero(1), 0.05, rng, 2.0, {0.01});
  CHECK(ex.timeout);
  CHECK(ex.time == doctest::Approx(2.0));
}

TEST_CASE("trajectory dump has one row per breakpoint") {
  const auto sys = benchmark_system();
  const auto nu = LevyMeasure::exponential_light(1, 2.0);
  Rng rng(6);
  const auto traj = simulate_sde(sys, nu, Vec::Zero(1), 0.3, 1.0, rng, {0.01});
  std::ostringstream out;
  write_trajectory_csv(out, traj);
  const std::string s = out.str();
  CHECK(s.rfind("time,pre_1,post_1,jump\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')) == traj.breakpoints.size() + 1);
  CHECK(s.find('\r') == std::string::npos);
}

#include <doctest.h>

#include <cmath>
#include <map>

#include "kramers/errors.hpp"
#include "kramers/optimize.hpp"
#include "kramers/quasipotential.hpp"

using namespace kramers;

namespace {

const LevyMeasure& gauss() {
  static const auto nu = LevyMeasure::exponential_light(1, 2.0);
  return nu;
}

Vec v1(double x) { return Vec::Constant(1, x); }

QuasiPotentialOptions small(PathFamily family) {
  QuasiPotentialOptions o;
  o.family = family;
  o.restarts = 1;
  o.max_knots = 2;
  o.nm_max_evals = 300;
  o.horizons = {1.0, 2.0, 4.0};
  o.golden_steps = 2;
  return o;
}

}  // namespace

TEST_CASE("Nelder-Mead and golden section") {
  auto rosen = [](const Vec& x) { return 100 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1 - x(0), 2); };
  NelderMeadOptions o;
  o.max_evals = 20000;
  o.ftol = 1e-14;
  o.xtol = 1e-12;
  const auto r = nelder_mead(rosen, Vec::Constant(2, -1.0), Vec::Constant(2, 0.5), o);
  CHECK(r.f < 1e-8);
  const auto [x, f] = golden_section([](double t) { return (t - 0.3) * (t - 0.3) + 1.0; }, -1.0, 2.0, 1e-10);
  CHECK(x == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(f == doctest::Approx(1.0));
}

TEST_CASE("transfer cost agrees with a two-knot brute force") {
  const auto sys = benchmark_system();
  const Vec x = v1(0.0), y = v1(0.8);
  double best = kInfinite;
  for (int i = 1; i < 24; ++i) {
    for (int j = 1; j < 24; ++j) {
      Polyline p;
      p.times = {0.0, j / 24.0, 1.0};
      p.knots = {x, v1(-0.2 + 1.4 * i / 24.0), y};
      try {
        best = std::min(best, entropy(control_for_path(p, sys, gauss())));
      } catch (const SupportViolation&) {
        // ball pushed into the numerically empty tail: not admissible
      }
    }
  }
  const auto res = transfer_cost(x, y, 1.0, sys, gauss(), small(PathFamily::Ball));
  REQUIRE(res.feasible);
  CHECK(res.family == "ball");
  CHECK(std::abs(res.value - best) <= 0.05 * best);
  CHECK(res.endpoint_error <= 1e-4);
}

TEST_CASE("transfer cost certificate round trip") {
  const auto sys = benchmark_system();
  const auto res = transfer_cost(v1(0.0), v1(0.7), 1.5, sys, gauss(), small(PathFamily::Both));
  REQUIRE(res.control);
  const auto cert = verify_certificate(res, sys);
  CHECK(cert.ok);
  CHECK(std::abs(cert.entropy - res.value) <= 1e-10 * (1.0 + res.value));
  std::map<std::string, std::string> kv;
  for (const auto& [k, v] : serialize_result(res)) kv[k] = v;
  const auto back = deserialize_control(kv, sys, gauss(), "result.control");
  CHECK(std::abs(entropy(back) - res.value) <= 1e-10 * (1.0 + res.value));
  CHECK(res.value <= res.ball_value + 1e-12);
  CHECK(res.value <= res.grid_value + 1e-12);
}

TEST_CASE("mirror-symmetric problems give identical values") {
  const auto sys = benchmark_system();
  const auto o = small(PathFamily::Grid);
  const auto a = transfer_cost(v1(0.0), v1(0.6), 1.0, sys, gauss(), o);
  const auto b = transfer_cost(v1(0.0), v1(-0.6), 1.0, sys, gauss(), o);
  CHECK(std::abs(a.value - b.value) <= 1e-9 * a.value);
}

TEST_CASE("a larger budget never does worse") {
  const auto sys = benchmark_system();
  auto o = small(PathFamily::Grid);
  const auto a = transfer_cost(v1(0.0), v1(0.9), 2.0, sys, gauss(), o);
  o.restarts = 2;
  o.max_knots = 4;
  const auto b = transfer_cost(v1(0.0), v1(0.9), 2.0, sys, gauss(), o);
  CHECK(b.value <= a.value + 1e-12);
  CHECK(b.restarts == 2);
}

TEST_CASE("downhill targets are reached by the flow at zero cost") {
  const auto res = quasipotential_point(v1(0.5), v1(0.2), benchmark_system(), gauss(), small(PathFamily::Both));
  CHECK(res.value == 0.0);
  CHECK(res.family == "flow");
}

TEST_CASE("barrier height of the symmetric benchmark has a symmetric pair") {
  const auto res = barrier_height(benchmark_system(), gauss(), small(PathFamily::Grid));
  REQUIRE(res.feasible);
  CHECK(res.argmin_set.size() == 2);
  CHECK(res.value > 0.9);
  CHECK(res.value < 1.1);
  CHECK_FALSE(res.trace.empty());
  CHECK(verify_certificate(res, benchmark_system()).ok);
}

TEST_CASE("the barrier needs a bounded domain") {
  auto sys = benchmark_system();
  sys.domain = Domain::whole(1);
  CHECK_THROWS_AS(barrier_height(sys, gauss(), small(PathFamily::Grid)), ConfigError);
}

TEST_CASE("continuity probe shrinks with rho") {
  auto o = small(PathFamily::Both);
  o.horizons = {1.0};
  const auto rows = continuity_probe({0.4, 0.2, 0.1, 0.05}, benchmark_system(), gauss(), o, 2);
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].value <= rows[i - 1].value + 1e-6);
  for (const auto& r : rows) CHECK(r.value <= r.bound + 1e-9);
  CHECK(rows.back().value < 0.1 * rows.front().value + 1e-3);
}

TEST_CASE("scaling the domain raises the barrier") {
  const auto o = small(PathFamily::Grid);
  const auto a = barrier_height(benchmark_system(-1.0, 1.0), gauss(), o);
  const auto b = barrier_height(benchmark_system(-1.5, 1.5), gauss(), o);
  CHECK(b.value > a.value);
}

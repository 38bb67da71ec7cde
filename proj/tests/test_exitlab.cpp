#include <doctest.h>

#include <cmath>

#include "kramers/exitlab.hpp"

using namespace kramers;

namespace {

ExitExperiment small_experiment() {
  ExitExperiment e(benchmark_system(), LevyMeasure::exponential_light(1, 2.0));
  e.epsilons = {0.5, 0.4};
  e.paths = 300;
  e.sim.dt = 0.01;
  e.bootstrap = 200;
  e.seed = 5;
  return e;
}

BarrierInfo pair_barrier() {
  BarrierInfo b;
  b.vbar = 0.93;
  b.argmin = {Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)};
  b.unique = false;
  return b;
}

}  // namespace

TEST_CASE("experiment validation") {
  auto e = small_experiment();
  e.epsilons = {0.2, 0.3};
  CHECK_THROWS(e.validate());
  e = small_experiment();
  e.paths = 10;
  CHECK_THROWS(e.validate());
}

TEST_CASE("exit MC report is consistent and independent of workers") {
  auto e = small_experiment();
  const auto a = run_exit_mc(e, pair_barrier());
  e.workers = 3;
  const auto b = run_exit_mc(e, pair_barrier());
  REQUIRE(a.rows.size() == 2);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].mean.estimate == b.rows[i].mean.estimate);
    CHECK(a.rows[i].window.estimate == b.rows[i].window.estimate);
    CHECK(a.rows[i].mean.lo < a.rows[i].mean.estimate);
    CHECK(a.rows[i].eps_log_mean == doctest::Approx(a.rows[i].epsilon * std::log(a.rows[i].mean.estimate)));
  }
  CHECK(a.rows[1].mean.estimate > a.rows[0].mean.estimate);
  CHECK(a.concentration_label == "symmetric-pair");
  // symmetric pair: both endpoints collect all exits
  CHECK(a.rows[0].concentration.estimate > 0.5);
}

TEST_CASE("tiny caps flag the mean as invalid") {
  auto e = small_experiment();
  e.t_cap = 0.5;
  const auto r = run_exit_mc(e, pair_barrier());
  CHECK(r.invalid_for_mean);
  CHECK(std::find(r.flags.begin(), r.flags.end(), "INVALID-FOR-MEAN") != r.flags.end());
}

TEST_CASE("cycle attempts look geometric") {
  auto e = small_experiment();
  e.epsilons = {0.4};
  const auto rows = cycle_diagnostic(e, 0.1, 0.5, 1e4);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].q_hat > 0.0);
  CHECK(rows[0].q_hat < 1.0);
  CHECK(rows[0].geometric_ok);
  CHECK(rows[0].wald_ok);
}

TEST_CASE("identity tilt IS equals direct MC; constant tilt agrees") {
  auto e = small_experiment();
  e.epsilons = {0.4};
  e.paths = 1000;
  const auto& nu = e.measure;
  const auto id = importance_sampled_exit(e, Control::identity(nu, 2.0), 2.0);
  CHECK(id[0].weighted == id[0].direct);
  const auto c = importance_sampled_exit(e, Control::constant_tilt(nu, 1.5, 2.0), 2.0);
  CHECK(c[0].agree);
  CHECK(c[0].ess > 50);
}

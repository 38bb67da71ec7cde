#include <doctest.h>

#include <cmath>

#include "kramers/random.hpp"
#include "kramers/statistics.hpp"

using namespace kramers;

TEST_CASE("moments and median") {
  const std::vector<double> x = {3, 1, 4, 1, 5};
  CHECK(mean(x) == doctest::Approx(2.8));
  CHECK(variance(x) == doctest::Approx(3.2));
  CHECK(median(x) == 3.0);
  CHECK(median({1, 2, 3, 4}) == 2.5);
}

TEST_CASE("Spearman uses average ranks") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 2, 3}, {1, 1, 2}) == doctest::Approx(std::sqrt(3.0) / 2.0));
}

TEST_CASE("linear fit") {
  const auto f = linear_fit({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r2 == doctest::Approx(1.0));
}

TEST_CASE("bootstrap interval covers the mean") {
  Rng rng(1);
  std::vector<double> x(500);
  for (auto& v : x) v = rng.exponential(1.0);
  Rng boot(2);
  const auto ci = bootstrap_ci(x, mean, boot, 1000);
  CHECK(ci.lo < ci.estimate);
  CHECK(ci.estimate < ci.hi);
  CHECK(ci.lo < 1.0);
  CHECK(ci.hi > 1.0);
}

TEST_CASE("chi-square accepts geometric counts and rejects a shifted law") {
  Rng rng(3);
  const double q = 0.3;
  std::vector<int> geo, shifted;
  for (int i = 0; i < 3000; ++i) {
    int k = 1;
    while (rng.uniform() >= q) ++k;
    geo.push_back(k);
    shifted.push_back(k + 2);
  }
  CHECK(chi_square_geometric(geo, q).p_value > 0.01);
  CHECK(chi_square_geometric(shifted, q).p_value < 1e-6);
}

TEST_CASE("KS test") {
  Rng rng(4);
  std::vector<double> u(2000);
  for (auto& v : u) v = rng.uniform();
  CHECK(ks_test(u, [](double x) { return std::clamp(x, 0.0, 1.0); }).p_value > 0.01);
  CHECK(ks_test(u, [](double x) { return std::clamp(x * x, 0.0, 1.0); }).p_value < 1e-6);
}

TEST_CASE("effective sample size") {
  CHECK(effective_sample_size({1, 1, 1, 1}) == doctest::Approx(4.0));
  CHECK(effective_sample_size({1, 0, 0, 0}) == doctest::Approx(1.0));
}

TEST_CASE("monotone within CI") {
  CHECK(nondecreasing_within_ci({{0.5, 0.4, 0.6}, {0.45, 0.4, 0.5}, {0.7, 0.6, 0.8}}));
  CHECK_FALSE(nondecreasing_within_ci({{0.9, 0.85, 0.95}, {0.5, 0.4, 0.6}}));
}

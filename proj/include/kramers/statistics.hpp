#pragma once

#include <functional>
#include <vector>

#include "kramers/random.hpp"

namespace kramers {

double mean(const std::vector<double>& x);
/// Unbiased sample variance.
double variance(const std::vector<double>& x);
double median(std::vector<double> x);

struct Interval {
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

using Statistic = std::function<double(const std::vector<double>&)>;

/// Percentile bootstrap: resamples the sample with replacement.
Interval bootstrap_ci(const std::vector<double>& sample, const Statistic& stat, Rng& rng, int resamples = 1000,
                      double level = 0.95);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

struct ChiSquare {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Goodness of fit of counts on {1, 2, ...} to geometric(q); cells are merged
/// from the right until every expected count is at least 5.
ChiSquare chi_square_geometric(const std::vector<int>& samples, double q);

/// Kolmogorov-Smirnov distance of a sample to a continuous cdf and its
/// asymptotic p-value.
struct KsTest {
  double statistic = 0.0;
  double p_value = 1.0;
};
KsTest ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);

/// Kish effective sample size (sum w)^2 / sum w^2.
double effective_sample_size(const std::vector<double>& weights);

/// True when every later interval reaches the previous one:
/// hi[i + 1] >= lo[i].
bool nondecreasing_within_ci(const std::vector<Interval>& seq);

}  // namespace kramers

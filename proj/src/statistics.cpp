#include "kramers/statistics.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numeric>

#include "kramers/errors.hpp"

namespace kramers {

double mean(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double median(std::vector<double> x) {
  if (x.empty()) return 0.0;
  const std::size_t mid = x.size() / 2;
  std::nth_element(x.begin(), x.begin() + mid, x.end());
  const double upper = x[mid];
  if (x.size() % 2 == 1) return upper;
  return 0.5 * (upper + *std::max_element(x.begin(), x.begin() + mid));
}

Interval bootstrap_ci(const std::vector<double>& sample, const Statistic& stat, Rng& rng, int resamples,
                      double level) {
  if (sample.empty()) throw ConfigError("bootstrap needs a nonempty sample");
  if (resamples < 1) throw ConfigError("bootstrap needs at least one resample");
  Interval out;
  out.estimate = stat(sample);
  std::vector<double> stats(resamples);
  std::vector<double> draw(sample.size());
  for (int b = 0; b < resamples; ++b) {
    for (auto& v : draw) v = sample[rng.index(sample.size())];
    stats[b] = stat(draw);
  }
  std::sort(stats.begin(), stats.end());
  const double alpha = 0.5 * (1.0 - level);
  auto quantile = [&](double p) {
    const double pos = p * (resamples - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const std::size_t j = std::min(i + 1, stats.size() - 1);
    return stats[i] + (pos - i) * (stats[j] - stats[i]);
  };
  out.lo = quantile(alpha);
  out.hi = quantile(1.0 - alpha);
  return out;
}

namespace {

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("spearman needs two equal samples of size >= 2");
  return pearson(ranks(x), ranks(y));
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("linear fit needs two equal samples of size >= 2");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  LinearFit fit;
  if (sxx == 0.0) throw ConfigError("linear fit needs distinct abscissae");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const double r = pearson(x, y);
  fit.r2 = r * r;
  return fit;
}

ChiSquare chi_square_geometric(const std::vector<int>& samples, double q) {
  if (samples.empty()) throw ConfigError("chi-square needs samples");
  if (!(q > 0.0 && q <= 1.0)) throw ConfigError("geometric parameter must lie in (0, 1]");
  const double n = static_cast<double>(samples.size());
  int kmax = 1;
  for (int s : samples) {
    if (s < 1) throw ConfigError("geometric samples start at 1");
    kmax = std::max(kmax, s);
  }
  // Cells 1..m-1 exact, cell m collects {k >= m}.
  std::vector<double> observed;
  std::vector<double> expected;
  double tail_prob = 1.0;
  int k = 1;
  for (;; ++k) {
    const double p = q * std::pow(1.0 - q, k - 1);
    const double rest = tail_prob - p;
    if (n * p < 5.0 || n * rest < 5.0) break;
    expected.push_back(n * p);
    observed.push_back(static_cast<double>(std::count(samples.begin(), samples.end(), k)));
    tail_prob = rest;
  }
  expected.push_back(n * tail_prob);
  observed.push_back(static_cast<double>(std::count_if(samples.begin(), samples.end(), [k](int s) { return s >= k; })));
  ChiSquare out;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] > 0.0) out.statistic += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
  }
  // One parameter estimated from the data.
  out.dof = static_cast<int>(observed.size()) - 2;
  if (out.dof < 1) {
    out.dof = 0;
    out.p_value = 1.0;
    return out;
  }
  boost::math::chi_squared dist(out.dof);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

KsTest ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw ConfigError("KS test needs samples");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  KsTest out;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double F = cdf(sample[i]);
    out.statistic = std::max({out.statistic, F - i / n, (i + 1) / n - F});
  }
  // Asymptotic Kolmogorov tail with Stephens' small-sample correction.
  const double sn = std::sqrt(n);
  const double lambda = (sn + 0.12 + 0.11 / sn) * out.statistic;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    p += term;
    if (std::abs(term) < 1e-12) break;
  }
  out.p_value = std::clamp(p, 0.0, 1.0);
  if (lambda < 0.2) out.p_value = 1.0;
  return out;
}

double effective_sample_size(const std::vector<double>& w) {
  double s1 = 0.0;
  double s2 = 0.0;
  for (double v : w) {
    s1 += v;
    s2 += v * v;
  }
  return s2 > 0.0 ? s1 * s1 / s2 : 0.0;
}

bool nondecreasing_within_ci(const std::vector<Interval>& seq) {
  for (std::size_t i = 1; i < seq.size(); ++i) {
    if (seq[i].hi < seq[i - 1].lo) return false;
  }
  return true;
}

}  // namespace kramers

#include "kramers/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace kramers {

namespace {

double safe(const Objective& f, const Vec& x, int& evals) {
  ++evals;
  const double v = f(x);
  return std::isfinite(v) ? v : kInfinite;
}

}  // namespace

OptimResult nelder_mead(const Objective& f, const Vec& x0, const Vec& steps, const NelderMeadOptions& opts) {
  const int n = static_cast<int>(x0.size());
  OptimResult res;
  if (n == 0) {
    res.x = x0;
    res.f = safe(f, x0, res.evals);
    return res;
  }
  std::vector<Vec> simplex(n + 1, x0);
  std::vector<double> values(n + 1);
  for (int i = 0; i < n; ++i) simplex[i + 1](i) += steps(i);
  for (int i = 0; i <= n; ++i) values[i] = safe(f, simplex[i], res.evals);

  std::vector<int> order(n + 1);
  Vec centroid(n);
  while (res.evals < opts.max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return values[a] < values[b]; });
    const int best = order.front();
    const int worst = order.back();
    const int second = order[n - 1];
    const double spread = values[worst] - values[best];
    double size = 0.0;
    for (int i = 0; i <= n; ++i) size = std::max(size, (simplex[i] - simplex[best]).cwiseAbs().maxCoeff());
    if (std::isfinite(spread) && spread <= opts.ftol * (std::abs(values[best]) + 1e-12) && size <= 1e3 * opts.xtol) break;
    if (size <= opts.xtol) break;
    ++res.iterations;

    centroid.setZero();
    for (int i = 0; i <= n; ++i) {
      if (i != worst) centroid += simplex[i];
    }
    centroid /= n;
    const Vec reflected = centroid + (centroid - simplex[worst]);
    const double fr = safe(f, reflected, res.evals);
    if (fr < values[best]) {
      const Vec expanded = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = safe(f, expanded, res.evals);
      if (fe < fr) {
        simplex[worst] = expanded;
        values[worst] = fe;
      } else {
        simplex[worst] = reflected;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = reflected;
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < values[worst];
    const Vec contracted = outside ? Vec(centroid + 0.5 * (reflected - centroid))
                                   : Vec(centroid + 0.5 * (simplex[worst] - centroid));
    const double fc = safe(f, contracted, res.evals);
    if (fc < std::min(fr, values[worst])) {
      simplex[worst] = contracted;
      values[worst] = fc;
      continue;
    }
    for (int i = 0; i <= n; ++i) {
      if (i == best) continue;
      simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
      values[i] = safe(f, simplex[i], res.evals);
    }
  }
  const auto it = std::min_element(values.begin(), values.end());
  res.x = simplex[static_cast<std::size_t>(it - values.begin())];
  res.f = *it;
  return res;
}

std::pair<double, double> golden_section(const std::function<double(double)>& f, double a, double b, double tol,
                                         int max_iter) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  double fc = f(c);
  double fd = f(d);
  if (!std::isfinite(fc)) fc = kInfinite;
  if (!std::isfinite(fd)) fd = kInfinite;
  for (int i = 0; i < max_iter && b - a > tol; ++i) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
      if (!std::isfinite(fc)) fc = kInfinite;
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
      if (!std::isfinite(fd)) fd = kInfinite;
    }
  }
  return fc <= fd ? std::make_pair(c, fc) : std::make_pair(d, fd);
}

OptimResult coordinate_refine(const Objective& f, OptimResult start, const Vec& steps, int rounds, double tol) {
  OptimResult res = std::move(start);
  Vec x = res.x;
  for (int round = 0; round < rounds; ++round) {
    const double before = res.f;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double center = res.x(i);
      auto line = [&](double v) {
        x = res.x;
        x(i) = v;
        return safe(f, x, res.evals);
      };
      const auto [v, fv] = golden_section(line, center - steps(i), center + steps(i), tol * (1.0 + std::abs(center)), 40);
      if (fv < res.f) {
        res.x(i) = v;
        res.f = fv;
      }
    }
    if (!(before - res.f > 1e-12 * (1.0 + std::abs(res.f)))) break;
  }
  return res;
}

}  // namespace kramers

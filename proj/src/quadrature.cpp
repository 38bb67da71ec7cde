#include "kramers/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>

#include "kramers/errors.hpp"

namespace kramers {

namespace {

constexpr double kDivergence = 1e12;

}  // namespace

const double GaussLegendre8::nodes[kOrder] = {
    0.019855071751231912, 0.10166676129318664, 0.2372337950418355, 0.40828267875217511,
    0.59171732124782483,  0.7627662049581645,  0.89833323870681336, 0.98014492824876809};
const double GaussLegendre8::weights[kOrder] = {
    0.050614268145188344, 0.11119051722668717, 0.15685332293894352, 0.18134189168918088,
    0.18134189168918088,  0.15685332293894352, 0.11119051722668717, 0.050614268145188344};

double integrate(const ScalarFn& f, double a, double b, const QuadratureOptions& opts) {
  if (a == b) return 0.0;
  if (b < a) return -integrate(f, b, a, opts);
  double error = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, opts.max_depth, opts.rel_tol, &error, &l1);
  if (!std::isfinite(value)) throw NumericalError("quadrature produced a non-finite value");
  return value;
}

double integrate_left_singular(const ScalarFn& f, double a, double b, double power,
                               const QuadratureOptions& opts) {
  if (b <= a) return 0.0;
  if (power <= 0.0) return integrate(f, a, b, opts);
  if (power >= 1.0) throw DomainError("non-integrable endpoint singularity");
  const double m = 1.0 / (1.0 - power);
  const double width = b - a;
  auto g = [&](double v) {
    if (v <= 0.0) return 0.0;
    const double vm1 = std::pow(v, m - 1.0);
    return f(a + width * vm1 * v) * width * m * vm1;
  };
  return integrate(g, 0.0, 1.0, opts);
}

double integrate_tail_or_diverge(const ScalarFn& f, double a, const QuadratureOptions& opts) {
  double sum = 0.0;
  double left = a;
  double length = 1.0;
  int quiet = 0;
  for (int piece = 0; piece < 200; ++piece) {
    const double right = left + length;
    double part = 0.0;
    try {
      part = integrate(f, left, right, opts);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
    sum += part;
    if (!std::isfinite(sum) || std::abs(sum) > kDivergence) {
      return std::numeric_limits<double>::infinity();
    }
    if (std::abs(part) <= opts.abs_tol * 1e-2 + 1e-14 * std::abs(sum)) {
      if (++quiet >= 2) return sum;
    } else {
      quiet = 0;
    }
    left = right;
    length *= 2.0;
  }
  throw NumericalError("tail integral neither converged nor diverged");
}

}  // namespace kramers

#pragma once

#include <functional>

namespace kramers {

struct QuadratureOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  unsigned max_depth = 20;
};

using ScalarFn = std::function<double(double)>;

/// Adaptive Gauss-Kronrod (7/15) on [a, b]; b may be +infinity.
double integrate(const ScalarFn& f, double a, double b, const QuadratureOptions& opts = {});

/// Integral of f over [a, b] for an integrand with an integrable power
/// singularity ~ (r - a)^(-power) at the left endpoint, power < 1. A power
/// substitution removes the singularity before the adaptive rule runs.
double integrate_left_singular(const ScalarFn& f, double a, double b, double power,
                               const QuadratureOptions& opts = {});

/// Integral over [a, inf) accumulated on doubling intervals. Returns +infinity
/// once the running sum exceeds 1e12 (the divergence threshold).
double integrate_tail_or_diverge(const ScalarFn& f, double a, const QuadratureOptions& opts = {});

/// Gauss-Legendre nodes/weights of order 8 on [0, 1].
struct GaussLegendre8 {
  static constexpr int kOrder = 8;
  static const double nodes[kOrder];
  static const double weights[kOrder];
};

}  // namespace kramers

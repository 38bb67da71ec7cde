#pragma once

#include <cmath>

#include "kramers/errors.hpp"
#include "kramers/measures.hpp"

namespace kramers {

/// Classical fourth-order Runge-Kutta step with preallocated stages.
/// `Field` is callable as f(t, x, out) and must not resize `out`.
class Rk4 {
 public:
  explicit Rk4(int dimension)
      : k1_(dimension), k2_(dimension), k3_(dimension), k4_(dimension), tmp_(dimension) {}

  template <class Field>
  void step(const Field& f, double t, double h, Vec& x) {
    f(t, x, k1_);
    tmp_.noalias() = x + 0.5 * h * k1_;
    f(t + 0.5 * h, tmp_, k2_);
    tmp_.noalias() = x + 0.5 * h * k2_;
    f(t + 0.5 * h, tmp_, k3_);
    tmp_.noalias() = x + h * k3_;
    f(t + h, tmp_, k4_);
    x.noalias() += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
    if (!x.allFinite()) throw NumericalError("non-finite state in ODE integration");
  }

  /// Integrates from t0 to t1 with steps no larger than h_max.
  template <class Field>
  void advance(const Field& f, double t0, double t1, double h_max, Vec& x) {
    if (!(t1 > t0)) return;
    const int n = std::max(1, static_cast<int>(std::ceil((t1 - t0) / h_max - 1e-12)));
    const double h = (t1 - t0) / n;
    for (int i = 0; i < n; ++i) step(f, t0 + i * h, h, x);
  }

 private:
  Vec k1_, k2_, k3_, k4_, tmp_;
};

}  // namespace kramers

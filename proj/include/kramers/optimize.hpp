#pragma once

#include <functional>

#include "kramers/measures.hpp"

namespace kramers {

using Objective = std::function<double(const Vec&)>;

struct NelderMeadOptions {
  int max_evals = 4000;
  /// Stop when the simplex value spread falls below ftol * (|f_best| + 1e-12).
  double ftol = 1e-9;
  double xtol = 1e-9;
};

struct OptimResult {
  Vec x;
  double f = kInfinite;
  int evals = 0;
  int iterations = 0;
};

/// Downhill simplex with the standard reflection/expansion/contraction/shrink
/// coefficients; non-finite values are treated as +infinity.
OptimResult nelder_mead(const Objective& f, const Vec& x0, const Vec& steps, const NelderMeadOptions& opts = {});

/// Golden-section minimization of a scalar function on [a, b].
std::pair<double, double> golden_section(const std::function<double(double)>& f, double a, double b, double tol,
                                         int max_iter = 60);

/// Cyclic coordinate refinement: golden section along each axis within
/// +-step, repeated `rounds` times; never increases the value.
OptimResult coordinate_refine(const Objective& f, OptimResult start, const Vec& steps, int rounds, double tol);

}  // namespace kramers

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "xslu/tensor.hpp"

namespace xslu {

// scalar-valued function of several tensors, built on a tape
using ScalarFn =
    std::function<TensorPtr(Tape&, const std::vector<TensorPtr>&)>;

struct GradCheckFailure {
  std::size_t input;
  std::size_t coord;
  double analytic;
  double numeric;
  double rel_err;
};

struct GradCheckReport {
  bool pass = false;
  double max_rel_err = 0.0;
  std::size_t coords_checked = 0;
  std::vector<GradCheckFailure> failures;  // capped at 16
};

// Compares reverse-mode gradients of f against central finite differences
// (f(x+h) - f(x-h)) / 2h per coordinate. Relative error uses denominator
// max(|analytic|, |numeric|, 1e-8); pass iff the max over all coordinates is
// below tol and no NaN appeared on either side. h must lie in [1e-7, 1e-4].
GradCheckReport grad_check(const ScalarFn& f, const std::vector<TensorPtr>& inputs,
                           double h, double tol);

}  // namespace xslu

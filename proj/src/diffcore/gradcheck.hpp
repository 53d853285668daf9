// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

#include "diffcore/tensor.hpp"

namespace dg {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

// Compares the tape gradient of scalar f at x against central differences.
// Error per coordinate is |analytic - numeric| / max(1, |analytic|).
// x must require a gradient; its values are restored on return. A non-finite
// evaluation at any probe point throws NumericalError naming the coordinate.
GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x,
                           double epsilon = 1e-5);

}  // namespace dg

// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "diffcore/gradcheck.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "common/errors.hpp"

namespace dg {

GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x,
                           double epsilon) {
  if (!(epsilon > 0.0)) throw UsageError("grad_check: epsilon must be positive");
  if (!x.requires_grad()) throw UsageError("grad_check: probe tensor must require a gradient");

  x.zero_grad();
  {
    Tape tape;
    Tensor loss;
    {
      TapeScope scope(tape);
      loss = f(x);
    }
    if (loss.numel() != 1) throw ShapeError("grad_check: f must be scalar-valued");
    tape.backward(loss);
  }
  const std::vector<double> analytic(x.grad().begin(), x.grad().end());

  auto eval = [&](std::size_t i) {
    const double v = f(x).item();
    if (!std::isfinite(v)) {
      throw NumericalError("grad_check: f is non-finite when probing coordinate " +
                           std::to_string(i));
    }
    return v;
  };

  GradCheckResult result;
  auto xs = x.mutable_values();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double saved = xs[i];
    xs[i] = saved + epsilon;
    const double up = eval(i);
    xs[i] = saved - epsilon;
    const double down = eval(i);
    xs[i] = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
    if (i == 0 || err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_index = i;
      result.analytic_at_worst = analytic[i];
      result.numeric_at_worst = numeric;
    }
  }
  x.zero_grad();
  return result;
}

}  // namespace dg

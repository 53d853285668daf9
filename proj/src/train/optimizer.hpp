// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "diffcore/parameter.hpp"

namespace dg {

struct SgdOptions {
  double lr_fresh = 0.001;
  double lr_finetune = 0.0001;
  double momentum = 0.9;
  double clip_norm = 10.0;  // global gradient norm; 0 disables

  void validate() const;
  double lr(LrGroup group) const { return group == LrGroup::kFineTune ? lr_finetune : lr_fresh; }
};

struct StepReport {
  double grad_norm = 0.0;  // before clipping
  bool clipped = false;
};

// v <- mu v + g;  theta <- theta - lr(theta) v.  Velocity buffers are keyed by
// parameter name and created on first use.
class SgdMomentum {
 public:
  explicit SgdMomentum(SgdOptions options);

  const SgdOptions& options() const { return options_; }

  // Consumes the gradients of `params` and zeroes them. A non-finite gradient
  // aborts the step before any parameter changes (NumericalError naming the
  // parameter and `batch_id`).
  StepReport step(const ParameterList& params, std::size_t batch_id);

  const std::vector<double>& velocity(const std::string& name) const;
  bool has_velocity(const std::string& name) const { return velocity_.count(name) > 0; }

 private:
  SgdOptions options_;
  std::map<std::string, std::vector<double>> velocity_;
};

}  // namespace dg

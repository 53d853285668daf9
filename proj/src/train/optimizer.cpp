// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "train/optimizer.hpp"

#include <cmath>

#include "common/errors.hpp"

namespace dg {

void SgdOptions::validate() const {
  if (!(lr_fresh > 0.0) || !(lr_finetune > 0.0)) throw UsageError("learning rates must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw UsageError("momentum must lie in [0, 1)");
  if (!(clip_norm >= 0.0)) throw UsageError("clip_norm must be >= 0");
}

SgdMomentum::SgdMomentum(SgdOptions options) : options_(options) { options_.validate(); }

StepReport SgdMomentum::step(const ParameterList& params, std::size_t batch_id) {
  StepReport report;
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.tensor.requires_grad()) throw UsageError("parameter " + p.name + " does not track gradients");
    for (double g : p.tensor.grad()) {
      if (!std::isfinite(g)) {
        throw NumericalError("non-finite gradient in " + p.name + " at batch " + std::to_string(batch_id) +
                             "; step aborted");
      }
      sq += g * g;
    }
  }
  report.grad_norm = std::sqrt(sq);
  double factor = 1.0;
  if (options_.clip_norm > 0.0 && report.grad_norm > options_.clip_norm) {
    factor = options_.clip_norm / report.grad_norm;
    report.clipped = true;
  }
  for (const auto& p : params) {
    Tensor t = p.tensor;
    auto grad = t.grad();
    auto& vel = velocity_[p.name];
    if (vel.empty()) vel.assign(grad.size(), 0.0);
    if (vel.size() != grad.size()) throw ShapeError("velocity of " + p.name + " no longer matches its parameter");
    auto theta = t.mutable_values();
    const double lr = options_.lr(p.group);
    for (std::size_t i = 0; i < grad.size(); ++i) {
      vel[i] = options_.momentum * vel[i] + factor * grad[i];
      theta[i] -= lr * vel[i];
    }
    t.zero_grad();
  }
  return report;
}

const std::vector<double>& SgdMomentum::velocity(const std::string& name) const {
  auto it = velocity_.find(name);
  if (it == velocity_.end()) throw UsageError("no velocity buffer for " + name);
  return it->second;
}

}  // namespace dg

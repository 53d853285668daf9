// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <string>
#include <vector>

#include "diffcore/tensor.hpp"

namespace dg {

// Learning-rate group: freshly added layers vs layers standing in for
// pretrained, fine-tuned backbones.
enum class LrGroup { kFresh, kFineTune };

struct Parameter {
  std::string name;
  Tensor tensor;
  LrGroup group = LrGroup::kFresh;
};

using ParameterList = std::vector<Parameter>;

// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

}  // namespace dg

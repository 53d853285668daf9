// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "diffcore/parameter.hpp"

#include <cmath>

namespace dg {

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), true);
}

}  // namespace dg

// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dg {

struct GradCheckEntry {
  std::string group;  // "primitive", "component" or "end-to-end"
  std::string name;
  double error = 0.0;  // max relative error
  double tolerance = 0.0;
  bool passed() const { return error < tolerance; }
};

inline constexpr double kPrimitiveTolerance = 1e-6;
inline constexpr double kEndToEndTolerance = 1e-4;

// Finite-difference checks (central, eps = 1e-5, double precision) of every
// differentiable primitive, the vision and attention components, and the
// cross-entropy of the fused dual-glance score against every parameter
// tensor of a small model.
std::vector<GradCheckEntry> run_gradcheck_suite(std::uint64_t seed = 7);

}  // namespace dg

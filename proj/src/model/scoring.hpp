// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "diffcore/tensor.hpp"
#include "model/config.hpp"

namespace dg {

struct AttentionParams {
  Tensor w_top;  // (k)
  Tensor w_ha;   // (1, k)
  Tensor b_a;    // (1)
  Tensor w_s;    // (C, k)
  Tensor b_s;    // (C)
};

// Bag rows v (R, k), each paired with the top-down row of its pair (R, k):
// a_i = sigmoid(W_ha (v_i + w_top * vtop_i) + b_a), returned as (R, 1).
Tensor attention_weights(const Tensor& v, const Tensor& vtop_rows, const AttentionParams& p);

// s_i = W_s (a_i v_i) + b_s as (R, C). An empty `a` means a_i = 1.
Tensor region_scores(const Tensor& v, const Tensor* a, const AttentionParams& p);

// Per-segment aggregation of region scores (R, C) -> (B, C). Empty segments
// yield zero rows for every mode.
Tensor aggregate(const Tensor& s, std::span<const std::size_t> offsets, Aggregation mode);

// Plain-vector forms of the same algebra.
std::vector<double> aggregate(const std::vector<std::vector<double>>& scores, std::size_t num_classes,
                              Aggregation mode);
std::vector<double> fuse(std::span<const double> s1, std::span<const double> s2, double alpha);
std::vector<double> predict_proba(std::span<const double> s);

}  // namespace dg

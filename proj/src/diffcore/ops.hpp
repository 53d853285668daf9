// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "diffcore/tensor.hpp"

// Differentiable primitives. Every op records itself on the thread's active
// tape when at least one input requires a gradient; outputs of recorded ops
// require a gradient themselves. Shape mismatches throw ShapeError naming the
// op and the offending shapes; non-finite forward results throw
// NumericalError.
namespace dg::ops {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);

// x: (N, C, ...) and bias: (C). The only broadcast the engine supports.
Tensor add_bias(const Tensor& x, const Tensor& bias);

// x: (R, K), weights: (R) or (R, 1). Row r of x is multiplied by weights[r].
Tensor scale_rows(const Tensor& x, const Tensor& weights);

Tensor matmul(const Tensor& a, const Tensor& b);

// x: (N, in), weight: (out, in), bias: (out) -> (N, out).
Tensor affine(const Tensor& x, const Tensor& weight, const Tensor& bias);

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t padding = 0;
};
// x: (N, C, H, W), weight: (O, C, KH, KW), bias: (O) or undefined.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              Conv2dOptions options = {});

// Ceil-mode max pooling: windows hanging past the border are truncated, so the
// output extent is ceil((H - kernel) / stride) + 1.
Tensor max_pool2d(const Tensor& x, std::size_t kernel, std::size_t stride);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);

Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor reshape(const Tensor& x, Shape shape);
// Keeps axis 0, folds the rest.
Tensor flatten(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// Reductions over one axis; the axis is removed from the output shape.
Tensor sum(const Tensor& x, std::size_t axis);
Tensor mean(const Tensor& x, std::size_t axis);
Tensor max(const Tensor& x, std::size_t axis);

// v: (K) -> (n, K), each row a copy of v.
Tensor tile_rows(const Tensor& v, std::size_t n);
// x: (B, K) -> (R, K) with row r = x[index[r]].
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index);

enum class SegmentReduce { kSum, kMean, kMax, kLog1pSumExp };

// x: (R, C) with rows grouped into B consecutive segments delimited by
// offsets (size B + 1, offsets[0] = 0, offsets[B] = R). Output (B, C).
// Empty segments produce a zero row for every mode; kLog1pSumExp computes
// log(1 + sum_i exp(x_i)) per column.
Tensor segment_reduce(const Tensor& x, std::span<const std::size_t> offsets,
                      SegmentReduce mode);

// Region of a (N, C, H, W) map in cell coordinates, half-open.
struct RoiCells {
  std::size_t batch = 0;
  std::size_t row0 = 0, row1 = 0;
  std::size_t col0 = 0, col1 = 0;
};
// Max pooling over grid x grid sub-cells of every region -> (R, C*grid*grid).
Tensor roi_max_pool(const Tensor& fm, std::span<const RoiCells> rois, std::size_t grid);

// Mean over the batch of -log softmax(logits)[label], computed from logits.
// Per-sample losses are clamped at -log(1e-12); each clamp increments
// *clamp_count when provided.
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const std::size_t> labels,
                             std::size_t* clamp_count = nullptr);

// Non-differentiable helpers.
std::vector<double> softmax(std::span<const double> scores);

}  // namespace dg::ops

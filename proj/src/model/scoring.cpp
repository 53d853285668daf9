// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "model/scoring.hpp"

#include "common/errors.hpp"
#include "diffcore/ops.hpp"

namespace dg {

Tensor attention_weights(const Tensor& v, const Tensor& vtop_rows, const AttentionParams& p) {
  if (v.rank() != 2 || vtop_rows.shape() != v.shape() || p.w_top.numel() != v.dim(1)) {
    throw ShapeError("attention_weights: bag " + shape_str(v.shape()) + ", top-down " +
                     shape_str(vtop_rows.shape()) + ", w_top " + shape_str(p.w_top.shape()));
  }
  const Tensor gate = ops::mul(vtop_rows, ops::tile_rows(p.w_top, v.dim(0)));
  return ops::sigmoid(ops::affine(ops::add(v, gate), p.w_ha, p.b_a));
}

Tensor region_scores(const Tensor& v, const Tensor* a, const AttentionParams& p) {
  if (a && a->numel() != v.dim(0)) {
    throw ShapeError("region_scores: " + std::to_string(v.dim(0)) + " regions but " +
                     std::to_string(a->numel()) + " attention values");
  }
  return ops::affine(a ? ops::scale_rows(v, *a) : v, p.w_s, p.b_s);
}

Tensor aggregate(const Tensor& s, std::span<const std::size_t> offsets, Aggregation mode) {
  return ops::segment_reduce(s, offsets, segment_mode(mode));
}

std::vector<double> aggregate(const std::vector<std::vector<double>>& scores, std::size_t num_classes,
                              Aggregation mode) {
  if (scores.empty()) return std::vector<double>(num_classes, 0.0);
  std::vector<double> flat;
  for (const auto& row : scores) {
    if (row.size() != num_classes) throw ShapeError("aggregate: region score of wrong length");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  const std::size_t offs[2] = {0, scores.size()};
  const Tensor out = aggregate(Tensor::from({scores.size(), num_classes}, std::move(flat)), offs, mode);
  return {out.values().begin(), out.values().end()};
}

std::vector<double> fuse(std::span<const double> s1, std::span<const double> s2, double alpha) {
  if (s1.size() != s2.size()) throw ShapeError("fuse: score lengths differ");
  if (!(alpha >= 0.0)) throw UsageError("fuse: alpha must be >= 0");
  std::vector<double> s(s1.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = s1[i] + alpha * s2[i];
  return s;
}

std::vector<double> predict_proba(std::span<const double> s) { return ops::softmax(s); }

}  // namespace dg

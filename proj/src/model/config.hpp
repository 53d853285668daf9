// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "diffcore/ops.hpp"

namespace dg {

enum class Aggregation { kMax, kAvg, kLse };
std::string_view aggregation_name(Aggregation mode);
Aggregation parse_aggregation(std::string_view name);
ops::SegmentReduce segment_mode(Aggregation mode);

// Masked configurations of the full graph.
enum class Variant {
  kUnionCnn,
  kBBox,
  kPairCnn,
  kPairCnnBBox,
  kFirstGlance,  // pair-cnn+bbox+union
  kPairCnnBBoxGlobal,
  kPairCnnBBoxScene,
  kRcnn,
  kDualGlance,
};
std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);

struct ModelConfig {
  Variant variant = Variant::kDualGlance;
  std::size_t num_classes = 6;
  double alpha = 1.0;
  std::size_t k = 128;
  double tau_u = 0.7;
  std::size_t m = 30;
  double nms_threshold = 0.3;
  Aggregation aggregation = Aggregation::kLse;
  bool attention = true;
  bool pair_swap_averaging = false;

  std::size_t patch_size = 32;
  std::size_t context_size = 32;  // full image is resampled to this square for the context map
  std::string pair_backbone = "8p,16p,32p";
  std::string union_backbone = "8p,16p,32p";
  std::string context_backbone = "8p,16p,32";
  std::size_t roi_grid = 2;
  std::size_t bbox_hidden = 32;
  bool finetune_backbones = false;  // backbones join the low-rate group

  // Returns false for keys this struct does not own.
  bool set(std::string_view key, std::string_view value);
  // Canonical key/value listing, stable across runs.
  std::vector<std::pair<std::string, std::string>> entries() const;
  // Throws UsageError on an invalid combination.
  void validate() const;

  bool uses_pair() const;
  bool uses_bbox() const;
  bool uses_union() const;
  bool global_union() const { return variant == Variant::kPairCnnBBoxGlobal; }
  bool has_first_glance() const { return variant != Variant::kRcnn; }
  bool has_second_glance() const { return variant == Variant::kDualGlance || variant == Variant::kRcnn; }
  bool attention_active() const { return has_second_glance() && attention && variant != Variant::kRcnn; }
  Aggregation effective_aggregation() const {
    return variant == Variant::kRcnn ? Aggregation::kAvg : aggregation;
  }
};

// Hex digest over entries(); equal configs hash equal.
std::string config_hash(const std::vector<std::pair<std::string, std::string>>& entries);

}  // namespace dg

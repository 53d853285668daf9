// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "model/config.hpp"

#include <array>

#include "common/errors.hpp"
#include "common/hash.hpp"
#include "common/kv.hpp"
#include "vision/backbone.hpp"

namespace dg {
namespace {

constexpr std::array<std::pair<Variant, std::string_view>, 9> kVariants = {{
    {Variant::kUnionCnn, "union-cnn"},
    {Variant::kBBox, "bbox"},
    {Variant::kPairCnn, "pair-cnn"},
    {Variant::kPairCnnBBox, "pair-cnn+bbox"},
    {Variant::kFirstGlance, "pair-cnn+bbox+union"},
    {Variant::kPairCnnBBoxGlobal, "pair-cnn+bbox+global"},
    {Variant::kPairCnnBBoxScene, "pair-cnn+bbox+scene"},
    {Variant::kRcnn, "rcnn"},
    {Variant::kDualGlance, "dual-glance"},
}};

}  // namespace

std::string_view aggregation_name(Aggregation mode) {
  switch (mode) {
    case Aggregation::kMax: return "max";
    case Aggregation::kAvg: return "avg";
    case Aggregation::kLse: return "lse";
  }
  return "?";
}

Aggregation parse_aggregation(std::string_view name) {
  if (name == "max") return Aggregation::kMax;
  if (name == "avg") return Aggregation::kAvg;
  if (name == "lse") return Aggregation::kLse;
  throw UsageError("unknown aggregation '" + std::string(name) + "' (expected max, avg or lse)");
}

ops::SegmentReduce segment_mode(Aggregation mode) {
  switch (mode) {
    case Aggregation::kMax: return ops::SegmentReduce::kMax;
    case Aggregation::kAvg: return ops::SegmentReduce::kMean;
    case Aggregation::kLse: return ops::SegmentReduce::kLog1pSumExp;
  }
  throw UsageError("unknown aggregation");
}

std::string_view variant_name(Variant v) {
  for (const auto& [val, name] : kVariants)
    if (val == v) return name;
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (const auto& [val, n] : kVariants)
    if (n == name) return val;
  std::string known;
  for (const auto& [val, n] : kVariants) known += (known.empty() ? "" : ", ") + std::string(n);
  throw UsageError("unknown variant '" + std::string(name) + "' (expected one of " + known + ")");
}

bool ModelConfig::set(std::string_view key, std::string_view value) {
  if (key == "variant") variant = parse_variant(value);
  else if (key == "num_classes") num_classes = kv_size(key, value);
  else if (key == "alpha") alpha = kv_double(key, value);
  else if (key == "k") k = kv_size(key, value);
  else if (key == "tau_u") tau_u = kv_double(key, value);
  else if (key == "m") m = kv_size(key, value);
  else if (key == "nms_threshold") nms_threshold = kv_double(key, value);
  else if (key == "aggregation") aggregation = parse_aggregation(value);
  else if (key == "attention") attention = kv_bool(key, value);
  else if (key == "pair_swap_averaging") pair_swap_averaging = kv_bool(key, value);
  else if (key == "patch_size") patch_size = kv_size(key, value);
  else if (key == "context_size") context_size = kv_size(key, value);
  else if (key == "pair_backbone") pair_backbone = value;
  else if (key == "union_backbone") union_backbone = value;
  else if (key == "context_backbone") context_backbone = value;
  else if (key == "roi_grid") roi_grid = kv_size(key, value);
  else if (key == "bbox_hidden") bbox_hidden = kv_size(key, value);
  else if (key == "finetune_backbones") finetune_backbones = kv_bool(key, value);
  else return false;
  return true;
}

std::vector<std::pair<std::string, std::string>> ModelConfig::entries() const {
  return {
      {"variant", std::string(variant_name(variant))},
      {"num_classes", std::to_string(num_classes)},
      {"alpha", kv_format(alpha)},
      {"k", std::to_string(k)},
      {"tau_u", kv_format(tau_u)},
      {"m", std::to_string(m)},
      {"nms_threshold", kv_format(nms_threshold)},
      {"aggregation", std::string(aggregation_name(aggregation))},
      {"attention", attention ? "1" : "0"},
      {"pair_swap_averaging", pair_swap_averaging ? "1" : "0"},
      {"patch_size", std::to_string(patch_size)},
      {"context_size", std::to_string(context_size)},
      {"pair_backbone", pair_backbone},
      {"union_backbone", union_backbone},
      {"context_backbone", context_backbone},
      {"roi_grid", std::to_string(roi_grid)},
      {"bbox_hidden", std::to_string(bbox_hidden)},
      {"finetune_backbones", finetune_backbones ? "1" : "0"},
  };
}

void ModelConfig::validate() const {
  if (num_classes != 3 && num_classes != 6) throw UsageError("num_classes must be 3 or 6");
  if (!(alpha >= 0.0)) throw UsageError("alpha must be >= 0");
  if (k == 0) throw UsageError("k must be >= 1");
  if (!(tau_u > 0.0 && tau_u <= 1.0)) throw UsageError("tau_u must lie in (0, 1]");
  if (!(nms_threshold > 0.0 && nms_threshold <= 1.0)) throw UsageError("nms_threshold must lie in (0, 1]");
  if (patch_size < 4) throw UsageError("patch_size must be >= 4");
  if (context_size < 4) throw UsageError("context_size must be >= 4");
  if (roi_grid == 0) throw UsageError("roi_grid must be >= 1");
  if (bbox_hidden == 0) throw UsageError("bbox_hidden must be >= 1");
  if (variant == Variant::kPairCnnBBoxScene) {
    throw UsageError("variant pair-cnn+bbox+scene is unsupported without external weights");
  }
  BackboneSpec::parse(pair_backbone);
  BackboneSpec::parse(union_backbone);
  BackboneSpec::parse(context_backbone);
}

bool ModelConfig::uses_pair() const {
  switch (variant) {
    case Variant::kPairCnn:
    case Variant::kPairCnnBBox:
    case Variant::kFirstGlance:
    case Variant::kPairCnnBBoxGlobal:
    case Variant::kPairCnnBBoxScene:
    case Variant::kDualGlance: return true;
    default: return false;
  }
}

bool ModelConfig::uses_bbox() const { return uses_pair() ? variant != Variant::kPairCnn : variant == Variant::kBBox; }

bool ModelConfig::uses_union() const {
  return variant == Variant::kUnionCnn || variant == Variant::kFirstGlance ||
         variant == Variant::kPairCnnBBoxGlobal || variant == Variant::kDualGlance;
}

std::string config_hash(const std::vector<std::pair<std::string, std::string>>& entries) {
  std::string text;
  for (const auto& [k, v] : entries) text += k + '=' + v + '\n';
  return sha256_hex(text).substr(0, 16);
}

}  // namespace dg

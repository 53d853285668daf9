// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "data/dataset.hpp"
#include "model/config.hpp"

namespace dg {

// Raw (unstandardized) geometry of b1 followed by b2.
using PairGeometry = std::array<double, 10>;

// Everything the network reads for one sample, resolved once.
struct PreparedSample {
  std::string id;
  FineLabel fine = FineLabel::kNoRelation;
  std::size_t label = 0;  // class index under the configured num_classes
  Box b1, b2;
  ImagePlane p1, p2, p_union;  // p_union holds the whole image for the global variant
  PairGeometry geometry{};
  std::shared_ptr<const ImagePlane> context;  // context_size square
  std::vector<Proposal> regions;              // selected, image coordinates
  std::vector<Box> roi_boxes;                 // regions in context-map coordinates
  std::optional<Box> cue_box;
  bool cue_dependent = false;
};

PairGeometry pair_geometry(const Box& b1, const Box& b2, double width, double height);

// Applies the dataset's augmentation flags, crops, and selects the bag
// (NMS, then the IoU filter and top-m by objectness).
PreparedSample prepare_sample(const Dataset& dataset, const PairSample& sample, const ModelConfig& config);
std::vector<PreparedSample> prepare_samples(const Dataset& dataset, std::span<const PairSample> samples,
                                            const ModelConfig& config);

// Same sample with b1 and b2 exchanged.
PreparedSample swapped_view(const PreparedSample& s);

}  // namespace dg

// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "diffcore/ops.hpp"
#include "diffcore/parameter.hpp"
#include "geometry/geometry.hpp"
#include "vision/image.hpp"

namespace dg {

struct ConvStage {
  std::size_t channels = 8;
  bool pool = true;  // 2x2 max-pool, stride 2, after the ReLU
};

// Stack of conv(kernel, stride 1) -> ReLU [-> max-pool] stages.
struct BackboneSpec {
  std::vector<ConvStage> stages;
  std::size_t kernel = 3;
  std::size_t padding = 1;

  // "8p,16p,32p": channel count per stage, 'p' marks a trailing pool.
  static BackboneSpec parse(const std::string& text, std::size_t padding = 1);
  std::string str() const;
  std::size_t stride() const;
};

struct FeatureMap {
  Tensor values;  // (N, C, H, W)
  std::size_t stride = 1;
};

class Backbone {
 public:
  Backbone() = default;
  Backbone(std::string name, BackboneSpec spec, LrGroup group, std::mt19937_64& rng,
           std::size_t input_channels = 3);

  const BackboneSpec& spec() const { return spec_; }

  FeatureMap conv_features(const Tensor& images) const;
  // Flattened last-stage activations, (N, output_length).
  Tensor forward(const Tensor& patches) const;

  Shape output_shape(std::size_t height, std::size_t width) const;
  std::size_t output_length(std::size_t height, std::size_t width) const;

  ParameterList parameters() const;

 private:
  std::string name_;
  BackboneSpec spec_;
  LrGroup group_ = LrGroup::kFresh;
  std::size_t input_channels_ = 3;
  std::vector<Tensor> weights_;
  std::vector<Tensor> biases_;
};

// Stacks planar images of identical extent into (N, C, H, W).
Tensor stack_images(std::span<const ImagePlane> images);
Tensor stack_images(std::span<const ImagePlane* const> images);

// Maps an image-space box onto the cell grid of a feature map: edges are
// divided by the stride and rounded, clipped to the map, and widened to one
// cell when rounding collapses them. Throws DataError (naming box and stride)
// when nothing of the box lands on the map.
ops::RoiCells box_to_cells(const Box& box, std::size_t batch, const FeatureMap& fm);

// ROI max pooling of image-space boxes, (R, C * grid * grid).
struct RoiRequest {
  std::size_t batch = 0;
  Box box;
};
Tensor roi_pool(const FeatureMap& fm, std::span<const RoiRequest> rois, std::size_t grid);

}  // namespace dg

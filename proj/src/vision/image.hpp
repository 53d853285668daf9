// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "geometry/geometry.hpp"

namespace dg {

// Planar (channel-major) image with values in [0, 1].
struct ImagePlane {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 3;
  std::vector<double> values;

  static ImagePlane filled(std::size_t height, std::size_t width, double value,
                           std::size_t channels = 3);

  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return values[(c * height + y) * width + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return values[(c * height + y) * width + x];
  }

  // Throws DataError on zero extents, a size mismatch or values outside [0,1].
  void validate() const;

  friend bool operator==(const ImagePlane&, const ImagePlane&) = default;
};

// Bilinear resample (pixel-centre convention) of the box clipped to the
// image, to out_size x out_size. Throws DataError if the clipped box is empty.
ImagePlane crop_resize(const ImagePlane& image, const Box& box, std::size_t out_size);

ImagePlane flip_horizontal(const ImagePlane& image);
// Mirror of a box across the vertical centre line of an image of this width.
Box flip_box(const Box& box, double image_width);

// Raw tensor file: "DGIMG001" | u32 height | u32 width | u32 channels |
// u8 dtype (0: u8 scaled by 1/255, 1: f32) | row-major HWC body.
void write_raw_image(const std::filesystem::path& path, const ImagePlane& image, bool as_u8 = true);
ImagePlane read_raw_image(const std::filesystem::path& path);

// Dispatches on extension: ".png" via libpng, anything else as a raw file.
ImagePlane load_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImagePlane& image);

}  // namespace dg

// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "model/inputs.hpp"

#include <algorithm>
#include <cmath>

#include "common/errors.hpp"
#include "geometry/geometry.hpp"

namespace dg {

PairGeometry pair_geometry(const Box& b1, const Box& b2, double width, double height) {
  const GeometryFeature g1 = geometry_feature(b1, width, height);
  const GeometryFeature g2 = geometry_feature(b2, width, height);
  PairGeometry out{};
  std::copy(g1.begin(), g1.end(), out.begin());
  std::copy(g2.begin(), g2.end(), out.begin() + 5);
  return out;
}

PreparedSample prepare_sample(const Dataset& dataset, const PairSample& sample, const ModelConfig& config) {
  const ImageRecord& rec = dataset.image(sample.image_id);
  const ImagePlane image = dataset.sample_image(sample);
  if (std::abs(static_cast<double>(image.width) - rec.width) > 0.5 ||
      std::abs(static_cast<double>(image.height) - rec.height) > 0.5) {
    throw DataError("image " + rec.id + ": pixel extent " + std::to_string(image.width) + "x" +
                    std::to_string(image.height) + " disagrees with the annotated size");
  }
  const Box whole{0.0, 0.0, rec.width, rec.height};

  PreparedSample out;
  out.id = sample.id();
  out.fine = sample.label;
  out.label = class_index(sample.label, config.num_classes);
  out.b1 = sample.b1;
  out.b2 = sample.b2;
  out.cue_box = sample.cue_box;
  out.cue_dependent = sample.cue_dependent;
  out.geometry = pair_geometry(sample.b1, sample.b2, rec.width, rec.height);

  if (config.uses_pair()) {
    out.p1 = crop_resize(image, sample.b1, config.patch_size);
    out.p2 = crop_resize(image, sample.b2, config.patch_size);
  }
  if (config.uses_union()) {
    out.p_union = crop_resize(image, config.global_union() ? whole : union_box(sample.b1, sample.b2),
                              config.patch_size);
  }
  if (config.has_second_glance()) {
    out.context = std::make_shared<const ImagePlane>(crop_resize(image, whole, config.context_size));
    const std::vector<Proposal> raw = dataset.sample_proposals(sample);
    const std::vector<Proposal> kept = nms(raw, config.nms_threshold);
    out.regions = select_context_regions(kept, sample.b1, sample.b2, config.tau_u, config.m);
    const double sx = static_cast<double>(config.context_size) / rec.width;
    const double sy = static_cast<double>(config.context_size) / rec.height;
    for (const auto& r : out.regions) {
      out.roi_boxes.push_back({r.box.xmin * sx, r.box.ymin * sy, r.box.xmax * sx, r.box.ymax * sy});
    }
  }
  return out;
}

std::vector<PreparedSample> prepare_samples(const Dataset& dataset, std::span<const PairSample> samples,
                                            const ModelConfig& config) {
  std::vector<PreparedSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(prepare_sample(dataset, s, config));
  return out;
}

PreparedSample swapped_view(const PreparedSample& s) {
  PreparedSample out = s;
  std::swap(out.b1, out.b2);
  std::swap(out.p1, out.p2);
  std::rotate(out.geometry.begin(), out.geometry.begin() + 5, out.geometry.end());
  return out;
}

}  // namespace dg

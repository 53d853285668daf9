// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "vision/backbone.hpp"

#include <cmath>
#include <sstream>

#include "common/errors.hpp"

namespace dg {

BackboneSpec BackboneSpec::parse(const std::string& text, std::size_t padding) {
  BackboneSpec spec;
  spec.padding = padding;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    ConvStage stage;
    stage.pool = !item.empty() && item.back() == 'p';
    if (stage.pool) item.pop_back();
    try {
      std::size_t used = 0;
      stage.channels = std::stoul(item, &used);
      if (used != item.size() || stage.channels == 0) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("backbone spec '" + text + "': bad stage '" + item + "'");
    }
    spec.stages.push_back(stage);
  }
  if (spec.stages.empty()) throw UsageError("backbone spec is empty");
  return spec;
}

std::string BackboneSpec::str() const {
  std::string s;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(stages[i].channels);
    if (stages[i].pool) s += 'p';
  }
  return s;
}

std::size_t BackboneSpec::stride() const {
  std::size_t s = 1;
  for (const auto& st : stages)
    if (st.pool) s *= 2;
  return s;
}

Backbone::Backbone(std::string name, BackboneSpec spec, LrGroup group, std::mt19937_64& rng,
                   std::size_t input_channels)
    : name_(std::move(name)), spec_(std::move(spec)), group_(group), input_channels_(input_channels) {
  std::size_t in = input_channels;
  const std::size_t kk = spec_.kernel * spec_.kernel;
  for (const auto& st : spec_.stages) {
    weights_.push_back(glorot_uniform({st.channels, in, spec_.kernel, spec_.kernel}, in * kk,
                                      st.channels * kk, rng));
    biases_.push_back(Tensor::zeros({st.channels}, true));
    in = st.channels;
  }
}

FeatureMap Backbone::conv_features(const Tensor& images) const {
  if (images.rank() != 4 || images.dim(1) != input_channels_) {
    throw ShapeError("backbone " + name_ + ": expects (N, " + std::to_string(input_channels_) +
                     ", H, W), got " + shape_str(images.shape()));
  }
  Tensor x = images;
  for (std::size_t i = 0; i < spec_.stages.size(); ++i) {
    x = ops::relu(ops::conv2d(x, weights_[i], biases_[i], {1, spec_.padding}));
    if (spec_.stages[i].pool) x = ops::max_pool2d(x, 2, 2);
  }
  return {x, spec_.stride()};
}

Tensor Backbone::forward(const Tensor& patches) const {
  return ops::flatten(conv_features(patches).values);
}

Shape Backbone::output_shape(std::size_t height, std::size_t width) const {
  std::size_t h = height, w = width, c = input_channels_;
  for (const auto& st : spec_.stages) {
    if (h + 2 * spec_.padding < spec_.kernel || w + 2 * spec_.padding < spec_.kernel) {
      throw ShapeError("backbone " + name_ + ": input too small");
    }
    h = h + 2 * spec_.padding - spec_.kernel + 1;
    w = w + 2 * spec_.padding - spec_.kernel + 1;
    if (st.pool) {
      h = h <= 2 ? 1 : (h - 2 + 1) / 2 + 1;
      w = w <= 2 ? 1 : (w - 2 + 1) / 2 + 1;
    }
    c = st.channels;
  }
  return {c, h, w};
}

std::size_t Backbone::output_length(std::size_t height, std::size_t width) const {
  return shape_numel(output_shape(height, width));
}

ParameterList Backbone::parameters() const {
  ParameterList out;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    out.push_back({name_ + ".conv" + std::to_string(i) + ".w", weights_[i], group_});
    out.push_back({name_ + ".conv" + std::to_string(i) + ".b", biases_[i], group_});
  }
  return out;
}

namespace {

template <class Get>
Tensor stack_impl(std::size_t n, Get get) {
  if (n == 0) throw ShapeError("stack_images: no images");
  const ImagePlane& first = get(0);
  std::vector<double> v;
  v.reserve(n * first.values.size());
  for (std::size_t i = 0; i < n; ++i) {
    const ImagePlane& img = get(i);
    if (img.height != first.height || img.width != first.width || img.channels != first.channels) {
      throw ShapeError("stack_images: images differ in extent");
    }
    v.insert(v.end(), img.values.begin(), img.values.end());
  }
  return Tensor::from({n, first.channels, first.height, first.width}, std::move(v));
}

}  // namespace

Tensor stack_images(std::span<const ImagePlane> images) {
  return stack_impl(images.size(), [&](std::size_t i) -> const ImagePlane& { return images[i]; });
}

Tensor stack_images(std::span<const ImagePlane* const> images) {
  return stack_impl(images.size(), [&](std::size_t i) -> const ImagePlane& { return *images[i]; });
}

ops::RoiCells box_to_cells(const Box& box, std::size_t batch, const FeatureMap& fm) {
  const auto h = static_cast<long>(fm.values.dim(2));
  const auto w = static_cast<long>(fm.values.dim(3));
  const double s = static_cast<double>(fm.stride);
  long c0 = std::lround(box.xmin / s), c1 = std::lround(box.xmax / s);
  long r0 = std::lround(box.ymin / s), r1 = std::lround(box.ymax / s);
  c0 = std::max(c0, 0L);
  r0 = std::max(r0, 0L);
  c1 = std::min(c1, w);
  r1 = std::min(r1, h);
  if (c0 >= w || r0 >= h || c1 <= 0 || r1 <= 0) {
    std::ostringstream os;
    os << "roi_pool: box (" << box.xmin << ',' << box.ymin << ',' << box.xmax << ',' << box.ymax
       << ") at stride " << fm.stride << " maps to an empty feature region";
    throw DataError(os.str());
  }
  if (c1 <= c0) c1 = c0 + 1;
  if (r1 <= r0) r1 = r0 + 1;
  return {batch, static_cast<std::size_t>(r0), static_cast<std::size_t>(r1),
          static_cast<std::size_t>(c0), static_cast<std::size_t>(c1)};
}

Tensor roi_pool(const FeatureMap& fm, std::span<const RoiRequest> rois, std::size_t grid) {
  std::vector<ops::RoiCells> cells;
  cells.reserve(rois.size());
  for (const auto& r : rois) cells.push_back(box_to_cells(r.box, r.batch, fm));
  return ops::roi_max_pool(fm.values, cells, grid);
}

}  // namespace dg

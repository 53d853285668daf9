// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "model/network.hpp"

#include <algorithm>
#include <random>

#include "common/errors.hpp"
#include "diffcore/ops.hpp"

namespace dg {
namespace {

constexpr std::uint64_t kSecondGlanceStream = 0x5eed2a11ce0f00d5ULL;

Tensor affine_weight(std::size_t out, std::size_t in, std::mt19937_64& rng) {
  return glorot_uniform({out, in}, in, out, rng);
}

void copy_into(const Tensor& dst, const Tensor& src, const std::string& name) {
  if (dst.shape() != src.shape()) {
    throw DataError("checkpoint tensor " + name + " has shape " + shape_str(src.shape()) + ", model expects " +
                    shape_str(dst.shape()));
  }
  Tensor d = dst;
  auto out = d.mutable_values();
  std::copy(src.values().begin(), src.values().end(), out.begin());
}

std::vector<double> row(const Tensor& t, std::size_t r) {
  const std::size_t c = t.dim(1);
  return {t.values().begin() + static_cast<std::ptrdiff_t>(r * c),
          t.values().begin() + static_cast<std::ptrdiff_t>((r + 1) * c)};
}

}  // namespace

DualGlanceModel::DualGlanceModel(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  const LrGroup bb_group = config_.finetune_backbones ? LrGroup::kFineTune : LrGroup::kFresh;
  const std::size_t c = config_.num_classes, k = config_.k;

  if (config_.has_first_glance()) {
    std::mt19937_64 rng(seed);
    std::size_t width = 0;
    if (config_.uses_pair()) {
      fg_.pair = Backbone("fg.pair", BackboneSpec::parse(config_.pair_backbone), bb_group, rng);
      width += 2 * fg_.pair.output_length(config_.patch_size, config_.patch_size);
    }
    if (config_.uses_union()) {
      fg_.union_ = Backbone("fg.union", BackboneSpec::parse(config_.union_backbone), bb_group, rng);
      width += fg_.union_.output_length(config_.patch_size, config_.patch_size);
    }
    if (config_.uses_bbox()) {
      fg_.bbox_w = affine_weight(config_.bbox_hidden, 10, rng);
      fg_.bbox_b = Tensor::zeros({config_.bbox_hidden}, true);
      width += config_.bbox_hidden;
    }
    fg_.fc1_w = affine_weight(k, width, rng);
    fg_.fc1_b = Tensor::zeros({k}, true);
    fg_.fc2_w = affine_weight(c, k, rng);
    fg_.fc2_b = Tensor::zeros({c}, true);
  }

  if (config_.has_second_glance()) {
    std::mt19937_64 rng(seed ^ kSecondGlanceStream);
    sg_.context = Backbone("sg.context", BackboneSpec::parse(config_.context_backbone), bb_group, rng);
    const std::size_t channels = sg_.context.output_shape(config_.context_size, config_.context_size)[0];
    const std::size_t pooled = channels * config_.roi_grid * config_.roi_grid;
    sg_.roi_w = affine_weight(k, pooled, rng);
    sg_.roi_b = Tensor::zeros({k}, true);
    auto& a = sg_.attention;
    a.w_top = glorot_uniform({k}, k, k, rng);
    a.w_ha = affine_weight(1, k, rng);
    a.b_a = Tensor::zeros({1}, true);
    a.w_s = affine_weight(c, k, rng);
    a.b_s = Tensor::zeros({c}, true);
  }
}

ParameterList DualGlanceModel::first_glance_parameters() const {
  ParameterList out;
  if (!config_.has_first_glance()) return out;
  if (config_.uses_pair()) {
    auto p = fg_.pair.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  if (config_.uses_union()) {
    auto p = fg_.union_.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  if (config_.uses_bbox()) {
    out.push_back({"fg.bbox.w", fg_.bbox_w, LrGroup::kFresh});
    out.push_back({"fg.bbox.b", fg_.bbox_b, LrGroup::kFresh});
  }
  out.push_back({"fg.fc1.w", fg_.fc1_w, LrGroup::kFresh});
  out.push_back({"fg.fc1.b", fg_.fc1_b, LrGroup::kFresh});
  out.push_back({"fg.fc2.w", fg_.fc2_w, LrGroup::kFresh});
  out.push_back({"fg.fc2.b", fg_.fc2_b, LrGroup::kFresh});
  return out;
}

ParameterList DualGlanceModel::second_glance_parameters() const {
  ParameterList out;
  if (!config_.has_second_glance()) return out;
  out = sg_.context.parameters();
  out.push_back({"sg.roi.w", sg_.roi_w, LrGroup::kFresh});
  out.push_back({"sg.roi.b", sg_.roi_b, LrGroup::kFresh});
  const auto& a = sg_.attention;
  if (config_.attention_active()) {
    out.push_back({"sg.w_top", a.w_top, LrGroup::kFresh});
    out.push_back({"sg.w_ha", a.w_ha, LrGroup::kFresh});
    out.push_back({"sg.b_a", a.b_a, LrGroup::kFresh});
  }
  out.push_back({"sg.w_s", a.w_s, LrGroup::kFresh});
  out.push_back({"sg.b_s", a.b_s, LrGroup::kFresh});
  return out;
}

ParameterList DualGlanceModel::parameters() const {
  ParameterList out = first_glance_parameters();
  auto s = second_glance_parameters();
  out.insert(out.end(), s.begin(), s.end());
  return out;
}

std::vector<NamedTensor> DualGlanceModel::state() const {
  std::vector<NamedTensor> out;
  for (const auto& p : parameters()) out.push_back({p.name, p.tensor});
  if (config_.has_second_glance() && !config_.attention_active()) {
    // Kept so that a checkpoint always carries the full attention block.
    const auto& a = sg_.attention;
    out.push_back({"sg.w_top", a.w_top});
    out.push_back({"sg.w_ha", a.w_ha});
    out.push_back({"sg.b_a", a.b_a});
  }
  if (normalizer_) {
    out.push_back({"fg.norm.mean", Tensor::from({5}, {normalizer_->mean.begin(), normalizer_->mean.end()})});
    out.push_back({"fg.norm.std", Tensor::from({5}, {normalizer_->stddev.begin(), normalizer_->stddev.end()})});
  }
  return out;
}

void DualGlanceModel::load_state(const Checkpoint& ckpt, bool first_glance_only) {
  for (const auto& [name, tensor] : state()) {
    if (name == "fg.norm.mean" || name == "fg.norm.std") continue;
    if (first_glance_only && name.rfind("fg.", 0) != 0) continue;
    if (!ckpt.contains(name)) throw DataError("checkpoint lacks tensor " + name);
    copy_into(tensor, ckpt.at(name), name);
  }
  if (ckpt.contains("fg.norm.mean") && ckpt.contains("fg.norm.std")) {
    NormalizerStats stats;
    const auto& mean = ckpt.at("fg.norm.mean");
    const auto& sd = ckpt.at("fg.norm.std");
    if (mean.numel() != 5 || sd.numel() != 5) throw DataError("checkpoint normalizer has wrong size");
    std::copy_n(mean.values().begin(), 5, stats.mean.begin());
    std::copy_n(sd.values().begin(), 5, stats.stddev.begin());
    normalizer_ = stats;
  } else if (config_.has_first_glance() && config_.uses_bbox()) {
    throw DataError("checkpoint lacks the geometry normalizer");
  }
}

Tensor DualGlanceModel::geometry_tensor(Batch batch) const {
  if (!normalizer_) throw UsageError("geometry normalizer has not been fitted");
  std::vector<double> v;
  v.reserve(batch.size() * 10);
  for (const PreparedSample* s : batch) {
    for (std::size_t half = 0; half < 2; ++half) {
      GeometryFeature g;
      std::copy_n(s->geometry.begin() + static_cast<std::ptrdiff_t>(5 * half), 5, g.begin());
      const auto z = apply_normalizer(*normalizer_, g);
      v.insert(v.end(), z.begin(), z.end());
    }
  }
  return Tensor::from({batch.size(), 10}, std::move(v));
}

DualGlanceModel::FirstGlanceOutput DualGlanceModel::first_glance(Batch batch) const {
  if (!config_.has_first_glance()) throw UsageError("variant rcnn has no first glance");
  if (batch.empty()) throw ShapeError("first_glance: empty batch");
  const std::size_t b = batch.size();
  std::vector<Tensor> parts;
  if (config_.uses_pair()) {
    std::vector<const ImagePlane*> imgs;
    imgs.reserve(2 * b);
    for (const auto* s : batch) imgs.push_back(&s->p1);
    for (const auto* s : batch) imgs.push_back(&s->p2);
    const Tensor feats = fg_.pair.forward(stack_images(imgs));
    std::vector<std::size_t> first(b), second(b);
    for (std::size_t i = 0; i < b; ++i) {
      first[i] = i;
      second[i] = b + i;
    }
    parts.push_back(ops::gather_rows(feats, first));
    parts.push_back(ops::gather_rows(feats, second));
  }
  if (config_.uses_union()) {
    std::vector<const ImagePlane*> imgs;
    imgs.reserve(b);
    for (const auto* s : batch) imgs.push_back(&s->p_union);
    parts.push_back(fg_.union_.forward(stack_images(imgs)));
  }
  if (config_.uses_bbox()) parts.push_back(ops::relu(ops::affine(geometry_tensor(batch), fg_.bbox_w, fg_.bbox_b)));
  const Tensor x = parts.size() == 1 ? parts.front() : ops::concat(parts, 1);
  const Tensor v_top = ops::relu(ops::affine(x, fg_.fc1_w, fg_.fc1_b));
  return {ops::affine(v_top, fg_.fc2_w, fg_.fc2_b), v_top};
}

DualGlanceModel::SecondGlanceOutput DualGlanceModel::second_glance(Batch batch, const Tensor* v_top) const {
  if (!config_.has_second_glance()) throw UsageError("variant has no second glance");
  if (batch.empty()) throw ShapeError("second_glance: empty batch");
  const std::size_t b = batch.size();
  SecondGlanceOutput out;
  out.offsets.assign(b + 1, 0);
  std::vector<RoiRequest> rois;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < b; ++i) {
    for (const auto& box : batch[i]->roi_boxes) {
      rois.push_back({i, box});
      owner.push_back(i);
    }
    out.offsets[i + 1] = rois.size();
  }
  if (rois.empty()) {
    out.s2 = Tensor::zeros({b, config_.num_classes});
    return out;
  }
  std::vector<const ImagePlane*> imgs;
  imgs.reserve(b);
  for (const auto* s : batch) {
    if (!s->context) throw UsageError("sample " + s->id + " was prepared without a context image");
    imgs.push_back(s->context.get());
  }
  const FeatureMap fm = sg_.context.conv_features(stack_images(imgs));
  const Tensor v = ops::affine(roi_pool(fm, rois, config_.roi_grid), sg_.roi_w, sg_.roi_b);
  if (config_.attention_active()) {
    if (!v_top) throw UsageError("attention requires the top-down vector");
    out.attention = attention_weights(v, ops::gather_rows(*v_top, owner), sg_.attention);
  }
  out.region_scores = region_scores(v, out.attention ? &*out.attention : nullptr, sg_.attention);
  out.s2 = aggregate(*out.region_scores, out.offsets, config_.effective_aggregation());
  return out;
}

DualGlanceModel::Output DualGlanceModel::forward(Batch batch, const FirstGlanceOutput* frozen) const {
  ++forward_passes_;
  Output out;
  if (config_.has_first_glance()) out.first = frozen ? *frozen : first_glance(batch);
  if (config_.has_second_glance()) out.second = second_glance(batch, out.first ? &out.first->v_top : nullptr);
  if (out.first && out.second) {
    out.s = ops::add(out.first->s1, ops::scale(out.second->s2, config_.alpha));
  } else {
    out.s = out.first ? out.first->s1 : out.second->s2;
  }
  return out;
}

std::vector<ScoreBundle> DualGlanceModel::bundles(Batch batch) const {
  const Output o = forward(batch);
  std::vector<ScoreBundle> out(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    ScoreBundle& sb = out[i];
    sb.s = row(o.s, i);
    sb.s1 = o.first ? row(o.first->s1, i) : std::vector<double>(config_.num_classes, 0.0);
    sb.s2 = o.second ? row(o.second->s2, i) : std::vector<double>(config_.num_classes, 0.0);
    if (o.second) {
      for (std::size_t r = o.second->offsets[i]; r < o.second->offsets[i + 1]; ++r) {
        sb.region_ids.push_back(r - o.second->offsets[i]);
        sb.attention.push_back(o.second->attention ? (*o.second->attention)[r] : 1.0);
        sb.region_scores.push_back(row(*o.second->region_scores, r));
      }
    }
    sb.p = predict_proba(sb.s);
  }
  return out;
}

ScoreBundle DualGlanceModel::score(const PreparedSample& sample) const {
  const PreparedSample* one[1] = {&sample};
  ScoreBundle sb = std::move(bundles(one).front());
  if (config_.pair_swap_averaging) {
    const PreparedSample swapped = swapped_view(sample);
    const PreparedSample* other[1] = {&swapped};
    std::vector<double> s = row(forward(other).s, 0);
    for (std::size_t j = 0; j < s.size(); ++j) s[j] = 0.5 * (s[j] + sb.s[j]);
    sb.p = predict_proba(s);
  }
  return sb;
}

std::vector<double> DualGlanceModel::predict_pair_symmetric(const PreparedSample& sample) const {
  const PreparedSample swapped = swapped_view(sample);
  const PreparedSample* a[1] = {&sample};
  const PreparedSample* b[1] = {&swapped};
  std::vector<double> s = row(forward(a).s, 0);
  const std::vector<double> t = row(forward(b).s, 0);
  for (std::size_t j = 0; j < s.size(); ++j) s[j] = 0.5 * (s[j] + t[j]);
  return predict_proba(s);
}

std::vector<ScoreBundle> DualGlanceModel::score_all(std::span<const PreparedSample> samples,
                                                    std::size_t batch_size) const {
  if (batch_size == 0) throw UsageError("score_all: batch size must be >= 1");
  std::vector<ScoreBundle> out;
  out.reserve(samples.size());
  std::vector<PreparedSample> swapped;
  for (std::size_t lo = 0; lo < samples.size(); lo += batch_size) {
    const std::size_t hi = std::min(samples.size(), lo + batch_size);
    std::vector<const PreparedSample*> batch;
    for (std::size_t i = lo; i < hi; ++i) batch.push_back(&samples[i]);
    auto part = bundles(batch);
    if (config_.pair_swap_averaging) {
      swapped.clear();
      for (std::size_t i = lo; i < hi; ++i) swapped.push_back(swapped_view(samples[i]));
      std::vector<const PreparedSample*> sb;
      for (const auto& s : swapped) sb.push_back(&s);
      const Output o = forward(sb);
      for (std::size_t i = 0; i < part.size(); ++i) {
        std::vector<double> s = row(o.s, i);
        for (std::size_t j = 0; j < s.size(); ++j) s[j] = 0.5 * (s[j] + part[i].s[j]);
        part[i].p = predict_proba(s);
      }
    }
    for (auto& b : part) out.push_back(std::move(b));
  }
  return out;
}

}  // namespace dg

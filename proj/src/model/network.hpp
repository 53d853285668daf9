// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "diffcore/checkpoint.hpp"
#include "diffcore/parameter.hpp"
#include "geometry/geometry.hpp"
#include "model/config.hpp"
#include "model/inputs.hpp"
#include "model/scoring.hpp"
#include "vision/backbone.hpp"

namespace dg {

struct FirstGlanceParams {
  Backbone pair;   // shared by p1 and p2
  Backbone union_;
  Tensor bbox_w, bbox_b;  // (bbox_hidden, 10)
  Tensor fc1_w, fc1_b;    // -> v_top (k)
  Tensor fc2_w, fc2_b;    // -> S1 (C)
};

struct SecondGlanceParams {
  Backbone context;
  Tensor roi_w, roi_b;  // pooled cells -> v_i (k)
  AttentionParams attention;
};

// Scores for one sample, for inspection and evaluation.
struct ScoreBundle {
  std::vector<double> s1, s2, s, p;
  std::vector<double> attention;       // one per region of the bag
  std::vector<std::size_t> region_ids;  // indices into PreparedSample::regions
  std::vector<std::vector<double>> region_scores;
};

class DualGlanceModel {
 public:
  using Batch = std::span<const PreparedSample* const>;

  struct FirstGlanceOutput {
    Tensor s1;     // (B, C)
    Tensor v_top;  // (B, k)
  };
  struct SecondGlanceOutput {
    Tensor s2;                          // (B, C)
    std::optional<Tensor> attention;    // (R, 1) when attention is active and R > 0
    std::optional<Tensor> region_scores;  // (R, C) when R > 0
    std::vector<std::size_t> offsets;   // B + 1 bag boundaries
  };
  struct Output {
    std::optional<FirstGlanceOutput> first;
    std::optional<SecondGlanceOutput> second;
    Tensor s;  // fused (B, C)
  };

  DualGlanceModel(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }

  void set_normalizer(const NormalizerStats& stats) { normalizer_ = stats; }
  const std::optional<NormalizerStats>& normalizer() const { return normalizer_; }

  ParameterList first_glance_parameters() const;
  ParameterList second_glance_parameters() const;
  ParameterList parameters() const;
  const FirstGlanceParams& first_glance_params() const { return fg_; }
  const SecondGlanceParams& second_glance_params() const { return sg_; }

  // Parameters plus the fitted normalizer, under stable names.
  std::vector<NamedTensor> state() const;
  // Copies matching tensors in; `first_glance_only` restricts to the fg.* namespace.
  void load_state(const Checkpoint& checkpoint, bool first_glance_only = false);

  FirstGlanceOutput first_glance(Batch batch) const;
  SecondGlanceOutput second_glance(Batch batch, const Tensor* v_top) const;
  // `frozen` substitutes precomputed first-glance outputs.
  Output forward(Batch batch, const FirstGlanceOutput* frozen = nullptr) const;

  ScoreBundle score(const PreparedSample& sample) const;
  // Mean of the fused scores for (b1, b2) and (b2, b1), then softmax.
  std::vector<double> predict_pair_symmetric(const PreparedSample& sample) const;
  // Honors config().pair_swap_averaging.
  std::vector<ScoreBundle> score_all(std::span<const PreparedSample> samples, std::size_t batch_size = 64) const;

  std::size_t forward_passes() const { return forward_passes_.load(); }

 private:
  Tensor geometry_tensor(Batch batch) const;
  std::vector<ScoreBundle> bundles(Batch batch) const;

  ModelConfig config_;
  FirstGlanceParams fg_;
  SecondGlanceParams sg_;
  std::optional<NormalizerStats> normalizer_;
  mutable std::atomic<std::size_t> forward_passes_{0};
};

}  // namespace dg

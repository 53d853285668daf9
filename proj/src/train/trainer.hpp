// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "model/network.hpp"
#include "train/optimizer.hpp"

namespace dg {

struct TrainSchedule {
  std::size_t batch_size = 32;
  std::size_t epochs = 30;         // stage-1 cap
  std::size_t stage2_epochs = 0;   // 0 = same as epochs
  std::size_t patience = 5;
  double min_delta = 1e-3;
  double divergence_factor = 10.0;
  double smoothing = 0.9;          // EMA weight of the smoothed step loss
  std::size_t max_steps = 0;       // per stage; 0 = unlimited
  std::size_t checkpoint_every = 0;  // epochs; 0 = final only
  std::uint64_t seed = 0;
  SgdOptions sgd;

  bool set(std::string_view key, std::string_view value);
  std::vector<std::pair<std::string, std::string>> entries() const;
  void validate() const;
  std::size_t epoch_cap(int stage) const { return stage == 2 && stage2_epochs ? stage2_epochs : epochs; }
};

struct TrainResult {
  int stage = 1;
  std::size_t epochs = 0;
  std::size_t steps = 0;
  bool converged = false;  // stopped by the patience rule rather than a cap
  double initial_loss = 0.0;
  std::vector<double> step_loss;
  std::vector<double> epoch_loss;
  std::size_t clamped = 0;  // cross-entropy terms clamped at p = 1e-12
};

// Receives one structured line per step and a callback per finished epoch.
struct TrainObserver {
  std::ostream* log = nullptr;
  std::function<void(int stage, std::size_t epoch, const TrainResult&)> on_epoch;
};

// Fitted over both person boxes of every sample.
NormalizerStats fit_geometry_normalizer(std::span<const PreparedSample> samples);

// Fits the normalizer when the variant reads geometry, then optimizes
// cross-entropy on softmax(S1) (or on the variant's score when it has no
// second glance).
TrainResult train_stage1(DualGlanceModel& model, std::span<const PreparedSample> train,
                         const TrainSchedule& schedule, const TrainObserver& observer = {});

// Loads the frozen first glance from `stage1` (absent only for variants
// without a first glance) and optimizes cross-entropy on softmax(S1 + alpha S2)
// over the second-glance parameters alone.
TrainResult train_stage2(DualGlanceModel& model, const Checkpoint* stage1, std::span<const PreparedSample> train,
                         const TrainSchedule& schedule, const TrainObserver& observer = {});

// Cross-entropy of the model's fused score over `samples`, without gradients.
double mean_loss(const DualGlanceModel& model, std::span<const PreparedSample> samples,
                 std::size_t batch_size = 64);

// Checkpoint with a manifest carrying config hash, seed, stage, epochs and the loss curve.
void save_model(const std::filesystem::path& path, const DualGlanceModel& model, const TrainResult& result,
                std::uint64_t seed, const std::map<std::string, std::string>& extra = {});

}  // namespace dg

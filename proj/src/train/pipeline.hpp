// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "data/dataset.hpp"
#include "diffcore/checkpoint.hpp"
#include "model/network.hpp"
#include "train/trainer.hpp"

namespace dg {

// Training samples with every class oversampled (pair swap, flip) up to the
// largest class.
std::vector<PairSample> balanced_training_samples(const Dataset& train, std::size_t num_classes);

// In-memory snapshot of a model's state (tensor copies) plus manifest.
Checkpoint snapshot(const DualGlanceModel& model, std::map<std::string, std::string> manifest = {});

struct TrainedModel {
  std::unique_ptr<DualGlanceModel> model;
  std::optional<TrainResult> stage1;
  std::optional<TrainResult> stage2;
  std::optional<Checkpoint> stage1_state;  // frozen first glance, for reuse
};

struct PipelineOptions {
  std::filesystem::path out_dir;  // empty = keep everything in memory
  TrainObserver observer;
  const Checkpoint* reuse_stage1 = nullptr;  // skip stage 1 and start from this
  bool stage1_only = false;  // stop after stage 1; only stage1.ckpt is written
};

// Stage 1, then stage 2 when the variant has a second glance. Writes
// stage1.ckpt and model.ckpt (each with a manifest) under out_dir.
TrainedModel train_model(const ModelConfig& config, const TrainSchedule& schedule,
                         std::span<const PreparedSample> train, const PipelineOptions& options = {});

// Model configuration recorded as model.* entries in a checkpoint manifest.
ModelConfig config_from_manifest(const std::map<std::string, std::string>& manifest);

// Rebuilds a model from a checkpoint written by save_model. `override_config`
// replaces the recorded configuration (its tensors must still match).
std::unique_ptr<DualGlanceModel> load_model(const Checkpoint& checkpoint, const ModelConfig* override_config = nullptr);
std::unique_ptr<DualGlanceModel> load_model(const std::filesystem::path& path);

}  // namespace dg

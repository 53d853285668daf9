// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "train/pipeline.hpp"

#include <algorithm>

#include "common/errors.hpp"
#include "common/kv.hpp"
#include "data/sampling.hpp"

namespace dg {

std::vector<PairSample> balanced_training_samples(const Dataset& train, std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (const auto& s : train.samples) ++counts[class_index(s.label, num_classes)];
  const std::size_t top = *std::max_element(counts.begin(), counts.end());
  const std::vector<std::size_t> targets(num_classes, top);
  return oversample(train, targets, num_classes);
}

Checkpoint snapshot(const DualGlanceModel& model, std::map<std::string, std::string> manifest) {
  Checkpoint ck;
  for (const auto& [name, t] : model.state()) ck.tensors.push_back({name, t.clone()});
  ck.manifest = std::move(manifest);
  return ck;
}

TrainedModel train_model(const ModelConfig& config, const TrainSchedule& schedule,
                         std::span<const PreparedSample> train, const PipelineOptions& options) {
  TrainedModel out;
  out.model = std::make_unique<DualGlanceModel>(config, schedule.seed);
  DualGlanceModel& model = *out.model;
  if (!options.out_dir.empty()) std::filesystem::create_directories(options.out_dir);

  if (config.has_first_glance()) {
    if (options.reuse_stage1) {
      model.load_state(*options.reuse_stage1, true);
      out.stage1_state = *options.reuse_stage1;
    } else {
      out.stage1 = train_stage1(model, train, schedule, options.observer);
      out.stage1_state = snapshot(model);
      if (!options.out_dir.empty()) save_model(options.out_dir / "stage1.ckpt", model, *out.stage1, schedule.seed);
    }
  }
  if (options.stage1_only) {
    if (!config.has_first_glance()) throw UsageError("variant " + std::string(variant_name(config.variant)) + " has no stage 1");
    return out;
  }
  if (config.has_second_glance()) {
    out.stage2 = train_stage2(model, out.stage1_state ? &*out.stage1_state : nullptr, train, schedule,
                              options.observer);
  }
  if (!options.out_dir.empty()) {
    const TrainResult& last = out.stage2 ? *out.stage2 : out.stage1 ? *out.stage1 : TrainResult{};
    save_model(options.out_dir / "model.ckpt", model, last, schedule.seed);
  }
  return out;
}

ModelConfig config_from_manifest(const std::map<std::string, std::string>& manifest) {
  ModelConfig c;
  bool any = false;
  for (const auto& [k, v] : manifest) {
    if (k.rfind("model.", 0) != 0) continue;
    if (!c.set(k.substr(6), v)) throw DataError("checkpoint manifest: unknown model key " + k);
    any = true;
  }
  if (!any) throw DataError("checkpoint manifest carries no model configuration");
  c.validate();
  return c;
}

std::unique_ptr<DualGlanceModel> load_model(const Checkpoint& checkpoint, const ModelConfig* override_config) {
  const ModelConfig config = override_config ? *override_config : config_from_manifest(checkpoint.manifest);
  std::uint64_t seed = 0;
  if (auto it = checkpoint.manifest.find("seed"); it != checkpoint.manifest.end()) seed = kv_u64("seed", it->second);
  auto model = std::make_unique<DualGlanceModel>(config, seed);
  model->load_state(checkpoint);
  return model;
}

std::unique_ptr<DualGlanceModel> load_model(const std::filesystem::path& path) {
  return load_model(load_checkpoint(path));
}

}  // namespace dg

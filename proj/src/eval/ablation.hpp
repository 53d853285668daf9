// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "common/kv.hpp"
#include "data/dataset.hpp"
#include "eval/report.hpp"
#include "train/trainer.hpp"

namespace dg {

// Keys a grid may vary across cells.
bool is_axis_key(std::string_view key);

struct AblationCell {
  ModelConfig config;
  std::uint64_t seed = 0;
  std::string name;
};

// Grid file: model and schedule keys set the base configuration,
// `axis.<key> = v1,v2,...` declares a swept axis, `seeds = s1,s2,...` the
// seeds. Remaining keys are kept in `extra` for the caller. Grid keys
// override `base` and `schedule`.
struct AblationGrid {
  ModelConfig base;
  TrainSchedule schedule;
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, std::string> extra;

  static AblationGrid from(const KeyValues& kv, const ModelConfig& base = {}, const TrainSchedule& schedule = {});
  // Seed-major; within a seed the first axis varies slowest.
  std::vector<AblationCell> cells() const;
};

struct CellResult {
  AblationCell cell;
  MetricsReport report;
  std::optional<MetricsReport> first_glance;  // S1-only view of the same model
  CueAttention cue;
  bool stage1_reused = false;
  double train_seconds = 0.0;
};

struct AblationOptions {
  std::filesystem::path out_dir;  // empty = nothing written
  std::ostream* log = nullptr;    // progress lines
  bool dump_attention = true;
};

// Cells must differ only in axis keys (UsageError otherwise). Cells sharing a
// seed and first-glance configuration share one stage-1 run. Writes
// <cell>/metrics.json, <cell>/attention.jsonl, ablation.csv and runtime.json.
std::vector<CellResult> ablation_run(std::span<const AblationCell> cells, const TrainSchedule& schedule,
                                     const Dataset& train, const Dataset& test, const AblationOptions& options = {});

}  // namespace dg

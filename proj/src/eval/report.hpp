// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eval/metrics.hpp"
#include "model/network.hpp"

namespace dg {

struct MetricsReport {
  std::size_t num_classes = 0;
  std::size_t samples = 0;
  std::vector<std::optional<double>> recall;
  ApReport ap;
  ConfusionMatrix confusion{1};
  double accuracy = 0.0;
  std::string config_hash;
  std::uint64_t seed = 0;
  double runtime_s = 0.0;  // kept out of the metrics document
};

enum class ScoreSource { kFused, kFirstGlance };

struct Evaluation {
  MetricsReport report;
  std::vector<ScoreBundle> bundles;
  std::vector<std::size_t> predictions;
};

MetricsReport make_report(const std::vector<std::vector<double>>& probabilities, std::span<const std::size_t> labels,
                          std::size_t num_classes);

// Scores every sample; kFirstGlance ranks by softmax(S1) instead of p.
Evaluation evaluate(const DualGlanceModel& model, std::span<const PreparedSample> samples, std::uint64_t seed,
                    ScoreSource source = ScoreSource::kFused);

// Correctly classified cue-dependent samples whose top-attended region
// overlaps the planted cue box with IoU >= iou_threshold.
struct CueAttention {
  std::size_t eligible = 0;
  std::size_t hits = 0;
  double rate() const { return eligible ? static_cast<double>(hits) / static_cast<double>(eligible) : 0.0; }
};
CueAttention cue_attention(std::span<const PreparedSample> samples, const Evaluation& evaluation,
                           double iou_threshold = 0.5);

// Structured metrics document (JSON). Deterministic for equal inputs.
std::string metrics_json(const MetricsReport& report);
void write_metrics(const std::filesystem::path& path, const MetricsReport& report);

// One JSON object per line: id, label, prediction, regions, attention,
// per-region scores, S1, S2, S and p.
void write_attention_dump(const std::filesystem::path& path, std::span<const PreparedSample> samples,
                          const Evaluation& evaluation);

struct TableRow {
  ModelConfig config;
  std::uint64_t seed = 0;
  MetricsReport report;
};
std::string comparative_csv(std::span<const TableRow> rows);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace dg

// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "eval/report.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "common/errors.hpp"
#include "common/kv.hpp"
#include "data/labels.hpp"

namespace dg {
namespace {

using nlohmann::json;

json optional_list(const std::vector<std::optional<double>>& values) {
  json out = json::array();
  for (const auto& v : values) out.push_back(v ? json(*v) : json(nullptr));
  return out;
}

json box_json(const Box& b) { return json::array({b.xmin, b.ymin, b.xmax, b.ymax}); }

}  // namespace

MetricsReport make_report(const std::vector<std::vector<double>>& probabilities, std::span<const std::size_t> labels,
                          std::size_t num_classes) {
  std::vector<std::size_t> preds;
  preds.reserve(probabilities.size());
  for (const auto& p : probabilities) preds.push_back(argmax(p));
  MetricsReport r;
  r.num_classes = num_classes;
  r.samples = labels.size();
  r.recall = recall_per_class(preds, labels, num_classes);
  r.ap = mean_average_precision(probabilities, labels, num_classes);
  r.confusion = confusion(preds, labels, num_classes);
  r.accuracy = accuracy(preds, labels);
  return r;
}

Evaluation evaluate(const DualGlanceModel& model, std::span<const PreparedSample> samples, std::uint64_t seed,
                    ScoreSource source) {
  if (samples.empty()) throw DataError("evaluate: no samples");
  if (source == ScoreSource::kFirstGlance && !model.config().has_first_glance()) {
    throw UsageError("evaluate: variant has no first glance");
  }
  const auto start = std::chrono::steady_clock::now();
  Evaluation ev;
  ev.bundles = model.score_all(samples);
  std::vector<std::vector<double>> probs;
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    probs.push_back(source == ScoreSource::kFirstGlance ? predict_proba(ev.bundles[i].s1) : ev.bundles[i].p);
    labels.push_back(samples[i].label);
    ev.predictions.push_back(argmax(probs.back()));
  }
  ev.report = make_report(probs, labels, model.config().num_classes);
  ev.report.config_hash = config_hash(model.config().entries());
  ev.report.seed = seed;
  ev.report.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return ev;
}

CueAttention cue_attention(std::span<const PreparedSample> samples, const Evaluation& evaluation,
                           double iou_threshold) {
  CueAttention out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const PreparedSample& s = samples[i];
    const ScoreBundle& b = evaluation.bundles[i];
    if (!s.cue_dependent || !s.cue_box || evaluation.predictions[i] != s.label) continue;
    ++out.eligible;
    if (b.attention.empty()) continue;
    const std::size_t top = argmax(b.attention);
    if (iou(s.regions[b.region_ids[top]].box, *s.cue_box) >= iou_threshold) ++out.hits;
  }
  return out;
}

std::string metrics_json(const MetricsReport& r) {
  json j;
  json names = json::array();
  for (std::size_t c = 0; c < r.num_classes; ++c) names.push_back(class_name(c, r.num_classes));
  j["classes"] = names;
  j["samples"] = r.samples;
  j["accuracy"] = r.accuracy;
  j["recall"] = optional_list(r.recall);
  j["ap"] = optional_list(r.ap.ap);
  j["map"] = r.ap.map;
  j["absent_classes"] = r.ap.absent;
  json counts = json::array();
  for (std::size_t t = 0; t < r.num_classes; ++t) {
    json row = json::array();
    for (std::size_t p = 0; p < r.num_classes; ++p) row.push_back(r.confusion.at(t, p));
    counts.push_back(row);
  }
  j["confusion"] = counts;
  j["confusion_normalized"] = r.confusion.normalized();
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  return j.dump(2) + "\n";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_metrics(const std::filesystem::path& path, const MetricsReport& report) {
  write_text(path, metrics_json(report));
}

void write_attention_dump(const std::filesystem::path& path, std::span<const PreparedSample> samples,
                          const Evaluation& ev) {
  std::ostringstream os;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const PreparedSample& s = samples[i];
    const ScoreBundle& b = ev.bundles[i];
    json j;
    j["id"] = s.id;
    j["label"] = s.label;
    j["prediction"] = ev.predictions[i];
    json regions = json::array();
    for (std::size_t r : b.region_ids) {
      regions.push_back({{"box", box_json(s.regions[r].box)}, {"objectness", s.regions[r].objectness}});
    }
    j["regions"] = regions;
    j["attention"] = b.attention;
    j["region_scores"] = b.region_scores;
    j["s1"] = b.s1;
    j["s2"] = b.s2;
    j["s"] = b.s;
    j["p"] = b.p;
    if (s.cue_box) j["cue_box"] = box_json(*s.cue_box);
    os << j.dump() << '\n';
  }
  write_text(path, os.str());
}

std::string comparative_csv(std::span<const TableRow> rows) {
  if (rows.empty()) return {};
  const std::size_t c = rows.front().report.num_classes;
  std::ostringstream os;
  os << "variant,aggregation,attention,m,tau_u,alpha,seed";
  for (std::size_t i = 0; i < c; ++i) os << ",recall_" << class_name(i, c);
  for (std::size_t i = 0; i < c; ++i) os << ",ap_" << class_name(i, c);
  os << ",mAP,accuracy\n";
  auto opt = [](const std::optional<double>& v) { return v ? kv_format(*v) : std::string(); };
  for (const auto& row : rows) {
    if (row.report.num_classes != c) throw UsageError("comparative table mixes class counts");
    const ModelConfig& m = row.config;
    os << variant_name(m.variant) << ',' << aggregation_name(m.effective_aggregation()) << ','
       << (m.attention_active() ? 1 : 0) << ',' << m.m << ',' << kv_format(m.tau_u) << ',' << kv_format(m.alpha)
       << ',' << row.seed;
    for (const auto& r : row.report.recall) os << ',' << opt(r);
    for (const auto& a : row.report.ap.ap) os << ',' << opt(a);
    os << ',' << kv_format(row.report.ap.map) << ',' << kv_format(row.report.accuracy) << '\n';
  }
  return os.str();
}

}  // namespace dg

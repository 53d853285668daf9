// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "eval/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "common/errors.hpp"

namespace dg {
namespace {

void check_pairs(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                 std::size_t num_classes) {
  if (predictions.size() != labels.size()) {
    throw ShapeError("metrics: " + std::to_string(predictions.size()) + " predictions vs " +
                     std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes || predictions[i] >= num_classes) {
      throw ShapeError("metrics: class index out of range at sample " + std::to_string(i));
    }
  }
}

}  // namespace

std::vector<std::optional<double>> recall_per_class(std::span<const std::size_t> predictions,
                                                    std::span<const std::size_t> labels, std::size_t num_classes) {
  check_pairs(predictions, labels, num_classes);
  std::vector<std::size_t> hit(num_classes, 0), total(num_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++total[labels[i]];
    if (predictions[i] == labels[i]) ++hit[labels[i]];
  }
  std::vector<std::optional<double>> out(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (total[c]) out[c] = static_cast<double>(hit[c]) / static_cast<double>(total[c]);
  }
  return out;
}

double average_precision(std::span<const double> scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw ShapeError("average_precision: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (!positive[order[rank]]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
  }
  if (hits == 0) throw DataError("average_precision: no positives");
  return sum / static_cast<double>(hits);
}

ApReport mean_average_precision(const std::vector<std::vector<double>>& scores, std::span<const std::size_t> labels,
                                std::size_t num_classes) {
  if (scores.size() != labels.size()) throw ShapeError("mean_average_precision: length mismatch");
  ApReport out;
  out.ap.resize(num_classes);
  std::vector<double> column(scores.size());
  std::vector<bool> pos(scores.size());
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    bool any = false;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i].size() != num_classes) throw ShapeError("mean_average_precision: score row of wrong length");
      column[i] = scores[i][c];
      pos[i] = labels[i] == c;
      any = any || pos[i];
    }
    if (!any) {
      out.absent.push_back(c);
      continue;
    }
    out.ap[c] = average_precision(column, pos);
    sum += *out.ap[c];
    ++present;
  }
  if (present == 0) throw DataError("mean_average_precision: no class has positives");
  out.map = sum / static_cast<double>(present);
  return out;
}

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes) : n_(num_classes), counts_(num_classes * num_classes, 0) {}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted) {
  if (truth >= n_ || predicted >= n_) throw ShapeError("confusion: class index out of range");
  ++counts_[truth * n_ + predicted];
}

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::size_t s = 0;
  for (std::size_t p = 0; p < n_; ++p) s += at(truth, p);
  return s;
}

std::size_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0}); }

std::size_t ConfusionMatrix::trace() const {
  std::size_t s = 0;
  for (std::size_t c = 0; c < n_; ++c) s += at(c, c);
  return s;
}

double ConfusionMatrix::accuracy() const {
  const std::size_t t = total();
  return t ? static_cast<double>(trace()) / static_cast<double>(t) : 0.0;
}

std::vector<std::vector<double>> ConfusionMatrix::normalized() const {
  std::vector<std::vector<double>> out(n_, std::vector<double>(n_, 0.0));
  for (std::size_t t = 0; t < n_; ++t) {
    const std::size_t rs = row_sum(t);
    if (!rs) continue;
    for (std::size_t p = 0; p < n_; ++p) out[t][p] = static_cast<double>(at(t, p)) / static_cast<double>(rs);
  }
  return out;
}

ConfusionMatrix confusion(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                          std::size_t num_classes) {
  if (labels.empty()) throw DataError("confusion: no samples");
  check_pairs(predictions, labels, num_classes);
  ConfusionMatrix m(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) m.add(labels[i], predictions[i]);
  return m;
}

double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> labels) {
  if (predictions.size() != labels.size()) throw ShapeError("accuracy: length mismatch");
  if (labels.empty()) throw DataError("accuracy: no samples");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) ok += predictions[i] == labels[i];
  return static_cast<double>(ok) / static_cast<double>(labels.size());
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw ShapeError("argmax: empty input");
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace dg

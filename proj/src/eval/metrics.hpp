// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace dg {

// Per-class recall; classes without samples are absent (nullopt), not 0.
std::vector<std::optional<double>> recall_per_class(std::span<const std::size_t> predictions,
                                                    std::span<const std::size_t> labels, std::size_t num_classes);

struct ApReport {
  std::vector<std::optional<double>> ap;  // absent for classes without positives
  double map = 0.0;                       // mean over present classes
  std::vector<std::size_t> absent;        // flagged classes
};

// Non-interpolated AP: mean precision at the rank of every positive, ranking
// by score descending with ties kept in sample order.
double average_precision(std::span<const double> scores, const std::vector<bool>& positive);
ApReport mean_average_precision(const std::vector<std::vector<double>>& scores, std::span<const std::size_t> labels,
                                std::size_t num_classes);

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes);

  void add(std::size_t truth, std::size_t predicted);
  std::size_t num_classes() const { return n_; }
  std::size_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * n_ + predicted]; }
  std::size_t row_sum(std::size_t truth) const;
  std::size_t total() const;
  std::size_t trace() const;
  double accuracy() const;
  // Rows divided by their sums; empty rows stay zero.
  std::vector<std::vector<double>> normalized() const;

 private:
  std::size_t n_;
  std::vector<std::size_t> counts_;
};

// Rows are true classes, columns predictions. Empty input is rejected.
ConfusionMatrix confusion(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                          std::size_t num_classes);

double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> labels);

std::size_t argmax(std::span<const double> values);

}  // namespace dg

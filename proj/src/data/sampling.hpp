// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "data/dataset.hpp"

namespace dg {

// Swaps the pair order of a sample (labels are symmetric relations).
PairSample swap_pair(const PairSample& sample);
// Mirrors a sample horizontally; flipping twice restores the boxes.
PairSample flip_pair(const PairSample& sample, double image_width);

// Brings every class up to its target count with pair-swap and horizontal
// flip copies of its own samples (cycling swap, flip, swap+flip over the
// originals). Classes at or above their target are left untouched. Returns
// originals followed by the augmented copies.
std::vector<PairSample> oversample(const Dataset& dataset, std::span<const std::size_t> targets,
                                   std::size_t num_classes);

// Endless stream of class-balanced mini-batches: per-class counts within a
// batch differ by at most one; each class is drawn from its own reshuffled
// queue. Deterministic given the seed.
class StratifiedBatcher {
 public:
  StratifiedBatcher(std::span<const std::size_t> class_of_sample, std::size_t num_classes,
                    std::size_t batch_size, std::uint64_t seed);

  std::vector<std::size_t> next();
  std::size_t batches_per_epoch() const { return batches_per_epoch_; }

 private:
  std::size_t take(std::size_t cls);

  std::size_t batch_size_;
  std::size_t batches_per_epoch_;
  std::size_t batch_counter_ = 0;
  std::mt19937_64 rng_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<std::vector<std::size_t>> queues_;
  std::vector<std::size_t> cursor_;
};

}  // namespace dg

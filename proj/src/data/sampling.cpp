// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "data/sampling.hpp"

#include <algorithm>

#include "common/errors.hpp"
#include "vision/image.hpp"

namespace dg {
PairSample swap_pair(const PairSample& s) {
  PairSample out = s;
  std::swap(out.b1, out.b2);
  std::swap(out.person1, out.person2);
  out.swapped = !s.swapped;
  return out;
}

PairSample flip_pair(const PairSample& s, double image_width) {
  PairSample out = s;
  out.b1 = flip_box(s.b1, image_width);
  out.b2 = flip_box(s.b2, image_width);
  if (s.cue_box) out.cue_box = flip_box(*s.cue_box, image_width);
  out.flipped = !s.flipped;
  return out;
}

std::vector<PairSample> oversample(const Dataset& dataset, std::span<const std::size_t> targets,
                                   std::size_t num_classes) {
  if (targets.size() != num_classes) throw UsageError("oversample: one target per class required");
  std::vector<std::vector<const PairSample*>> by_class(num_classes);
  for (const auto& s : dataset.samples) by_class[class_index(s.label, num_classes)].push_back(&s);

  std::vector<PairSample> out(dataset.samples.begin(), dataset.samples.end());
  for (std::size_t c = 0; c < num_classes; ++c) {
    const auto& members = by_class[c];
    if (members.size() >= targets[c]) continue;
    if (members.empty()) {
      throw DataError("oversample: class " + class_name(c, num_classes) + " has no samples to augment");
    }
    std::size_t need = targets[c] - members.size();
    for (std::size_t round = 0; need > 0; ++round) {
      const int kind = static_cast<int>(round % 3);
      for (const PairSample* src : members) {
        if (need == 0) break;
        const double w = dataset.image(src->image_id).width;
        PairSample aug = kind == 0 ? swap_pair(*src) : kind == 1 ? flip_pair(*src, w)
                                                                 : flip_pair(swap_pair(*src), w);
        out.push_back(std::move(aug));
        --need;
      }
    }
  }
  return out;
}

StratifiedBatcher::StratifiedBatcher(std::span<const std::size_t> class_of_sample,
                                     std::size_t num_classes, std::size_t batch_size,
                                     std::uint64_t seed)
    : batch_size_(batch_size), rng_(seed), members_(num_classes), queues_(num_classes),
      cursor_(num_classes, 0) {
  if (batch_size == 0) throw UsageError("stratified batches: batch size must be positive");
  for (std::size_t i = 0; i < class_of_sample.size(); ++i) {
    if (class_of_sample[i] >= num_classes) throw DataError("stratified batches: class index out of range");
    members_[class_of_sample[i]].push_back(i);
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (members_[c].empty()) {
      throw DataError("stratified batches: class " + class_name(c, num_classes) + " has no samples");
    }
  }
  batches_per_epoch_ = std::max<std::size_t>(1, (class_of_sample.size() + batch_size - 1) / batch_size);
}

std::size_t StratifiedBatcher::take(std::size_t cls) {
  auto& q = queues_[cls];
  if (cursor_[cls] == q.size()) {
    q = members_[cls];
    std::shuffle(q.begin(), q.end(), rng_);
    cursor_[cls] = 0;
  }
  return q[cursor_[cls]++];
}

std::vector<std::size_t> StratifiedBatcher::next() {
  const std::size_t classes = members_.size();
  const std::size_t base = batch_size_ / classes, extra = batch_size_ % classes;
  std::vector<std::size_t> counts(classes, base);
  // Rotate which classes receive the remainder so long runs stay balanced.
  for (std::size_t j = 0; j < extra; ++j) ++counts[(batch_counter_ * extra + j) % classes];
  ++batch_counter_;
  std::vector<std::size_t> batch;
  batch.reserve(batch_size_);
  for (std::size_t c = 0; c < classes; ++c)
    for (std::size_t i = 0; i < counts[c]; ++i) batch.push_back(take(c));
  return batch;
}

}  // namespace dg

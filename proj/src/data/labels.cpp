// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "data/labels.hpp"

#include "common/errors.hpp"

namespace dg {

CoarseLabel map_hierarchy(FineLabel fine) {
  switch (fine) {
    case FineLabel::kFriends:
    case FineLabel::kFamily:
    case FineLabel::kCouple:
      return CoarseLabel::kIntimate;
    case FineLabel::kProfessional:
    case FineLabel::kCommercial:
      return CoarseLabel::kNonIntimate;
    case FineLabel::kNoRelation:
      return CoarseLabel::kNoRelation;
  }
  return CoarseLabel::kNoRelation;
}

namespace {
constexpr std::array<std::string_view, kNumFine> kFineNames = {
    "Friends", "Family", "Couple", "Professional", "Commercial", "NoRelation"};
constexpr std::array<std::string_view, kNumCoarse> kCoarseNames = {"Intimate", "NonIntimate",
                                                                   "NoRelation"};
}  // namespace

std::string_view label_name(FineLabel label) { return kFineNames[static_cast<std::size_t>(label)]; }
std::string_view label_name(CoarseLabel label) {
  return kCoarseNames[static_cast<std::size_t>(label)];
}

FineLabel parse_fine_label(std::string_view name) {
  for (std::size_t i = 0; i < kNumFine; ++i)
    if (kFineNames[i] == name) return static_cast<FineLabel>(i);
  throw DataError("unknown relationship label '" + std::string(name) + "'");
}

std::size_t class_index(FineLabel label, std::size_t num_classes) {
  if (num_classes == kNumFine) return static_cast<std::size_t>(label);
  if (num_classes == kNumCoarse) return static_cast<std::size_t>(map_hierarchy(label));
  throw UsageError("num_classes must be 3 or 6");
}

std::string class_name(std::size_t index, std::size_t num_classes) {
  if (num_classes == kNumFine && index < kNumFine) return std::string(kFineNames[index]);
  if (num_classes == kNumCoarse && index < kNumCoarse) return std::string(kCoarseNames[index]);
  throw UsageError("class index out of range");
}

std::optional<FineLabel> majority_vote(std::span<const Vote> votes) {
  if (votes.size() != 5) {
    throw DataError("majority_vote: expected 5 votes, got " + std::to_string(votes.size()));
  }
  std::array<int, kNumFine> counts{};
  for (const auto& v : votes)
    if (v) ++counts[static_cast<std::size_t>(*v)];
  for (std::size_t i = 0; i < kNumFine; ++i)
    if (counts[i] >= 3) return static_cast<FineLabel>(i);
  return std::nullopt;
}

double agreement_rate(std::span<const VoteRecord> records) {
  if (records.empty()) throw DataError("agreement_rate: no records");
  std::size_t agree = 0, total = 0;
  for (const auto& r : records) {
    const auto label = majority_vote(r.votes);
    if (!label) throw DataError("agreement_rate: record '" + r.sample_id + "' has no valid majority");
    for (const auto& v : r.votes)
      if (v == label) ++agree;
    total += r.votes.size();
  }
  return static_cast<double>(agree) / static_cast<double>(total);
}

}  // namespace dg

// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dg {

enum class FineLabel { kFriends, kFamily, kCouple, kProfessional, kCommercial, kNoRelation };
enum class CoarseLabel { kIntimate, kNonIntimate, kNoRelation };

inline constexpr std::size_t kNumFine = 6;
inline constexpr std::size_t kNumCoarse = 3;

CoarseLabel map_hierarchy(FineLabel fine);

std::string_view label_name(FineLabel label);
std::string_view label_name(CoarseLabel label);
// Throws DataError for unknown names.
FineLabel parse_fine_label(std::string_view name);

// Class index of a fine label in a 3- or 6-class task.
std::size_t class_index(FineLabel label, std::size_t num_classes);
std::string class_name(std::size_t index, std::size_t num_classes);

// One annotator judgement; std::nullopt is "not sure".
using Vote = std::optional<FineLabel>;

struct VoteRecord {
  std::string sample_id;
  std::vector<Vote> votes;  // exactly 5
};

// Strict majority of five votes: a label with at least three votes wins.
// Splits such as 2-2-1 or 2-1-1-1 and any "not sure" plurality are invalid
// (std::nullopt). Throws DataError unless exactly five votes are given.
std::optional<FineLabel> majority_vote(std::span<const Vote> votes);

// Fraction of all judgements that agree with their record's majority label.
// Throws DataError on empty input or on a record without a valid majority.
double agreement_rate(std::span<const VoteRecord> records);

}  // namespace dg

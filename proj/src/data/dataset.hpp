// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "data/labels.hpp"
#include "geometry/geometry.hpp"
#include "vision/image.hpp"

namespace dg {

enum class Split { kUnassigned, kTrain, kTest };
std::string_view split_name(Split split);

struct PersonRecord {
  std::size_t index = 0;
  Box box;
  std::string occupation;  // parsed and preserved, unused by the model
};

struct ImageRecord {
  std::string id;
  double width = 0.0;
  double height = 0.0;
  Split split = Split::kUnassigned;
  std::string file;  // relative to the image root
  std::vector<PersonRecord> persons;

  const PersonRecord& person(std::size_t index) const;
};

struct PairSample {
  std::string image_id;
  std::size_t person1 = 0;
  std::size_t person2 = 0;
  Box b1;
  Box b2;
  FineLabel label = FineLabel::kNoRelation;
  Split split = Split::kUnassigned;
  std::optional<std::vector<Vote>> votes;  // raw votes when the source had them

  // Augmentation state. Flipped samples mirror pixels and proposals at load
  // time instead of storing a mirrored copy.
  bool swapped = false;
  bool flipped = false;

  // Synthetic ground truth (absent for ingested data).
  std::optional<Box> cue_box;
  bool cue_dependent = false;

  // "original", "swap", "flip" or "swap+flip".
  std::string provenance() const;
  std::string id() const;
};

class Dataset {
 public:
  std::map<std::string, ImageRecord> images;
  std::vector<PairSample> samples;
  ProposalTable proposals;
  std::filesystem::path image_root;

  const ImageRecord& image(const std::string& id) const;

  // Pixels of an image, decoded on first use and cached; in-memory datasets
  // register them with put_pixels.
  std::shared_ptr<const ImagePlane> pixels(const std::string& image_id) const;
  void put_pixels(const std::string& image_id, ImagePlane image);

  // Image and proposals as seen by a sample (mirrored when flipped).
  ImagePlane sample_image(const PairSample& sample) const;
  std::vector<Proposal> sample_proposals(const PairSample& sample) const;

  Dataset subset(Split split) const;
  std::array<std::size_t, kNumFine> fine_counts() const;

 private:
  mutable std::map<std::string, std::shared_ptr<const ImagePlane>> pixel_cache_;
};

struct IngestReport {
  std::size_t images = 0;
  std::size_t samples = 0;
  std::size_t invalid_votes = 0;  // pairs whose raw votes had no majority
  std::array<std::size_t, kNumFine> counts{};
  std::optional<double> agreement;  // present when raw votes were parsed
  std::array<std::optional<double>, kNumFine> class_agreement{};
  std::vector<std::string> missing_images;
};

// Annotation text format (docs/formats.md):
//   image <id> <width> <height> [split=train|test] [file=<path>]
//   person <index> <xmin> <ymin> <xmax> <ymax> [occupation=<name>]
//   pair <i> <j> label <Fine> [cue=x0,y0,x1,y1] [dependent=1]
//   pair <i> <j> votes <v1> .. <v5>        (NotSure allowed)
//   end
// Malformed records are collected and reported together (DataError listing
// line numbers). Samples whose image file is missing are dropped and listed.
struct ParseOptions {
  bool check_images = true;
};
Dataset parse_annotations(const std::filesystem::path& annotation_path,
                          const std::filesystem::path& image_root, IngestReport* report = nullptr,
                          ParseOptions options = {});
void write_annotations(const std::filesystem::path& path, const Dataset& dataset);

struct SplitSpec {
  double test_fraction = 0.2;
  // Balanced mode: aim for per_class_target test samples of every class
  // (0 = derive from test_fraction).
  bool balanced = false;
  std::size_t per_class_target = 0;
  std::uint64_t seed = 0;
};

struct SplitResult {
  Dataset train;
  Dataset test;
  std::array<std::size_t, kNumFine> shortfall{};  // balanced mode only
};

// Splits by image id so that no image straddles the two sides.
SplitResult split_dataset(const Dataset& dataset, const SplitSpec& spec);

}  // namespace dg

// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace dg {

// Axis-aligned rectangle in continuous pixel coordinates.
struct Box {
  double xmin = 0.0, ymin = 0.0, xmax = 1.0, ymax = 1.0;

  // Throws DataError unless the box is finite with positive area.
  static Box checked(double xmin, double ymin, double xmax, double ymax);

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  bool valid() const;
  bool contains(const Box& other) const;

  friend bool operator==(const Box&, const Box&) = default;
};

struct Proposal {
  Box box;
  double objectness = 0.0;  // in [0, 1]
};

// {xmin, ymin, xmax, ymax, area} relative to the image extent.
using GeometryFeature = std::array<double, 5>;

struct NormalizerStats {
  std::array<double, 5> mean{};
  std::array<double, 5> stddev{};
};

double iou(const Box& a, const Box& b);
Box union_box(const Box& a, const Box& b);

GeometryFeature geometry_feature(const Box& box, double image_width, double image_height);

// Population statistics; a zero-variance component throws DataError naming
// the component index.
NormalizerStats fit_normalizer(std::span<const GeometryFeature> features);
std::array<double, 5> apply_normalizer(const NormalizerStats& stats, const GeometryFeature& feature);

// Greedy suppression by descending objectness (stable for ties). Survivors
// overlap pairwise by at most iou_threshold.
std::vector<Proposal> nms(std::span<const Proposal> proposals, double iou_threshold);

// Keeps proposals c with max(iou(c, b1), iou(c, b2)) < tau_u, then the m with
// highest objectness (ties by input order), sorted by objectness descending.
std::vector<Proposal> select_context_regions(std::span<const Proposal> proposals, const Box& b1,
                                             const Box& b2, double tau_u, std::size_t m);

// Proposals text file: "image <id> <count>" followed by <count> rows of
// "xmin ymin xmax ymax objectness". '#' starts a comment line.
using ProposalTable = std::map<std::string, std::vector<Proposal>>;
ProposalTable read_proposals(const std::filesystem::path& path);
void write_proposals(const std::filesystem::path& path, const ProposalTable& table);

}  // namespace dg

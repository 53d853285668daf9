// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "geometry/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "common/errors.hpp"

namespace dg {

Box Box::checked(double xmin, double ymin, double xmax, double ymax) {
  Box b{xmin, ymin, xmax, ymax};
  if (!b.valid()) {
    std::ostringstream os;
    os << "invalid box (" << xmin << ',' << ymin << ',' << xmax << ',' << ymax
       << "): need finite coordinates with xmin < xmax and ymin < ymax";
    throw DataError(os.str());
  }
  return b;
}

bool Box::valid() const {
  return std::isfinite(xmin) && std::isfinite(ymin) && std::isfinite(xmax) && std::isfinite(ymax) &&
         xmin < xmax && ymin < ymax;
}

bool Box::contains(const Box& o) const {
  return xmin <= o.xmin && ymin <= o.ymin && xmax >= o.xmax && ymax >= o.ymax;
}

double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  const double ih = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

Box union_box(const Box& a, const Box& b) {
  return {std::min(a.xmin, b.xmin), std::min(a.ymin, b.ymin), std::max(a.xmax, b.xmax),
          std::max(a.ymax, b.ymax)};
}

GeometryFeature geometry_feature(const Box& box, double image_width, double image_height) {
  if (!(image_width > 0.0) || !(image_height > 0.0)) {
    throw DataError("geometry_feature: image extent must be positive");
  }
  if (box.xmax <= 0.0 || box.ymax <= 0.0 || box.xmin >= image_width || box.ymin >= image_height) {
    throw DataError("geometry_feature: box does not intersect the image");
  }
  const double x0 = box.xmin / image_width, x1 = box.xmax / image_width;
  const double y0 = box.ymin / image_height, y1 = box.ymax / image_height;
  return {x0, y0, x1, y1, (x1 - x0) * (y1 - y0)};
}

NormalizerStats fit_normalizer(std::span<const GeometryFeature> features) {
  if (features.size() < 2) throw DataError("fit_normalizer: need at least two features");
  NormalizerStats s;
  const double n = static_cast<double>(features.size());
  for (std::size_t c = 0; c < 5; ++c) {
    double m = 0.0;
    for (const auto& f : features) m += f[c];
    m /= n;
    double var = 0.0;
    for (const auto& f : features) var += (f[c] - m) * (f[c] - m);
    var /= n;
    if (!(var > 0.0)) {
      throw DataError("fit_normalizer: component " + std::to_string(c) + " has zero variance");
    }
    s.mean[c] = m;
    s.stddev[c] = std::sqrt(var);
  }
  return s;
}

std::array<double, 5> apply_normalizer(const NormalizerStats& stats, const GeometryFeature& f) {
  std::array<double, 5> out{};
  for (std::size_t c = 0; c < 5; ++c) out[c] = (f[c] - stats.mean[c]) / stats.stddev[c];
  return out;
}

namespace {

std::vector<std::size_t> by_objectness(std::span<const Proposal> proposals) {
  std::vector<std::size_t> order(proposals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return proposals[a].objectness > proposals[b].objectness;
  });
  return order;
}

}  // namespace

std::vector<Proposal> nms(std::span<const Proposal> proposals, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw UsageError("nms: threshold must lie in (0, 1]");
  }
  std::vector<Proposal> kept;
  for (auto idx : by_objectness(proposals)) {
    const auto& cand = proposals[idx];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Proposal& k) {
      return iou(k.box, cand.box) > iou_threshold;
    });
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

std::vector<Proposal> select_context_regions(std::span<const Proposal> proposals, const Box& b1,
                                             const Box& b2, double tau_u, std::size_t m) {
  if (!(tau_u > 0.0 && tau_u <= 1.0)) throw UsageError("select_context_regions: tau_u must lie in (0, 1]");
  std::vector<Proposal> out;
  for (auto idx : by_objectness(proposals)) {
    if (out.size() == m) break;
    const auto& c = proposals[idx];
    if (std::max(iou(c.box, b1), iou(c.box, b2)) < tau_u) out.push_back(c);
  }
  return out;
}

ProposalTable read_proposals(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open proposals file: " + path.string());
  ProposalTable table;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& why) {
    throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag, id;
    std::size_t count = 0;
    if (!(ls >> tag >> id >> count) || tag != "image") fail("expected 'image <id> <count>'");
    auto& rows = table[id];
    for (std::size_t i = 0; i < count; ++i) {
      if (!std::getline(in, line)) fail("missing proposal rows for image " + id);
      ++lineno;
      std::istringstream rs(line);
      double x0, y0, x1, y1, obj;
      if (!(rs >> x0 >> y0 >> x1 >> y1 >> obj)) fail("expected 'xmin ymin xmax ymax objectness'");
      if (!(obj >= 0.0 && obj <= 1.0)) fail("objectness outside [0,1]");
      Box b{x0, y0, x1, y1};
      if (!b.valid()) fail("degenerate proposal box");
      rows.push_back({b, obj});
    }
  }
  return table;
}

void write_proposals(const std::filesystem::path& path, const ProposalTable& table) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write proposals file: " + path.string());
  out << std::setprecision(17);
  for (const auto& [id, rows] : table) {
    out << "image " << id << ' ' << rows.size() << '\n';
    for (const auto& p : rows) {
      out << p.box.xmin << ' ' << p.box.ymin << ' ' << p.box.xmax << ' ' << p.box.ymax << ' '
          << p.objectness << '\n';
    }
  }
}

}  // namespace dg

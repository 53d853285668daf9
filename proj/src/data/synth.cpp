// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "data/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "common/errors.hpp"
#include "common/hash.hpp"

namespace dg {
namespace {

using Rgb = std::array<double, 3>;

constexpr Rgb kSkin = {0.95, 0.75, 0.60};
constexpr Rgb kLegs = {0.30, 0.30, 0.30};

Rgb shirt(Glyph g) {
  switch (g) {
    case Glyph::kCasual: return {0.20, 0.65, 0.25};
    case Glyph::kFormal: return {0.15, 0.15, 0.45};
    case Glyph::kPartnerA: return {0.85, 0.15, 0.15};
    case Glyph::kPartnerB: return {0.95, 0.50, 0.70};
    case Glyph::kChild: return {0.95, 0.55, 0.10};
  }
  return {0.0, 0.0, 0.0};
}

struct Rect {
  int x0, y0, x1, y1;  // half-open pixel rectangle
  Box box() const {
    return {static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x1),
            static_cast<double>(y1)};
  }
  bool overlaps(const Rect& o, int margin = 0) const {
    return x0 < o.x1 + margin && o.x0 < x1 + margin && y0 < o.y1 + margin && o.y0 < y1 + margin;
  }
};

class Canvas {
 public:
  Canvas(std::size_t size, std::mt19937_64& rng, double noise) : img_(ImagePlane::filled(size, size, 0.0)) {
    std::uniform_real_distribution<double> tint(-0.05, 0.05), jitter(-noise, noise);
    const Rgb bg = {0.85 + tint(rng), 0.85 + tint(rng), 0.80 + tint(rng)};
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) img_.at(c, y, x) = std::clamp(bg[c] + jitter(rng), 0.0, 1.0);
  }

  void fill(int x0, int y0, int x1, int y1, const Rgb& color) {
    const int n = static_cast<int>(img_.width);
    for (int y = std::max(y0, 0); y < std::min(y1, n); ++y)
      for (int x = std::max(x0, 0); x < std::min(x1, n); ++x)
        for (std::size_t c = 0; c < 3; ++c)
          img_.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = color[c];
  }

  ImagePlane take() { return std::move(img_); }

 private:
  ImagePlane img_;
};

int glyph_width(Glyph g) { return g == Glyph::kChild ? 4 : 5; }
int glyph_height(Glyph g) { return g == Glyph::kChild ? 8 : 11; }

void draw_person(Canvas& cv, Glyph g, int x, int y) {
  if (g == Glyph::kChild) {
    cv.fill(x + 1, y, x + 3, y + 2, kSkin);
    cv.fill(x, y + 2, x + 4, y + 6, shirt(g));
    cv.fill(x, y + 6, x + 1, y + 8, kLegs);
    cv.fill(x + 3, y + 6, x + 4, y + 8, kLegs);
    return;
  }
  cv.fill(x + 1, y, x + 4, y + 3, kSkin);
  cv.fill(x, y + 3, x + 5, y + 8, shirt(g));
  cv.fill(x + 1, y + 8, x + 2, y + 11, kLegs);
  cv.fill(x + 3, y + 8, x + 4, y + 11, kLegs);
}

constexpr int kCueW = 6, kCueH = 5;

void draw_cue(Canvas& cv, CueObject cue, int x, int y) {
  if (cue == CueObject::kDesk) {
    cv.fill(x + 1, y, x + 5, y + 3, {0.20, 0.80, 0.90});
    cv.fill(x, y + 3, x + 6, y + 5, {0.55, 0.35, 0.15});
  } else {
    cv.fill(x, y, x + 6, y + 5, {0.95, 0.85, 0.10});
    cv.fill(x, y + 2, x + 6, y + 3, {0.85, 0.10, 0.10});
  }
}

void draw_clutter(Canvas& cv, int kind, const Rect& r) {
  static constexpr std::array<Rgb, 3> kColors = {Rgb{0.50, 0.20, 0.60}, Rgb{0.10, 0.50, 0.50},
                                                 Rgb{0.50, 0.50, 0.50}};
  const Rgb& col = kColors[static_cast<std::size_t>(kind) % kColors.size()];
  if (kind == 0) {  // ball: rounded square
    cv.fill(r.x0 + 1, r.y0, r.x1 - 1, r.y1, col);
    cv.fill(r.x0, r.y0 + 1, r.x1, r.y1 - 1, col);
  } else if (kind == 1) {  // plant: stepped triangle on a stem
    const int w = r.x1 - r.x0;
    for (int row = r.y0; row < r.y1 - 1; ++row) {
      const int inset = std::max(0, (r.y1 - 1 - row) * w / (2 * (r.y1 - r.y0)));
      cv.fill(r.x0 + inset, row, r.x1 - inset, row + 1, col);
    }
    cv.fill(r.x0 + w / 2, r.y1 - 1, r.x0 + w / 2 + 1, r.y1, kLegs);
  } else {  // crate
    cv.fill(r.x0, r.y0, r.x1, r.y1, col);
    cv.fill(r.x0 + 1, r.y0 + 1, r.x1 - 1, r.y1 - 1, {0.65, 0.65, 0.65});
  }
}

struct PairLayout {
  Glyph g1, g2;
  bool near;
};

PairLayout layout_for(FineLabel label, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  switch (label) {
    case FineLabel::kFriends: return {Glyph::kCasual, Glyph::kCasual, true};
    case FineLabel::kFamily:
      return coin(rng) ? PairLayout{Glyph::kCasual, Glyph::kChild, true}
                       : PairLayout{Glyph::kChild, Glyph::kCasual, true};
    case FineLabel::kCouple:
      return coin(rng) ? PairLayout{Glyph::kPartnerA, Glyph::kPartnerB, true}
                       : PairLayout{Glyph::kPartnerB, Glyph::kPartnerA, true};
    case FineLabel::kNoRelation:
      return coin(rng) ? PairLayout{Glyph::kCasual, Glyph::kCasual, false}
                       : PairLayout{Glyph::kFormal, Glyph::kFormal, true};
    case FineLabel::kProfessional:
    case FineLabel::kCommercial: return {Glyph::kFormal, Glyph::kFormal, true};
  }
  return {Glyph::kCasual, Glyph::kCasual, true};
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Places a w x h rectangle inside the canvas avoiding `taken`.
std::optional<Rect> place(std::mt19937_64& rng, int canvas, int w, int h, const std::vector<Rect>& taken) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    const int x = uniform_int(rng, 1, canvas - w - 1);
    const int y = uniform_int(rng, 1, canvas - h - 1);
    Rect r{x, y, x + w, y + h};
    if (std::none_of(taken.begin(), taken.end(), [&](const Rect& t) { return r.overlaps(t, 1); })) {
      return r;
    }
  }
  return std::nullopt;
}

struct Scene {
  ImagePlane image;
  Rect p1, p2;
  std::optional<Rect> cue_rect;
  std::vector<Rect> objects;  // every rendered object, persons first
};

std::optional<Scene> try_render(const SyntheticSceneSpec& spec, FineLabel label, const PairLayout& lay,
                                std::mt19937_64& rng) {
  const int n = static_cast<int>(spec.canvas);
  const int w1 = glyph_width(lay.g1), w2 = glyph_width(lay.g2);
  const int h1 = glyph_height(lay.g1), h2 = glyph_height(lay.g2);
  const bool formal = lay.g1 == Glyph::kFormal;
  const int gap = lay.near ? (formal ? uniform_int(rng, 1, 4) : uniform_int(rng, 0, 2))
                           : uniform_int(rng, 8, std::max(8, n / 2 - 2));
  const int total = w1 + gap + w2;
  if (total + 2 > n) return std::nullopt;
  const int x = uniform_int(rng, 1, n - total - 1);
  const int base = uniform_int(rng, std::max(h1, h2) + 1, n - 1);  // feet line
  const int y1 = base - h1 + uniform_int(rng, -1, 1);
  const int y2 = base - h2 + uniform_int(rng, -1, 1);
  Scene s{ImagePlane{}, {x, y1, x + w1, y1 + h1}, {x + w1 + gap, y2, x + w1 + gap + w2, y2 + h2}, std::nullopt, {}};
  if (s.p1.y0 < 0 || s.p2.y0 < 0 || s.p1.y1 > n || s.p2.y1 > n) return std::nullopt;
  const Rect uni{std::min(s.p1.x0, s.p2.x0), std::min(s.p1.y0, s.p2.y0), std::max(s.p1.x1, s.p2.x1),
                 std::max(s.p1.y1, s.p2.y1)};

  Canvas cv(spec.canvas, rng, spec.pixel_noise);
  draw_person(cv, lay.g1, s.p1.x0, s.p1.y0);
  draw_person(cv, lay.g2, s.p2.x0, s.p2.y0);
  s.objects = {s.p1, s.p2};
  std::vector<Rect> taken = {uni};

  std::optional<CueObject> cue;
  bool planted = false;
  if (auto it = spec.cue_for_label.find(label); it != spec.cue_for_label.end()) {
    cue = it->second;
    planted = true;
  } else if (!formal && std::bernoulli_distribution(spec.decoy_rate)(rng)) {
    cue = std::bernoulli_distribution(0.5)(rng) ? CueObject::kDesk : CueObject::kCounter;
  }
  if (cue && spec.cues_enabled) {
    auto r = place(rng, n, kCueW, kCueH, taken);
    if (!r) return std::nullopt;
    draw_cue(cv, *cue, r->x0, r->y0);
    if (planted) s.cue_rect = *r;
    s.objects.push_back(*r);
    taken.push_back(*r);
  }
  const int clutter = uniform_int(rng, static_cast<int>(spec.clutter_min), static_cast<int>(spec.clutter_max));
  for (int i = 0; i < clutter; ++i) {
    const int w = uniform_int(rng, 4, 6), h = uniform_int(rng, 4, 6);
    auto r = place(rng, n, w, h, taken);
    if (!r) continue;
    draw_clutter(cv, uniform_int(rng, 0, 2), *r);
    s.objects.push_back(*r);
    taken.push_back(*r);
  }
  s.image = cv.take();
  return s;
}

std::vector<Proposal> make_proposals(const SyntheticSceneSpec& spec, const Scene& scene, std::mt19937_64& rng) {
  const double n = static_cast<double>(spec.canvas);
  std::uniform_real_distribution<double> strong(0.8, 1.0), medium(0.3, 0.75), weak(0.05, 0.5);
  std::uniform_real_distribution<double> shift(-spec.jitter_px, spec.jitter_px);
  std::vector<Proposal> out;
  auto clip = [&](Box b) {
    b.xmin = std::clamp(b.xmin, 0.0, n - 1.0);
    b.ymin = std::clamp(b.ymin, 0.0, n - 1.0);
    b.xmax = std::clamp(b.xmax, b.xmin + 1.0, n);
    b.ymax = std::clamp(b.ymax, b.ymin + 1.0, n);
    return b;
  };
  for (const auto& r : scene.objects) {
    out.push_back({r.box(), strong(rng)});
    for (std::size_t j = 0; j < spec.jitter_copies; ++j) {
      Box b = r.box();
      b.xmin += shift(rng);
      b.ymin += shift(rng);
      b.xmax += shift(rng);
      b.ymax += shift(rng);
      out.push_back({clip(b), medium(rng)});
    }
  }
  std::uniform_real_distribution<double> side(3.0, 10.0), pos(0.0, 1.0);
  for (std::size_t j = 0; j < spec.random_proposals; ++j) {
    const double w = side(rng), h = side(rng);
    const double x = pos(rng) * (n - w), y = pos(rng) * (n - h);
    out.push_back({clip({x, y, x + w, y + h}), weak(rng)});
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

}  // namespace

void SyntheticSceneSpec::validate() const {
  if (canvas < 24) throw UsageError("synthetic spec: canvas must be at least 24 pixels");
  for (auto label : {FineLabel::kProfessional, FineLabel::kCommercial}) {
    if (!cue_for_label.count(label)) {
      throw UsageError("synthetic spec: context-dependent label " + std::string(label_name(label)) +
                       " has no planted cue");
    }
  }
  if (cue_for_label.at(FineLabel::kProfessional) == cue_for_label.at(FineLabel::kCommercial)) {
    throw UsageError("synthetic spec: context-dependent labels must use distinct cues");
  }
  if (clutter_min > clutter_max) throw UsageError("synthetic spec: clutter_min > clutter_max");
  if (!(decoy_rate >= 0.0 && decoy_rate <= 1.0)) throw UsageError("synthetic spec: decoy_rate outside [0,1]");
  if (!(jitter_px >= 0.0) || !(pixel_noise >= 0.0)) throw UsageError("synthetic spec: negative jitter or noise");
}

std::string SyntheticSceneSpec::str() const {
  std::ostringstream os;
  os << std::setprecision(17) << "canvas=" << canvas << " cues=" << cues_enabled << " decoy=" << decoy_rate
     << " clutter=" << clutter_min << '-' << clutter_max << " jitter_copies=" << jitter_copies
     << " jitter_px=" << jitter_px << " random_proposals=" << random_proposals << " noise=" << pixel_noise;
  for (const auto& [label, cue] : cue_for_label) os << " cue." << label_name(label) << '=' << static_cast<int>(cue);
  return os.str();
}

FineLabel oracle_label(const SceneTruth& t, const SyntheticSceneSpec& spec) {
  auto has = [&](Glyph g) { return t.glyph1 == g || t.glyph2 == g; };
  if (has(Glyph::kChild)) return FineLabel::kFamily;
  if (has(Glyph::kPartnerA) || has(Glyph::kPartnerB)) return FineLabel::kCouple;
  if (has(Glyph::kFormal)) {
    for (const auto& [label, cue] : spec.cue_for_label)
      if (t.cue == cue) return label;
    return FineLabel::kNoRelation;
  }
  return t.near ? FineLabel::kFriends : FineLabel::kNoRelation;
}

SyntheticData synth_generate(const SyntheticSceneSpec& spec, std::size_t n_train, std::size_t n_test,
                             std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  SyntheticData out;
  const double n = static_cast<double>(spec.canvas);
  std::size_t serial = 0;
  for (Split split : {Split::kTrain, Split::kTest}) {
    const std::size_t count = split == Split::kTrain ? n_train : n_test;
    std::vector<FineLabel> labels(count);
    for (std::size_t i = 0; i < count; ++i) labels[i] = static_cast<FineLabel>(i % kNumFine);
    std::shuffle(labels.begin(), labels.end(), rng);
    for (FineLabel label : labels) {
      std::optional<Scene> scene;
      PairLayout lay{};
      while (!scene) {
        lay = layout_for(label, rng);
        scene = try_render(spec, label, lay, rng);
      }
      std::ostringstream id;
      id << 's' << std::setw(6) << std::setfill('0') << serial++;
      ImageRecord rec;
      rec.id = id.str();
      rec.width = n;
      rec.height = n;
      rec.split = split;
      rec.file = "images/" + rec.id + ".dgim";
      rec.persons = {{0, scene->p1.box(), ""}, {1, scene->p2.box(), ""}};

      PairSample s;
      s.image_id = rec.id;
      s.person1 = 0;
      s.person2 = 1;
      s.b1 = scene->p1.box();
      s.b2 = scene->p2.box();
      s.label = label;
      s.split = split;
      s.cue_dependent = spec.cue_for_label.count(label) > 0;
      if (scene->cue_rect) s.cue_box = scene->cue_rect->box();

      SceneTruth truth{lay.g1, lay.g2, lay.near, std::nullopt};
      if (s.cue_dependent) truth.cue = spec.cue_for_label.at(label);

      out.dataset.proposals[rec.id] = make_proposals(spec, *scene, rng);
      out.dataset.put_pixels(rec.id, std::move(scene->image));
      out.dataset.images.emplace(rec.id, std::move(rec));
      out.dataset.samples.push_back(std::move(s));
      out.truths.push_back(truth);
    }
  }
  return out;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& dataset,
                  const std::map<std::string, std::string>& manifest_extra) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");
  std::vector<std::string> files = {"annotations.txt", "proposals.txt"};
  write_annotations(dir / "annotations.txt", dataset);
  write_proposals(dir / "proposals.txt", dataset.proposals);
  for (const auto& [id, rec] : dataset.images) {
    fs::create_directories((dir / rec.file).parent_path());
    write_raw_image(dir / rec.file, *dataset.pixels(id));
    files.push_back(rec.file);
  }
  std::ofstream ms(dir / "manifest.txt", std::ios::trunc);
  if (!ms) throw IoError("cannot write manifest in " + dir.string());
  for (const auto& [k, v] : manifest_extra) ms << "meta " << k << ' ' << v << '\n';
  for (const auto& f : files) ms << "file " << f << ' ' << sha256_file(dir / f) << '\n';
}

Dataset load_dataset(const std::filesystem::path& dir, IngestReport* report) {
  Dataset ds = parse_annotations(dir / "annotations.txt", dir, report);
  if (std::filesystem::exists(dir / "proposals.txt")) ds.proposals = read_proposals(dir / "proposals.txt");
  return ds;
}

}  // namespace dg

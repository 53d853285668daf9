// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "data/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "common/errors.hpp"

namespace dg {

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kTest:
      return "test";
    case Split::kUnassigned:
      break;
  }
  return "none";
}

const PersonRecord& ImageRecord::person(std::size_t index) const {
  for (const auto& p : persons)
    if (p.index == index) return p;
  throw DataError("image " + id + " has no person " + std::to_string(index));
}

std::string PairSample::provenance() const {
  if (swapped && flipped) return "swap+flip";
  if (swapped) return "swap";
  if (flipped) return "flip";
  return "original";
}

std::string PairSample::id() const {
  std::string s = image_id + ":" + std::to_string(person1) + "-" + std::to_string(person2);
  if (swapped || flipped) s += "/" + provenance();
  return s;
}

const ImageRecord& Dataset::image(const std::string& id) const {
  auto it = images.find(id);
  if (it == images.end()) throw DataError("unknown image id '" + id + "'");
  return it->second;
}

std::shared_ptr<const ImagePlane> Dataset::pixels(const std::string& image_id) const {
  if (auto it = pixel_cache_.find(image_id); it != pixel_cache_.end()) return it->second;
  const auto& rec = image(image_id);
  auto img = std::make_shared<const ImagePlane>(load_image(image_root / rec.file));
  pixel_cache_[image_id] = img;
  return img;
}

void Dataset::put_pixels(const std::string& image_id, ImagePlane image) {
  pixel_cache_[image_id] = std::make_shared<const ImagePlane>(std::move(image));
}

ImagePlane Dataset::sample_image(const PairSample& sample) const {
  const auto img = pixels(sample.image_id);
  return sample.flipped ? flip_horizontal(*img) : *img;
}

std::vector<Proposal> Dataset::sample_proposals(const PairSample& sample) const {
  auto it = proposals.find(sample.image_id);
  if (it == proposals.end()) return {};
  std::vector<Proposal> out = it->second;
  if (sample.flipped) {
    const double w = image(sample.image_id).width;
    for (auto& p : out) p.box = flip_box(p.box, w);
  }
  return out;
}

Dataset Dataset::subset(Split split) const {
  Dataset out;
  out.image_root = image_root;
  out.pixel_cache_ = pixel_cache_;
  for (const auto& s : samples) {
    if (s.split != split) continue;
    out.samples.push_back(s);
    out.images.emplace(s.image_id, image(s.image_id));
    if (auto it = proposals.find(s.image_id); it != proposals.end()) out.proposals.insert(*it);
  }
  return out;
}

std::array<std::size_t, kNumFine> Dataset::fine_counts() const {
  std::array<std::size_t, kNumFine> c{};
  for (const auto& s : samples) ++c[static_cast<std::size_t>(s.label)];
  return c;
}

namespace {

// Splits "key=value" attributes off the tail of a token stream.
std::map<std::string, std::string> read_attributes(std::istringstream& ls) {
  std::map<std::string, std::string> attrs;
  std::string tok;
  while (ls >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw DataError("unexpected token '" + tok + "'");
    attrs[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return attrs;
}

Box parse_box_attr(const std::string& text) {
  std::istringstream is(text);
  double v[4];
  char comma;
  if (!(is >> v[0] >> comma >> v[1] >> comma >> v[2] >> comma >> v[3])) {
    throw DataError("bad box attribute '" + text + "'");
  }
  return Box::checked(v[0], v[1], v[2], v[3]);
}

}  // namespace

Dataset parse_annotations(const std::filesystem::path& annotation_path,
                          const std::filesystem::path& image_root, IngestReport* report,
                          ParseOptions options) {
  std::ifstream in(annotation_path);
  if (!in) throw IoError("cannot open annotation file: " + annotation_path.string());

  Dataset ds;
  ds.image_root = image_root;
  IngestReport rep;
  std::vector<std::string> errors;
  std::vector<VoteRecord> vote_records;

  ImageRecord* current = nullptr;
  std::vector<PairSample> pending;
  std::string line;
  std::size_t lineno = 0;

  auto close_image = [&]() {
    if (!current) return;
    for (auto& s : pending) ds.samples.push_back(std::move(s));
    pending.clear();
    current = nullptr;
  };

  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    try {
      if (tag == "image") {
        if (current) throw DataError("'image' before 'end' of previous image");
        ImageRecord rec;
        if (!(ls >> rec.id >> rec.width >> rec.height) || !(rec.width > 0) || !(rec.height > 0)) {
          throw DataError("expected 'image <id> <width> <height>'");
        }
        if (ds.images.count(rec.id)) throw DataError("duplicate image id '" + rec.id + "'");
        auto attrs = read_attributes(ls);
        rec.file = attrs.count("file") ? attrs["file"] : rec.id + ".dgim";
        if (attrs.count("split")) {
          const auto& sp = attrs["split"];
          if (sp == "train") rec.split = Split::kTrain;
          else if (sp == "test") rec.split = Split::kTest;
          else throw DataError("unknown split '" + sp + "'");
        }
        current = &ds.images.emplace(rec.id, rec).first->second;
      } else if (tag == "person") {
        if (!current) throw DataError("'person' outside an image record");
        PersonRecord p;
        double x0, y0, x1, y1;
        if (!(ls >> p.index >> x0 >> y0 >> x1 >> y1)) {
          throw DataError("expected 'person <index> <xmin> <ymin> <xmax> <ymax>'");
        }
        p.box = Box::checked(x0, y0, x1, y1);
        auto attrs = read_attributes(ls);
        if (attrs.count("occupation")) p.occupation = attrs["occupation"];
        for (const auto& q : current->persons)
          if (q.index == p.index) throw DataError("duplicate person index " + std::to_string(p.index));
        current->persons.push_back(p);
      } else if (tag == "pair") {
        if (!current) throw DataError("'pair' outside an image record");
        PairSample s;
        std::string kind;
        if (!(ls >> s.person1 >> s.person2 >> kind)) throw DataError("expected 'pair <i> <j> label|votes ...'");
        if (s.person1 == s.person2) throw DataError("pair references the same person twice");
        s.image_id = current->id;
        s.split = current->split;
        s.b1 = current->person(s.person1).box;
        s.b2 = current->person(s.person2).box;
        if (kind == "label") {
          std::string name;
          if (!(ls >> name)) throw DataError("missing label");
          s.label = parse_fine_label(name);
        } else if (kind == "votes") {
          std::vector<Vote> votes;
          std::string v;
          for (int i = 0; i < 5; ++i) {
            if (!(ls >> v)) throw DataError("expected 5 votes");
            votes.push_back(v == "NotSure" ? Vote{} : Vote{parse_fine_label(v)});
          }
          s.votes = votes;
          const auto resolved = majority_vote(votes);
          if (!resolved) {
            ++rep.invalid_votes;
            continue;
          }
          s.label = *resolved;
          vote_records.push_back({s.id(), votes});
        } else {
          throw DataError("expected 'label' or 'votes', got '" + kind + "'");
        }
        auto attrs = read_attributes(ls);
        if (attrs.count("cue")) s.cue_box = parse_box_attr(attrs["cue"]);
        if (attrs.count("dependent")) s.cue_dependent = attrs["dependent"] == "1";
        pending.push_back(std::move(s));
      } else if (tag == "end") {
        if (!current) throw DataError("'end' without an open image");
        close_image();
      } else {
        throw DataError("unknown record '" + tag + "'");
      }
    } catch (const DataError& e) {
      errors.push_back(annotation_path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (current) {
    errors.push_back(annotation_path.string() + ":" + std::to_string(lineno) +
                     ": missing 'end' for image " + current->id);
    close_image();
  }
  if (!errors.empty()) {
    std::string msg = "malformed annotation records:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw DataError(msg);
  }

  if (options.check_images) {
    std::set<std::string> missing;
    for (const auto& [id, rec] : ds.images)
      if (!std::filesystem::exists(image_root / rec.file)) missing.insert(id);
    if (!missing.empty()) {
      std::erase_if(ds.samples, [&](const PairSample& s) { return missing.count(s.image_id) > 0; });
      rep.missing_images.assign(missing.begin(), missing.end());
    }
  }

  rep.images = ds.images.size();
  rep.samples = ds.samples.size();
  rep.counts = ds.fine_counts();
  if (!vote_records.empty()) {
    rep.agreement = agreement_rate(vote_records);
    for (std::size_t c = 0; c < kNumFine; ++c) {
      std::vector<VoteRecord> of_class;
      for (const auto& r : vote_records)
        if (majority_vote(r.votes) == static_cast<FineLabel>(c)) of_class.push_back(r);
      if (!of_class.empty()) rep.class_agreement[c] = agreement_rate(of_class);
    }
  }
  if (report) *report = rep;
  return ds;
}

void write_annotations(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write annotation file: " + path.string());
  out << std::setprecision(17);
  std::map<std::string, std::vector<const PairSample*>> by_image;
  for (const auto& s : dataset.samples) {
    if (s.swapped || s.flipped) continue;
    by_image[s.image_id].push_back(&s);
  }
  auto box_attr = [](const Box& b) {
    std::ostringstream os;
    os << std::setprecision(17) << b.xmin << ',' << b.ymin << ',' << b.xmax << ',' << b.ymax;
    return os.str();
  };
  for (const auto& [id, rec] : dataset.images) {
    out << "image " << id << ' ' << rec.width << ' ' << rec.height;
    if (rec.split != Split::kUnassigned) out << " split=" << split_name(rec.split);
    out << " file=" << rec.file << '\n';
    for (const auto& p : rec.persons) {
      out << "person " << p.index << ' ' << p.box.xmin << ' ' << p.box.ymin << ' ' << p.box.xmax << ' '
          << p.box.ymax;
      if (!p.occupation.empty()) out << " occupation=" << p.occupation;
      out << '\n';
    }
    for (const PairSample* s : by_image[id]) {
      out << "pair " << s->person1 << ' ' << s->person2;
      if (s->votes) {
        out << " votes";
        for (const auto& v : *s->votes) out << ' ' << (v ? label_name(*v) : "NotSure");
      } else {
        out << " label " << label_name(s->label);
      }
      if (s->cue_box) out << " cue=" << box_attr(*s->cue_box);
      if (s->cue_dependent) out << " dependent=1";
      out << '\n';
    }
    out << "end\n";
  }
}

SplitResult split_dataset(const Dataset& dataset, const SplitSpec& spec) {
  if (!(spec.test_fraction >= 0.0 && spec.test_fraction <= 1.0)) {
    throw UsageError("split: test fraction must lie in [0, 1]");
  }
  std::map<std::string, std::array<std::size_t, kNumFine>> per_image;
  for (const auto& s : dataset.samples) ++per_image[s.image_id][static_cast<std::size_t>(s.label)];
  std::vector<std::string> ids;
  for (const auto& [id, _] : per_image) ids.push_back(id);
  std::mt19937_64 rng(spec.seed);
  std::shuffle(ids.begin(), ids.end(), rng);

  const std::size_t total = dataset.samples.size();
  const auto want_total = static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(total)));
  std::size_t target = spec.per_class_target;
  if (spec.balanced && target == 0) target = want_total / kNumFine;

  std::set<std::string> test_ids;
  std::array<std::size_t, kNumFine> have{};
  std::size_t have_total = 0;
  for (const auto& id : ids) {
    const auto& c = per_image[id];
    bool take = false;
    if (spec.balanced) {
      bool helps = false, overflows = false;
      for (std::size_t k = 0; k < kNumFine; ++k) {
        if (c[k] == 0) continue;
        if (have[k] < target) helps = true;
        if (have[k] + c[k] > target) overflows = true;
      }
      take = helps && !overflows;
    } else {
      take = have_total < want_total;
    }
    if (!take) continue;
    test_ids.insert(id);
    for (std::size_t k = 0; k < kNumFine; ++k) have[k] += c[k];
    for (auto n : c) have_total += n;
  }

  SplitResult result;
  Dataset tagged = dataset;
  for (auto& s : tagged.samples) s.split = test_ids.count(s.image_id) ? Split::kTest : Split::kTrain;
  for (auto& [id, rec] : tagged.images) rec.split = test_ids.count(id) ? Split::kTest : Split::kTrain;
  result.train = tagged.subset(Split::kTrain);
  result.test = tagged.subset(Split::kTest);
  if (spec.balanced) {
    for (std::size_t k = 0; k < kNumFine; ++k) result.shortfall[k] = have[k] < target ? target - have[k] : 0;
  }
  return result;
}

}  // namespace dg

// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "data/dataset.hpp"

namespace dg {

// Appearance of a rendered person glyph.
enum class Glyph { kCasual, kFormal, kPartnerA, kPartnerB, kChild };
// Context objects that can be planted next to a pair.
enum class CueObject { kDesk, kCounter };

// Scene generator for desk-scale runs. Each scene holds one person pair whose
// relationship is a deterministic function of the glyph pair, their
// proximity and (for context-dependent labels) a cue object planted outside
// the pair's union box:
//   Friends       casual + casual, near
//   Family        casual + child, near
//   Couple        partner A + partner B, near
//   NoRelation    casual + casual, far; or formal + formal, near, no cue
//   Professional  formal + formal, near, desk planted
//   Commercial    formal + formal, near, counter planted
// Decoy cues only appear next to non-formal pairs, so each cue is needed to
// tell its label apart from the other two formal outcomes.
struct SyntheticSceneSpec {
  std::size_t canvas = 32;
  bool cues_enabled = true;
  // Cue object type planted for each context-dependent label.
  std::map<FineLabel, CueObject> cue_for_label = {{FineLabel::kProfessional, CueObject::kDesk},
                                                  {FineLabel::kCommercial, CueObject::kCounter}};
  // Probability that a scene of another label carries a random cue object.
  double decoy_rate = 0.5;
  std::size_t clutter_min = 1;
  std::size_t clutter_max = 2;
  std::size_t jitter_copies = 2;
  double jitter_px = 1.5;
  std::size_t random_proposals = 8;
  double pixel_noise = 0.03;

  // Throws UsageError when a context-dependent label lacks a cue or the
  // canvas cannot hold a scene.
  void validate() const;
  std::string str() const;
};

// Generative factors of one scene.
struct SceneTruth {
  Glyph glyph1 = Glyph::kCasual;
  Glyph glyph2 = Glyph::kCasual;
  bool near = true;
  std::optional<CueObject> cue;  // planted context cue (decoys excluded)
};

// The rule the generator labels scenes with.
FineLabel oracle_label(const SceneTruth& truth, const SyntheticSceneSpec& spec = {});

struct SyntheticData {
  Dataset dataset;  // split-tagged, pixels registered in memory
  std::vector<SceneTruth> truths;  // aligned with dataset.samples
};

// Labels are stratified within each split (per-class counts differ by at most
// one). Identical arguments give bit-identical output.
SyntheticData synth_generate(const SyntheticSceneSpec& spec, std::size_t n_train, std::size_t n_test,
                             std::uint64_t seed);

// Dataset directory: annotations.txt, proposals.txt, images/<id>.dgim and a
// manifest.txt listing every file with its SHA-256.
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset,
                  const std::map<std::string, std::string>& manifest_extra = {});
Dataset load_dataset(const std::filesystem::path& dir, IngestReport* report = nullptr);

}  // namespace dg

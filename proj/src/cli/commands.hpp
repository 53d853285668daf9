// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "data/dataset.hpp"
#include "data/synth.hpp"
#include "model/config.hpp"
#include "train/trainer.hpp"

namespace dg {

struct ConfigKey {
  std::string name;
  std::string section;  // "run", "synth", "model", "train"
  std::string help;
};

// Everything one command needs. Every key has a default except the dataset
// location; a key=value file and per-key flags write into the same fields.
struct RunConfig {
  // run
  std::filesystem::path data;         // dataset directory (manifest.txt, annotations.txt, ...)
  std::filesystem::path annotations;  // raw annotation file, alternative to `data`
  std::filesystem::path image_root;
  std::filesystem::path proposals;    // optional proposal file for raw annotations
  std::filesystem::path out;
  std::filesystem::path checkpoint;
  std::filesystem::path stage1_checkpoint;
  std::filesystem::path grid;
  bool overwrite = false;
  int stages = 2;
  bool dump_attention = true;
  SplitSpec split;
  std::uint64_t gradcheck_seed = 7;

  // synth
  SyntheticSceneSpec synth;
  std::size_t synth_train = 3000;
  std::size_t synth_test = 600;
  std::uint64_t synth_seed = 0;

  ModelConfig model;
  TrainSchedule schedule;

  std::set<std::string> explicit_keys;

  static const std::vector<ConfigKey>& keys();
  // UsageError for unknown keys or malformed values.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  // Applies a value only when the key was never set explicitly.
  void set_default(std::string_view key, std::string_view value);
  // key=value file; later lines win, unknown keys rejected with line numbers.
  void load_file(const std::filesystem::path& path);
  std::vector<std::pair<std::string, std::string>> entries() const;
};

inline constexpr std::string_view kCommands[] = {"synth", "ingest", "train", "eval", "ablate", "gradcheck"};

// Runs one command. `out` receives the result summary, `log` progress lines.
// Errors surface as dg::Error subclasses.
void run_command(std::string_view command, const RunConfig& config, std::ostream& out, std::ostream& log);

// Loads `data` (a dataset directory) or `annotations` + `image_root`, assigning
// splits by the split_* keys when the annotations carry none.
Dataset load_input(const RunConfig& config, IngestReport* report = nullptr);

// Writes <dir>/manifest.txt: metadata lines then every other file under dir
// with its SHA-256, sorted by path.
void write_run_manifest(const std::filesystem::path& dir, const std::vector<std::pair<std::string, std::string>>& meta);

}  // namespace dg

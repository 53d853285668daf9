// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cli/commands.hpp"
#include "common/errors.hpp"
#include "common/hash.hpp"
#include "support.hpp"

namespace dg {
namespace {

namespace fs = std::filesystem;

std::map<std::string, std::string> read_manifest(const fs::path& dir) {
  std::map<std::string, std::string> files;
  std::ifstream in(dir / "manifest.txt");
  std::string kind, a, b;
  while (in >> kind >> a) {
    std::getline(in, b);
    if (kind == "file") files[a] = b.substr(1);
  }
  return files;
}

RunConfig tiny_run() {
  RunConfig c;
  for (const auto& [k, v] : std::vector<std::pair<std::string, std::string>>{
           {"synth_train", "24"},    {"synth_test", "12"},      {"patch_size", "8"},
           {"pair_backbone", "3p,4"}, {"union_backbone", "3p,4"}, {"context_backbone", "3p,4"},
           {"k", "6"},               {"bbox_hidden", "4"},      {"context_size", "16"},
           {"batch_size", "6"},      {"epochs", "2"}})
    c.set(k, v);
  return c;
}

TEST(RunConfig, KeysAreUniqueAndSectioned) {
  std::set<std::string> names;
  for (const auto& k : RunConfig::keys()) {
    EXPECT_TRUE(names.insert(k.name).second) << k.name;
    EXPECT_TRUE(k.section == "run" || k.section == "synth" || k.section == "model" || k.section == "train")
        << k.name;
    EXPECT_FALSE(k.help.empty()) << k.name;
  }
  for (const char* k : {"out", "data", "variant", "alpha", "k", "tau_u", "m", "aggregation", "lr", "seed"})
    EXPECT_TRUE(names.count(k)) << k;
}

TEST(RunConfig, SetGetAndErrors) {
  RunConfig c;
  c.set("alpha", "0.25");
  EXPECT_EQ(c.model.alpha, 0.25);
  EXPECT_EQ(c.get("alpha"), "0.25");
  c.set("synth_cues", "0");
  EXPECT_FALSE(c.synth.cues_enabled);
  EXPECT_THROW(c.set("nonsense", "1"), UsageError);
  EXPECT_THROW(c.set("k", "many"), UsageError);
  EXPECT_THROW(c.set("aggregation", "median"), UsageError);
  EXPECT_THROW(c.get("nonsense"), UsageError);
  c.set_default("alpha", "0.9");
  EXPECT_EQ(c.model.alpha, 0.25);
  c.set_default("m", "4");
  EXPECT_EQ(c.model.m, 4u);
  for (const auto& [k, v] : c.entries()) EXPECT_EQ(c.get(k), v);
}

TEST(RunConfig, FileRejectsUnknownKeysWithLineNumber) {
  test::TempDir dir("cfg");
  std::ofstream(dir.path() / "c.txt") << "# comment\nalpha = 0.5\n\nbogus = 3\n";
  RunConfig c;
  try {
    c.load_file(dir.path() / "c.txt");
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("4"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos) << e.what();
  }
  std::ofstream(dir.path() / "d.txt") << "alpha = 0.5\nalpha = 0.75\n";
  c.load_file(dir.path() / "d.txt");
  EXPECT_EQ(c.model.alpha, 0.75);
}

TEST(Commands, UnknownCommandIsUsageError) {
  std::ostringstream out, log;
  EXPECT_THROW(run_command("dance", RunConfig{}, out, log), UsageError);
}

TEST(Commands, SynthWritesHashedManifestAndRefusesToOverwrite) {
  test::TempDir dir("cli");
  RunConfig c = tiny_run();
  c.set("out", (dir.path() / "data").string());
  std::ostringstream out, log;
  run_command("synth", c, out, log);
  const auto files = read_manifest(dir.path() / "data");
  EXPECT_TRUE(files.count("annotations.txt"));
  EXPECT_TRUE(files.count("proposals.txt"));
  for (const auto& [rel, hash] : files) EXPECT_EQ(sha256_file(dir.path() / "data" / rel), hash) << rel;

  EXPECT_THROW(run_command("synth", c, out, log), UsageError);
  c.set("overwrite", "1");
  EXPECT_NO_THROW(run_command("synth", c, out, log));

  fs::create_directories(dir.path() / "foreign");
  std::ofstream(dir.path() / "foreign" / "keep.txt") << "x";
  c.set("out", (dir.path() / "foreign").string());
  EXPECT_THROW(run_command("synth", c, out, log), UsageError);
  EXPECT_TRUE(fs::exists(dir.path() / "foreign" / "keep.txt"));
}

TEST(Commands, SynthTrainEvalIsReproducible) {
  test::TempDir dir("cli");
  RunConfig c = tiny_run();
  std::ostringstream out, log;
  c.set("out", (dir.path() / "data").string());
  run_command("synth", c, out, log);
  c.set("data", (dir.path() / "data").string());

  std::string metrics[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path train_dir = dir.path() / ("train" + std::to_string(run));
    const fs::path eval_dir = dir.path() / ("eval" + std::to_string(run));
    RunConfig t = c;
    t.set("out", train_dir.string());
    run_command("train", t, out, log);
    EXPECT_TRUE(fs::exists(train_dir / "model.ckpt"));
    EXPECT_TRUE(fs::exists(train_dir / "train.log"));
    RunConfig e = c;
    e.set("out", eval_dir.string());
    e.set("checkpoint", (train_dir / "model.ckpt").string());
    run_command("eval", e, out, log);
    for (const char* f : {"metrics.json", "metrics_swap_off.json", "metrics_swap_on.json",
                          "first_glance_metrics.json", "attention.jsonl"})
      EXPECT_TRUE(fs::exists(eval_dir / f)) << f;
    metrics[run] = sha256_file(eval_dir / "metrics.json");
    const auto j = nlohmann::json::parse(std::ifstream(eval_dir / "metrics.json"));
    EXPECT_EQ(j["config_hash"], config_hash(t.model.entries()));
  }
  EXPECT_EQ(metrics[0], metrics[1]);
}

TEST(Commands, GradcheckPasses) {
  RunConfig c;
  std::ostringstream out, log;
  run_command("gradcheck", c, out, log);
  EXPECT_NE(out.str().find("passed"), std::string::npos) << out.str();
}

TEST(Commands, IngestReportsCountsAndAgreement) {
  test::TempDir dir("cli");
  std::ofstream(dir.path() / "a.txt") << "image im 40 30 split=train file=im.png\n"
                                         "person 0 1 1 10 20\n"
                                         "person 1 12 1 22 20\n"
                                         "person 2 24 1 34 20\n"
                                         "pair 0 1 votes Couple Couple Couple Friends NotSure\n"
                                         "pair 1 2 votes Friends Friends Family Family Couple\n"
                                         "end\n";
  RunConfig c;
  c.set("annotations", (dir.path() / "a.txt").string());
  c.set("image_root", dir.path().string());
  c.set("out", (dir.path() / "out").string());
  std::ostringstream out, log;
  run_command("ingest", c, out, log);
  const auto j = nlohmann::json::parse(std::ifstream(dir.path() / "out" / "stats.json"));
  EXPECT_EQ(j["samples"], 0);
  EXPECT_EQ(j["missing_images"].size(), 1u);
  EXPECT_EQ(j["invalid_votes"], 1);
}

}  // namespace
}  // namespace dg

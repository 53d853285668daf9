// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "common/errors.hpp"
#include "common/hash.hpp"
#include "common/kv.hpp"
#include "eval/ablation.hpp"
#include "eval/report.hpp"
#include "train/gradcheck_suite.hpp"
#include "train/pipeline.hpp"

namespace dg {
namespace fs = std::filesystem;

namespace {

std::vector<ConfigKey> build_keys() {
  std::vector<ConfigKey> k = {
      {"data", "run", "dataset directory written by synth or ingest"},
      {"annotations", "run", "raw annotation file (alternative to data)"},
      {"image_root", "run", "image directory for annotations (default: its folder)"},
      {"proposals", "run", "proposal file for annotations"},
      {"out", "run", "output directory"},
      {"checkpoint", "run", "model checkpoint for eval"},
      {"stage1_checkpoint", "run", "train: start stage 2 from this stage-1 checkpoint"},
      {"grid", "run", "ablate: grid file"},
      {"overwrite", "run", "allow replacing a previous run in out"},
      {"stages", "run", "train: 1 = first glance only, 2 = both stages"},
      {"dump_attention", "run", "write attention.jsonl during eval and ablate"},
      {"split_test_fraction", "run", "test share when annotations carry no split"},
      {"split_balanced", "run", "balance the test split per class"},
      {"split_per_class", "run", "balanced split: test samples per class (0 = derive)"},
      {"split_seed", "run", "seed of the image-level split"},
      {"gradcheck_seed", "run", "seed of the gradient-check inputs"},
      {"synth_train", "synth", "synthetic training pairs"},
      {"synth_test", "synth", "synthetic test pairs"},
      {"synth_seed", "synth", "generator seed"},
      {"synth_canvas", "synth", "canvas side in pixels"},
      {"synth_cues", "synth", "plant context cues"},
      {"synth_cue_professional", "synth", "cue object for Professional: desk or counter"},
      {"synth_cue_commercial", "synth", "cue object for Commercial: desk or counter"},
      {"synth_decoy_rate", "synth", "probability of a decoy cue in other scenes"},
      {"synth_clutter_min", "synth", "minimum clutter objects"},
      {"synth_clutter_max", "synth", "maximum clutter objects"},
      {"synth_jitter_copies", "synth", "jittered proposal copies per true box"},
      {"synth_jitter_px", "synth", "proposal jitter in pixels"},
      {"synth_random_proposals", "synth", "random proposals per scene"},
      {"synth_noise", "synth", "pixel noise amplitude"},
      {"variant", "model", "union-cnn, bbox, pair-cnn, pair-cnn+bbox, pair-cnn+bbox+union, pair-cnn+bbox+global, "
                           "pair-cnn+bbox+scene, rcnn, dual-glance"},
      {"num_classes", "model", "6 (fine) or 3 (coarse)"},
      {"alpha", "model", "weight of the second-glance score"},
      {"k", "model", "hidden width of v_top and region features"},
      {"tau_u", "model", "upper IoU bound between a context region and either person"},
      {"m", "model", "maximum context regions per pair"},
      {"nms_threshold", "model", "proposal NMS IoU threshold"},
      {"aggregation", "model", "max, avg or lse"},
      {"attention", "model", "gate regions with attention"},
      {"pair_swap_averaging", "model", "average scores over both person orders"},
      {"patch_size", "model", "side of person and union patches"},
      {"context_size", "model", "side of the resampled full image"},
      {"pair_backbone", "model", "person-patch backbone, e.g. 8p,16p,32p"},
      {"union_backbone", "model", "union-patch backbone"},
      {"context_backbone", "model", "full-image backbone"},
      {"roi_grid", "model", "ROI pooling grid side"},
      {"bbox_hidden", "model", "width of the geometry layer"},
      {"finetune_backbones", "model", "put backbones in the low-rate group"},
  };
  for (const auto& [name, _] : TrainSchedule{}.entries()) k.push_back({name, "train", ""});
  const std::map<std::string, std::string> help = {
      {"batch_size", "samples per step"},
      {"epochs", "epoch cap per stage"},
      {"stage2_epochs", "stage-2 epoch cap (0 = epochs)"},
      {"patience", "epochs without improvement before stopping"},
      {"min_delta", "improvement that resets patience"},
      {"divergence_factor", "abort when smoothed loss exceeds this times the initial loss"},
      {"max_steps", "step cap per stage (0 = none)"},
      {"checkpoint_every", "epochs between intermediate checkpoints (0 = none)"},
      {"seed", "training seed"},
      {"lr", "learning rate of fresh layers"},
      {"lr_finetune", "learning rate of fine-tuned layers"},
      {"momentum", "SGD momentum"},
      {"clip_norm", "global gradient-norm clip"},
  };
  for (auto& key : k)
    if (key.section == "train") key.help = help.at(key.name);
  return k;
}

CueObject parse_cue(std::string_view key, std::string_view v) {
  if (v == "desk") return CueObject::kDesk;
  if (v == "counter") return CueObject::kCounter;
  throw UsageError(std::string(key) + ": expected desk or counter, got '" + std::string(v) + "'");
}

std::string cue_str(const SyntheticSceneSpec& s, FineLabel l) {
  auto it = s.cue_for_label.find(l);
  if (it == s.cue_for_label.end()) return "none";
  return it->second == CueObject::kDesk ? "desk" : "counter";
}

bool dir_has_entries(const fs::path& dir) { return fs::exists(dir) && !fs::is_empty(dir); }

void prepare_out(const RunConfig& c) {
  if (c.out.empty()) throw UsageError("out is required");
  if (fs::exists(c.out) && !fs::is_directory(c.out)) throw UsageError(c.out.string() + " is not a directory");
  if (dir_has_entries(c.out)) {
    if (!c.overwrite) throw UsageError("output directory " + c.out.string() + " is not empty (set overwrite=1)");
    if (!fs::exists(c.out / "manifest.txt")) {
      throw UsageError("refusing to clear " + c.out.string() + ": no manifest.txt from a previous run");
    }
    for (const auto& e : fs::directory_iterator(c.out)) fs::remove_all(e.path());
  }
  fs::create_directories(c.out);
}

void write_config(const fs::path& path, const RunConfig& c) {
  std::ostringstream os;
  for (const auto& [k, v] : c.entries()) os << k << " = " << v << '\n';
  write_text(path, os.str());
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

void print_counts(std::ostream& out, const std::string& title, const Dataset& ds) {
  const auto counts = ds.fine_counts();
  out << title << ": " << ds.samples.size() << " samples in " << ds.images.size() << " images (";
  for (std::size_t i = 0; i < kNumFine; ++i)
    out << (i ? ", " : "") << label_name(static_cast<FineLabel>(i)) << ' ' << counts[i];
  out << ")\n";
}

void cmd_synth(const RunConfig& c, std::ostream& out, std::ostream&) {
  prepare_out(c);
  SyntheticData d = synth_generate(c.synth, c.synth_train, c.synth_test, c.synth_seed);
  save_dataset(c.out, d.dataset,
               {{"command", "synth"},
                {"synth_train", std::to_string(c.synth_train)},
                {"synth_test", std::to_string(c.synth_test)},
                {"synth_seed", std::to_string(c.synth_seed)},
                {"spec", c.synth.str()}});
  print_counts(out, "train", d.dataset.subset(Split::kTrain));
  print_counts(out, "test", d.dataset.subset(Split::kTest));
  out << "wrote " << c.out.string() << '\n';
}

void cmd_ingest(const RunConfig& c, std::ostream& out, std::ostream& log) {
  IngestReport report;
  Dataset ds = load_input(c, &report);
  prepare_out(c);
  for (const auto& m : report.missing_images) log << "missing image: " << m << '\n';

  // Absolute image paths keep the output usable as data=<out>.
  const fs::path root = ds.image_root;
  for (auto& [id, rec] : ds.images) rec.file = fs::absolute(root / rec.file).lexically_normal().string();
  write_annotations(c.out / "annotations.txt", ds);
  if (!ds.proposals.empty()) write_proposals(c.out / "proposals.txt", ds.proposals);

  nlohmann::json j;
  j["images"] = report.images;
  j["samples"] = report.samples;
  j["invalid_votes"] = report.invalid_votes;
  nlohmann::json fine = nlohmann::json::object(), coarse = nlohmann::json::object();
  std::array<std::size_t, kNumCoarse> cc{};
  for (std::size_t i = 0; i < kNumFine; ++i) {
    const auto l = static_cast<FineLabel>(i);
    fine[std::string(label_name(l))] = report.counts[i];
    cc[static_cast<std::size_t>(map_hierarchy(l))] += report.counts[i];
  }
  for (std::size_t i = 0; i < kNumCoarse; ++i) coarse[std::string(label_name(static_cast<CoarseLabel>(i)))] = cc[i];
  j["fine_counts"] = fine;
  j["coarse_counts"] = coarse;
  j["agreement"] = report.agreement ? nlohmann::json(*report.agreement) : nlohmann::json(nullptr);
  nlohmann::json ca = nlohmann::json::object();
  for (std::size_t i = 0; i < kNumFine; ++i) {
    const auto& a = report.class_agreement[i];
    ca[std::string(label_name(static_cast<FineLabel>(i)))] = a ? nlohmann::json(*a) : nlohmann::json(nullptr);
  }
  j["class_agreement"] = ca;
  j["missing_images"] = report.missing_images;
  j["train_samples"] = ds.subset(Split::kTrain).samples.size();
  j["test_samples"] = ds.subset(Split::kTest).samples.size();
  write_text(c.out / "stats.json", j.dump(2) + "\n");
  write_config(c.out / "config.txt", c);
  write_run_manifest(c.out, {{"command", "ingest"}});

  out << "images: " << report.images << "\nvalid samples: " << report.samples << '\n';
  if (report.invalid_votes) out << "pairs without a vote majority: " << report.invalid_votes << '\n';
  for (std::size_t i = 0; i < kNumFine; ++i)
    out << "  " << label_name(static_cast<FineLabel>(i)) << ": " << report.counts[i] << '\n';
  if (report.agreement) out << "agreement rate: " << fixed(*report.agreement) << '\n';
  if (!report.missing_images.empty()) out << "missing images: " << report.missing_images.size() << '\n';
}

void cmd_train(const RunConfig& c, std::ostream& out, std::ostream& log) {
  c.model.validate();
  c.schedule.validate();
  if (c.stages != 1 && c.stages != 2) throw UsageError("stages must be 1 or 2");
  const Dataset ds = load_input(c);
  const Dataset train = ds.subset(Split::kTrain);
  if (train.samples.empty()) throw DataError("dataset has no training samples");
  std::optional<Checkpoint> stage1;
  if (!c.stage1_checkpoint.empty()) {
    stage1 = load_checkpoint(c.stage1_checkpoint);
    const std::string want = config_hash(config_from_manifest(stage1->manifest).entries());
    if (stage1->manifest.count("config_hash") && stage1->manifest.at("config_hash") != want) {
      throw DataError("stage-1 checkpoint manifest is inconsistent with its config hash");
    }
  }
  prepare_out(c);

  const auto samples = balanced_training_samples(train, c.model.num_classes);
  log << "preparing " << samples.size() << " training samples (" << train.samples.size() << " before oversampling)\n";
  const auto prepared = prepare_samples(train, samples, c.model);

  std::ofstream train_log(c.out / "train.log");
  if (!train_log) throw IoError("cannot write " + (c.out / "train.log").string());
  PipelineOptions opts;
  opts.out_dir = c.out;
  opts.stage1_only = c.stages == 1;
  opts.reuse_stage1 = stage1 ? &*stage1 : nullptr;
  opts.observer.log = &train_log;
  opts.observer.on_epoch = [&log](int stage, std::size_t epoch, const TrainResult& r) {
    log << "stage " << stage << " epoch " << epoch << " loss " << fixed(r.epoch_loss.back(), 6) << '\n';
  };
  const auto start = std::chrono::steady_clock::now();
  const TrainedModel tm = train_model(c.model, c.schedule, prepared, opts);
  train_log.close();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  write_config(c.out / "config.txt", c);
  write_run_manifest(c.out, {{"command", "train"},
                             {"config_hash", config_hash(c.model.entries())},
                             {"seed", std::to_string(c.schedule.seed)}});
  for (const auto* r : {tm.stage1 ? &*tm.stage1 : nullptr, tm.stage2 ? &*tm.stage2 : nullptr}) {
    if (!r) continue;
    out << "stage " << r->stage << ": " << r->epochs << " epochs, " << r->steps << " steps, final loss "
        << fixed(r->epoch_loss.empty() ? 0.0 : r->epoch_loss.back(), 6) << (r->converged ? " (converged)" : "") << '\n';
  }
  if (stage1) out << "stage 1 loaded from " << c.stage1_checkpoint.string() << '\n';
  out << "checkpoint: " << (c.out / (opts.stage1_only ? "stage1.ckpt" : "model.ckpt")).string() << '\n';
  out << "training time: " << fixed(secs, 1) << " s\n";
}

void cmd_eval(const RunConfig& c, std::ostream& out, std::ostream& log) {
  if (c.checkpoint.empty()) throw UsageError("checkpoint is required");
  const Checkpoint ckpt = load_checkpoint(c.checkpoint);
  ModelConfig off = config_from_manifest(ckpt.manifest);
  off.pair_swap_averaging = false;
  ModelConfig on = off;
  on.pair_swap_averaging = true;
  const auto model_off = load_model(ckpt, &off);
  const auto model_on = load_model(ckpt, &on);
  std::uint64_t seed = 0;
  if (auto it = ckpt.manifest.find("seed"); it != ckpt.manifest.end()) seed = kv_u64("seed", it->second);

  const Dataset ds = load_input(c);
  const Dataset test = ds.subset(Split::kTest);
  if (test.samples.empty()) throw DataError("dataset has no test samples");
  prepare_out(c);
  const auto prepared = prepare_samples(test, test.samples, off);

  const Evaluation ev_off = evaluate(*model_off, prepared, seed);
  const Evaluation ev_on = evaluate(*model_on, prepared, seed);
  const Evaluation& primary = c.model.pair_swap_averaging ? ev_on : ev_off;
  write_metrics(c.out / "metrics.json", primary.report);
  write_metrics(c.out / "metrics_swap_off.json", ev_off.report);
  write_metrics(c.out / "metrics_swap_on.json", ev_on.report);
  if (off.has_first_glance() && off.has_second_glance()) {
    write_metrics(c.out / "first_glance_metrics.json",
                  evaluate(c.model.pair_swap_averaging ? *model_on : *model_off, prepared, seed,
                           ScoreSource::kFirstGlance)
                      .report);
  }
  if (c.dump_attention && off.has_second_glance()) write_attention_dump(c.out / "attention.jsonl", prepared, primary);
  write_config(c.out / "config.txt", c);
  write_run_manifest(c.out, {{"command", "eval"},
                             {"checkpoint", c.checkpoint.string()},
                             {"config_hash", primary.report.config_hash},
                             {"seed", std::to_string(seed)}});

  const double delta = ev_on.report.accuracy - ev_off.report.accuracy;
  log << "pair-swap averaging: accuracy " << fixed(ev_off.report.accuracy) << " -> " << fixed(ev_on.report.accuracy)
      << " (delta " << (delta >= 0 ? "+" : "") << fixed(delta) << ")\n";
  out << "samples: " << primary.report.samples << "\naccuracy: " << fixed(primary.report.accuracy)
      << "\nmAP: " << fixed(primary.report.ap.map) << '\n';
  for (std::size_t i = 0; i < primary.report.num_classes; ++i) {
    const auto& r = primary.report.recall[i];
    out << "  recall " << class_name(i, primary.report.num_classes) << ": " << (r ? fixed(*r) : "absent") << '\n';
  }
  out << "pair_swap_averaging_delta: " << fixed(delta) << '\n';
  const CueAttention cue = cue_attention(prepared, primary);
  if (cue.eligible) out << "cue top-1 attention: " << cue.hits << '/' << cue.eligible << '\n';
}

void cmd_ablate(const RunConfig& c, std::ostream& out, std::ostream& log) {
  if (c.grid.empty()) throw UsageError("grid is required");
  const KeyValues kv = KeyValues::read_file(c.grid);
  const AblationGrid grid = AblationGrid::from(kv, c.model, c.schedule);
  RunConfig run = c;
  for (const auto& [k, v] : grid.extra) run.set_default(k, v);
  const auto cells = grid.cells();

  Dataset ds;
  if (!run.data.empty() || !run.annotations.empty()) {
    ds = load_input(run);
  } else {
    log << "generating synthetic data (" << run.synth_train << " train / " << run.synth_test << " test, seed "
        << run.synth_seed << ")\n";
    ds = synth_generate(run.synth, run.synth_train, run.synth_test, run.synth_seed).dataset;
  }
  prepare_out(run);
  AblationOptions opts;
  opts.out_dir = run.out;
  opts.log = &log;
  opts.dump_attention = run.dump_attention;
  const auto results = ablation_run(cells, grid.schedule, ds.subset(Split::kTrain), ds.subset(Split::kTest), opts);
  write_text(run.out / "grid.txt", [&] {
    std::ifstream in(c.grid, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  }());
  write_run_manifest(run.out, {{"command", "ablate"}, {"cells", std::to_string(results.size())}});

  out << "cells: " << results.size() << '\n';
  for (const auto& r : results) {
    out << r.cell.name << ": accuracy " << fixed(r.report.accuracy) << ", mAP " << fixed(r.report.ap.map) << '\n';
  }
  out << "table: " << (run.out / "ablation.csv").string() << '\n';
}

void cmd_gradcheck(const RunConfig& c, std::ostream& out, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  const auto entries = run_gradcheck_suite(c.gradcheck_seed);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::map<std::string, std::pair<std::size_t, double>> groups;
  std::size_t failed = 0;
  std::ostringstream table;
  table << "group\tname\terror\ttolerance\tpass\n";
  for (const auto& e : entries) {
    auto& g = groups[e.group];
    ++g.first;
    g.second = std::max(g.second, e.error);
    if (!e.passed()) {
      ++failed;
      log << "FAIL " << e.group << ' ' << e.name << ": relative error " << e.error << " >= " << e.tolerance << '\n';
    }
    table << e.group << '\t' << e.name << '\t' << e.error << '\t' << e.tolerance << '\t' << e.passed() << '\n';
  }
  if (!c.out.empty()) {
    prepare_out(c);
    write_text(c.out / "gradcheck.tsv", table.str());
    write_run_manifest(c.out, {{"command", "gradcheck"}, {"seed", std::to_string(c.gradcheck_seed)}});
  }
  for (const auto& [name, g] : groups) out << name << ": " << g.first << " checks, worst relative error " << g.second << '\n';
  out << "gradcheck: " << entries.size() - failed << '/' << entries.size() << " passed in " << fixed(secs, 1) << " s\n";
  if (failed) throw NumericalError("gradcheck: " + std::to_string(failed) + " checks failed");
}

}  // namespace

const std::vector<ConfigKey>& RunConfig::keys() {
  static const std::vector<ConfigKey> k = build_keys();
  return k;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  const std::string v(value);
  if (key == "data") data = v;
  else if (key == "annotations") annotations = v;
  else if (key == "image_root") image_root = v;
  else if (key == "proposals") proposals = v;
  else if (key == "out") out = v;
  else if (key == "checkpoint") checkpoint = v;
  else if (key == "stage1_checkpoint") stage1_checkpoint = v;
  else if (key == "grid") grid = v;
  else if (key == "overwrite") overwrite = kv_bool(key, value);
  else if (key == "stages") stages = static_cast<int>(kv_size(key, value));
  else if (key == "dump_attention") dump_attention = kv_bool(key, value);
  else if (key == "split_test_fraction") split.test_fraction = kv_double(key, value);
  else if (key == "split_balanced") split.balanced = kv_bool(key, value);
  else if (key == "split_per_class") split.per_class_target = kv_size(key, value);
  else if (key == "split_seed") split.seed = kv_u64(key, value);
  else if (key == "gradcheck_seed") gradcheck_seed = kv_u64(key, value);
  else if (key == "synth_train") synth_train = kv_size(key, value);
  else if (key == "synth_test") synth_test = kv_size(key, value);
  else if (key == "synth_seed") synth_seed = kv_u64(key, value);
  else if (key == "synth_canvas") synth.canvas = kv_size(key, value);
  else if (key == "synth_cues") synth.cues_enabled = kv_bool(key, value);
  else if (key == "synth_cue_professional") synth.cue_for_label[FineLabel::kProfessional] = parse_cue(key, value);
  else if (key == "synth_cue_commercial") synth.cue_for_label[FineLabel::kCommercial] = parse_cue(key, value);
  else if (key == "synth_decoy_rate") synth.decoy_rate = kv_double(key, value);
  else if (key == "synth_clutter_min") synth.clutter_min = kv_size(key, value);
  else if (key == "synth_clutter_max") synth.clutter_max = kv_size(key, value);
  else if (key == "synth_jitter_copies") synth.jitter_copies = kv_size(key, value);
  else if (key == "synth_jitter_px") synth.jitter_px = kv_double(key, value);
  else if (key == "synth_random_proposals") synth.random_proposals = kv_size(key, value);
  else if (key == "synth_noise") synth.pixel_noise = kv_double(key, value);
  else if (!model.set(key, value) && !schedule.set(key, value))
    throw UsageError("unknown key '" + std::string(key) + "'");
  explicit_keys.insert(std::string(key));
}

void RunConfig::set_default(std::string_view key, std::string_view value) {
  if (explicit_keys.count(std::string(key))) return;
  set(key, value);
  explicit_keys.erase(std::string(key));
}

std::string RunConfig::get(std::string_view key) const {
  for (const auto& [k, v] : entries())
    if (k == key) return v;
  throw UsageError("unknown key '" + std::string(key) + "'");
}

void RunConfig::load_file(const fs::path& path) {
  const KeyValues kv = KeyValues::read_file(path);
  for (const auto& e : kv.entries) {
    try {
      set(e.key, e.value);
    } catch (const UsageError& err) {
      throw UsageError(path.string() + ":" + std::to_string(e.line) + ": " + err.what());
    }
  }
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> e = {
      {"data", data.string()},
      {"annotations", annotations.string()},
      {"image_root", image_root.string()},
      {"proposals", proposals.string()},
      {"out", out.string()},
      {"checkpoint", checkpoint.string()},
      {"stage1_checkpoint", stage1_checkpoint.string()},
      {"grid", grid.string()},
      {"overwrite", overwrite ? "1" : "0"},
      {"stages", std::to_string(stages)},
      {"dump_attention", dump_attention ? "1" : "0"},
      {"split_test_fraction", kv_format(split.test_fraction)},
      {"split_balanced", split.balanced ? "1" : "0"},
      {"split_per_class", std::to_string(split.per_class_target)},
      {"split_seed", std::to_string(split.seed)},
      {"gradcheck_seed", std::to_string(gradcheck_seed)},
      {"synth_train", std::to_string(synth_train)},
      {"synth_test", std::to_string(synth_test)},
      {"synth_seed", std::to_string(synth_seed)},
      {"synth_canvas", std::to_string(synth.canvas)},
      {"synth_cues", synth.cues_enabled ? "1" : "0"},
      {"synth_cue_professional", cue_str(synth, FineLabel::kProfessional)},
      {"synth_cue_commercial", cue_str(synth, FineLabel::kCommercial)},
      {"synth_decoy_rate", kv_format(synth.decoy_rate)},
      {"synth_clutter_min", std::to_string(synth.clutter_min)},
      {"synth_clutter_max", std::to_string(synth.clutter_max)},
      {"synth_jitter_copies", std::to_string(synth.jitter_copies)},
      {"synth_jitter_px", kv_format(synth.jitter_px)},
      {"synth_random_proposals", std::to_string(synth.random_proposals)},
      {"synth_noise", kv_format(synth.pixel_noise)},
  };
  for (auto& kv : model.entries()) e.push_back(std::move(kv));
  for (auto& kv : schedule.entries()) e.push_back(std::move(kv));
  return e;
}

Dataset load_input(const RunConfig& c, IngestReport* report) {
  Dataset ds;
  if (!c.data.empty()) {
    if (!fs::is_directory(c.data)) throw IoError("dataset directory " + c.data.string() + " does not exist");
    ds = load_dataset(c.data, report);
  } else if (!c.annotations.empty()) {
    const fs::path root = c.image_root.empty() ? c.annotations.parent_path() : c.image_root;
    ds = parse_annotations(c.annotations, root, report);
    if (!c.proposals.empty()) ds.proposals = read_proposals(c.proposals);
  } else {
    throw UsageError("no dataset: set data=<dir> or annotations=<file>");
  }
  const auto unassigned = std::count_if(ds.samples.begin(), ds.samples.end(),
                                        [](const PairSample& s) { return s.split == Split::kUnassigned; });
  if (unassigned == 0) return ds;
  if (static_cast<std::size_t>(unassigned) != ds.samples.size()) {
    throw DataError("dataset mixes samples with and without a split");
  }
  const SplitResult r = split_dataset(ds, c.split);
  for (auto& s : ds.samples) s.split = r.test.images.count(s.image_id) ? Split::kTest : Split::kTrain;
  for (auto& [id, rec] : ds.images) rec.split = r.test.images.count(id) ? Split::kTest : Split::kTrain;
  return ds;
}

void write_run_manifest(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& meta) {
  std::vector<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).generic_string();
    if (rel != "manifest.txt") files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  std::ostringstream os;
  for (const auto& [k, v] : meta) os << "meta " << k << ' ' << v << '\n';
  for (const auto& f : files) os << "file " << f << ' ' << sha256_file(dir / f) << '\n';
  write_text(dir / "manifest.txt", os.str());
}

void run_command(std::string_view command, const RunConfig& config, std::ostream& out, std::ostream& log) {
  if (command == "synth") return cmd_synth(config, out, log);
  if (command == "ingest") return cmd_ingest(config, out, log);
  if (command == "train") return cmd_train(config, out, log);
  if (command == "eval") return cmd_eval(config, out, log);
  if (command == "ablate") return cmd_ablate(config, out, log);
  if (command == "gradcheck") return cmd_gradcheck(config, out, log);
  throw UsageError("unknown command '" + std::string(command) + "'");
}

}  // namespace dg

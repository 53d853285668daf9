// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "eval/ablation.hpp"

#include <array>
#include <chrono>
#include <memory>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "common/errors.hpp"
#include "train/pipeline.hpp"

namespace dg {
namespace {

constexpr std::array<std::string_view, 6> kAxisKeys = {"variant", "aggregation", "attention", "m", "tau_u", "alpha"};

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is{std::string(text)};
  while (std::getline(is, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    if (a == std::string::npos) throw UsageError("empty item in list '" + std::string(text) + "'");
    out.push_back(item.substr(a, b - a + 1));
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

std::string join_entries(const ModelConfig& c, bool (*keep)(std::string_view)) {
  std::string out;
  for (const auto& [k, v] : c.entries())
    if (keep(k)) out += k + '=' + v + ';';
  return out;
}

bool not_axis(std::string_view k) { return !is_axis_key(k); }

bool prep_key(std::string_view k) {
  return k == "num_classes" || k == "patch_size" || k == "context_size" || k == "m" || k == "tau_u" ||
         k == "nms_threshold";
}

bool first_glance_key(std::string_view k) {
  return k == "num_classes" || k == "k" || k == "patch_size" || k == "pair_backbone" || k == "union_backbone" ||
         k == "bbox_hidden" || k == "finetune_backbones";
}

std::string stage1_key(const AblationCell& cell) {
  ModelConfig c = cell.config;
  if (c.variant == Variant::kDualGlance) c.variant = Variant::kFirstGlance;
  return std::to_string(cell.seed) + '|' + std::string(variant_name(c.variant)) + '|' + join_entries(c, first_glance_key);
}

std::string prepared_key(const ModelConfig& c) {
  std::ostringstream os;
  os << join_entries(c, prep_key) << c.uses_pair() << c.uses_union() << c.global_union() << c.has_second_glance();
  return os.str();
}

}  // namespace

bool is_axis_key(std::string_view key) {
  for (auto k : kAxisKeys)
    if (k == key) return true;
  return false;
}

AblationGrid AblationGrid::from(const KeyValues& kv, const ModelConfig& base, const TrainSchedule& schedule) {
  AblationGrid g;
  g.base = base;
  g.schedule = schedule;
  for (const auto& e : kv.entries) {
    if (e.key.rfind("axis.", 0) == 0) {
      const std::string axis = e.key.substr(5);
      if (!is_axis_key(axis)) {
        throw UsageError("line " + std::to_string(e.line) + ": '" + axis +
                         "' is not a sweepable axis (variant, aggregation, attention, m, tau_u, alpha)");
      }
      for (const auto& v : split_list(e.value)) {
        ModelConfig probe;
        probe.set(axis, v);
      }
      g.axes.emplace_back(axis, split_list(e.value));
    } else if (e.key == "seeds") {
      for (const auto& s : split_list(e.value)) g.seeds.push_back(kv_u64("seeds", s));
    } else if (!g.base.set(e.key, e.value) && !g.schedule.set(e.key, e.value)) {
      g.extra[e.key] = e.value;
    }
  }
  if (g.seeds.empty()) g.seeds.push_back(g.schedule.seed);
  return g;
}

std::vector<AblationCell> AblationGrid::cells() const {
  std::vector<AblationCell> out;
  std::size_t combos = 1;
  for (const auto& [k, vals] : axes) combos *= vals.size();
  for (std::uint64_t seed : seeds) {
    for (std::size_t idx = 0; idx < combos; ++idx) {
      AblationCell cell;
      cell.config = base;
      cell.seed = seed;
      std::size_t rem = idx, stride = combos;
      std::string name;
      for (const auto& [k, vals] : axes) {
        stride /= vals.size();
        const std::string& v = vals[rem / stride];
        rem %= stride;
        cell.config.set(k, v);
        name += k + "-" + v + "_";
      }
      std::ostringstream os;
      os << "cell" << out.size() << '_' << name << "seed-" << seed;
      cell.name = os.str();
      for (auto& ch : cell.name)
        if (ch == '+' || ch == '.') ch = ch == '+' ? 'p' : 'd';
      cell.config.validate();
      out.push_back(std::move(cell));
    }
  }
  return out;
}

std::vector<CellResult> ablation_run(std::span<const AblationCell> cells, const TrainSchedule& schedule,
                                     const Dataset& train, const Dataset& test, const AblationOptions& options) {
  if (cells.empty()) throw UsageError("ablation grid has no cells");
  const std::size_t c = cells.front().config.num_classes;
  const std::string reference = join_entries(cells.front().config, not_axis);
  for (const auto& cell : cells) {
    cell.config.validate();
    if (join_entries(cell.config, not_axis) != reference) {
      throw UsageError("cell " + cell.name + " differs from the grid outside the declared axes; cells are not comparable");
    }
  }
  if (train.samples.empty() || test.samples.empty()) throw DataError("ablation needs non-empty train and test sets");

  const std::vector<PairSample> train_samples = balanced_training_samples(train, c);
  std::map<std::string, std::vector<PreparedSample>> prepared_train, prepared_test;
  std::map<std::string, Checkpoint> stage1_cache;
  std::vector<CellResult> results;
  std::vector<TableRow> rows;
  nlohmann::json runtime = nlohmann::json::object();

  for (const auto& cell : cells) {
    const auto start = std::chrono::steady_clock::now();
    const std::string pk = prepared_key(cell.config);
    if (!prepared_train.count(pk)) {
      prepared_train[pk] = prepare_samples(train, train_samples, cell.config);
      prepared_test[pk] = prepare_samples(test, test.samples, cell.config);
    }
    const auto& ptrain = prepared_train[pk];
    const auto& ptest = prepared_test[pk];

    TrainSchedule sched = schedule;
    sched.seed = cell.seed;
    PipelineOptions popts;
    const std::string s1key = stage1_key(cell);
    auto cached = stage1_cache.find(s1key);
    if (cached != stage1_cache.end()) popts.reuse_stage1 = &cached->second;
    if (!options.out_dir.empty()) popts.out_dir = options.out_dir / cell.name;
    TrainedModel tm = train_model(cell.config, sched, ptrain, popts);
    if (cached == stage1_cache.end() && tm.stage1_state) stage1_cache.emplace(s1key, *tm.stage1_state);

    CellResult r;
    r.cell = cell;
    r.stage1_reused = popts.reuse_stage1 != nullptr;
    Evaluation ev = evaluate(*tm.model, ptest, cell.seed);
    r.report = ev.report;
    r.cue = cue_attention(ptest, ev);
    if (cell.config.has_first_glance() && cell.config.has_second_glance()) {
      r.first_glance = evaluate(*tm.model, ptest, cell.seed, ScoreSource::kFirstGlance).report;
    }
    r.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (!options.out_dir.empty()) {
      const auto dir = options.out_dir / cell.name;
      write_metrics(dir / "metrics.json", r.report);
      if (r.first_glance) write_metrics(dir / "first_glance_metrics.json", *r.first_glance);
      if (options.dump_attention && cell.config.has_second_glance()) write_attention_dump(dir / "attention.jsonl", ptest, ev);
      runtime[cell.name] = {{"seconds", r.train_seconds}, {"stage1_reused", r.stage1_reused}};
    }
    if (options.log) {
      *options.log << cell.name << ": accuracy=" << r.report.accuracy << " mAP=" << r.report.ap.map;
      if (r.first_glance) *options.log << " first_glance_accuracy=" << r.first_glance->accuracy;
      if (cell.config.has_second_glance()) *options.log << " cue_top1=" << r.cue.hits << '/' << r.cue.eligible;
      *options.log << " (" << r.train_seconds << " s)\n";
    }
    rows.push_back({cell.config, cell.seed, r.report});
    results.push_back(std::move(r));
  }
  if (!options.out_dir.empty()) {
    write_text(options.out_dir / "ablation.csv", comparative_csv(rows));
    write_text(options.out_dir / "runtime.json", runtime.dump(2) + "\n");
  }
  return results;
}

}  // namespace dg

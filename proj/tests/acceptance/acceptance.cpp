// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance runner. Prints one line per criterion:
//   criterion N: PASS|FAIL|SKIP - detail
// (also written to <work>/summary.txt) and exits 1 when any criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli/commands.hpp"
#include "common/errors.hpp"
#include "common/hash.hpp"
#include "data/labels.hpp"
#include "data/synth.hpp"
#include "geometry/geometry.hpp"
#include "model/inputs.hpp"
#include "model/network.hpp"
#include "model/scoring.hpp"
#include "train/gradcheck_suite.hpp"
#include "train/trainer.hpp"

namespace fs = std::filesystem;
using namespace dg;

namespace {

enum class Verdict { kPass, kFail, kSkip };

struct Outcome {
  Verdict verdict = Verdict::kFail;
  std::string detail;
};

Outcome pass_if(bool ok, std::string detail) { return {ok ? Verdict::kPass : Verdict::kFail, std::move(detail)}; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

// ---------------------------------------------------------------- criterion 1

Outcome gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto entries = run_gradcheck_suite();
  const double secs = seconds_since(t0);
  std::size_t failed = 0;
  std::map<std::string, double> worst;
  for (const auto& e : entries) {
    if (!e.passed()) {
      ++failed;
      std::cerr << "gradcheck failed: " << e.group << '/' << e.name << " error " << e.error << '\n';
    }
    worst[e.group] = std::max(worst[e.group], e.error);
  }
  std::ostringstream d;
  d << entries.size() << " checks, " << failed << " failed";
  for (const auto& [g, w] : worst) d << ", worst " << g << ' ' << std::scientific << std::setprecision(2) << w;
  d << ", " << fmt(secs, 1) << "s";
  return pass_if(!entries.empty() && failed == 0 && secs < 300.0, d.str());
}

// ---------------------------------------------------------------- criterion 2

Outcome aggregation_algebra() {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> rows(1, 12);
  std::uniform_real_distribution<double> val(-6.0, 6.0);
  constexpr std::size_t kC = 6;
  std::size_t lse_violations = 0, avg_violations = 0, tensor_mismatch = 0;

  std::vector<double> flat;
  std::vector<std::size_t> offsets{0};
  std::vector<std::vector<double>> per_bag_max;
  for (int bag = 0; bag < 1000; ++bag) {
    std::vector<std::vector<double>> s(rows(rng), std::vector<double>(kC));
    for (auto& r : s)
      for (auto& x : r) x = val(rng);
    const auto mx = aggregate(s, kC, Aggregation::kMax);
    const auto av = aggregate(s, kC, Aggregation::kAvg);
    const auto ls = aggregate(s, kC, Aggregation::kLse);
    for (std::size_t c = 0; c < kC; ++c) {
      double brute_max = s[0][c];
      for (const auto& r : s) brute_max = std::max(brute_max, r[c]);
      if (mx[c] != brute_max) ++avg_violations;
      if (!(ls[c] > std::max(brute_max, 0.0))) ++lse_violations;
      if (!(av[c] <= mx[c])) ++avg_violations;
    }
    for (const auto& r : s) flat.insert(flat.end(), r.begin(), r.end());
    offsets.push_back(offsets.back() + s.size());
    per_bag_max.push_back(mx);
    if (bag % 100 == 0) offsets.push_back(offsets.back());  // interleave empty segments
  }
  // Batched tensor path: same maxima, zero rows for empty segments.
  const std::size_t n_rows = offsets.back();
  const Tensor t = aggregate(Tensor::from({n_rows, kC}, flat), offsets, Aggregation::kMax);
  std::size_t bag = 0;
  for (std::size_t seg = 0; seg + 1 < offsets.size(); ++seg) {
    const bool empty = offsets[seg] == offsets[seg + 1];
    for (std::size_t c = 0; c < kC; ++c) {
      const double want = empty ? 0.0 : per_bag_max[bag][c];
      if (t[seg * kC + c] != want) ++tensor_mismatch;
    }
    if (!empty) ++bag;
  }

  // Empty bag: S == S1 exactly under every mode.
  std::size_t empty_mismatch = 0, empty_checked = 0;
  ModelConfig config;
  config.patch_size = 8;
  config.pair_backbone = config.union_backbone = config.context_backbone = "3p,4";
  config.k = 6;
  config.bbox_hidden = 4;
  config.context_size = 16;
  const SyntheticData data = synth_generate(SyntheticSceneSpec{}, 12, 0, 5);
  for (Aggregation mode : {Aggregation::kMax, Aggregation::kAvg, Aggregation::kLse}) {
    config.aggregation = mode;
    auto samples = prepare_samples(data.dataset, data.dataset.samples, config);
    for (auto& s : samples) {
      s.regions.clear();
      s.roi_boxes.clear();
    }
    DualGlanceModel model(config, 3);
    model.set_normalizer(fit_geometry_normalizer(samples));
    for (const auto& sb : model.score_all(samples)) {
      ++empty_checked;
      if (sb.s != sb.s1) ++empty_mismatch;
    }
  }
  std::ostringstream d;
  d << "1000 bags: lse violations " << lse_violations << ", avg/max violations " << avg_violations
    << ", batched mismatches " << tensor_mismatch << "; empty bag S!=S1 in " << empty_mismatch << '/'
    << empty_checked;
  return pass_if(lse_violations == 0 && avg_violations == 0 && tensor_mismatch == 0 && empty_mismatch == 0 &&
                     empty_checked > 0,
                 d.str());
}

// ---------------------------------------------------------------- criterion 3

std::vector<Proposal> oracle_nms(std::vector<Proposal> p, double thr) {
  std::stable_sort(p.begin(), p.end(), [](const Proposal& a, const Proposal& b) { return a.objectness > b.objectness; });
  std::vector<Proposal> kept;
  for (const auto& c : p) {
    bool suppressed = false;
    for (const auto& k : kept) suppressed = suppressed || iou(c.box, k.box) > thr;
    if (!suppressed) kept.push_back(c);
  }
  return kept;
}

std::vector<Proposal> oracle_select(const std::vector<Proposal>& p, const Box& b1, const Box& b2, double tau,
                                    std::size_t m) {
  std::vector<Proposal> keep;
  for (const auto& c : p)
    if (std::max(iou(c.box, b1), iou(c.box, b2)) < tau) keep.push_back(c);
  std::stable_sort(keep.begin(), keep.end(),
                   [](const Proposal& a, const Proposal& b) { return a.objectness > b.objectness; });
  if (keep.size() > m) keep.resize(m);
  return keep;
}

bool same(const std::vector<Proposal>& a, const std::vector<Proposal>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a[i].box == b[i].box) || a[i].objectness != b[i].objectness) return false;
  return true;
}

Outcome selection_oracle() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto random_box = [&](double w, double h) {
    // Coarse grid so that exact IoU ties and duplicates occur.
    const double x0 = std::floor(u(rng) * 20) / 20 * w, y0 = std::floor(u(rng) * 20) / 20 * h;
    const double bw = (1 + std::floor(u(rng) * 10)) / 20 * w, bh = (1 + std::floor(u(rng) * 10)) / 20 * h;
    return Box{x0, y0, x0 + bw, y0 + bh};
  };
  std::size_t mismatches = 0, predicate_violations = 0, selected = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double w = 32.0, h = 32.0;
    std::vector<Proposal> props(std::uniform_int_distribution<int>(0, 40)(rng));
    for (auto& p : props) p = {random_box(w, h), std::round(u(rng) * 10) / 10};
    const Box b1 = random_box(w, h), b2 = random_box(w, h);
    const double tau = std::uniform_real_distribution<double>(0.05, 0.9)(rng);
    const std::size_t m = std::uniform_int_distribution<std::size_t>(0, 12)(rng);
    const auto got = select_context_regions(nms(props, 0.3), b1, b2, tau, m);
    const auto want = oracle_select(oracle_nms(props, 0.3), b1, b2, tau, m);
    if (!same(got, want)) ++mismatches;
    for (const auto& c : got) {
      ++selected;
      if (!(std::max(iou(c.box, b1), iou(c.box, b2)) < tau)) ++predicate_violations;
    }
  }
  std::ostringstream d;
  d << "1000 proposal sets, " << selected << " regions selected, " << mismatches << " oracle mismatches, "
    << predicate_violations << " predicate violations";
  return pass_if(mismatches == 0 && predicate_violations == 0, d.str());
}

// ---------------------------------------------------------------- criterion 4

std::optional<FineLabel> counting_oracle(const std::vector<Vote>& votes) {
  std::map<FineLabel, int> counts;
  for (const auto& v : votes)
    if (v) ++counts[*v];
  for (const auto& [label, n] : counts)
    if (2 * n > static_cast<int>(votes.size())) return label;
  return std::nullopt;
}

Outcome vote_oracles() {
  const std::array<Vote, 5> values = {FineLabel::kFriends, FineLabel::kFamily, FineLabel::kCouple,
                                      FineLabel::kProfessional, std::nullopt};
  std::size_t sequences = 0, mismatches = 0, valid = 0, agreement_mismatches = 0;
  std::set<std::vector<int>> multisets;
  std::vector<VoteRecord> valid_records;
  std::size_t agreeing = 0;
  for (int code = 0; code < 3125; ++code) {
    std::vector<Vote> votes;
    std::vector<int> idx;
    for (int c = code, i = 0; i < 5; ++i, c /= 5) {
      votes.push_back(values[c % 5]);
      idx.push_back(c % 5);
    }
    std::sort(idx.begin(), idx.end());
    multisets.insert(idx);
    ++sequences;
    const auto got = majority_vote(votes);
    const auto want = counting_oracle(votes);
    if (got != want) ++mismatches;
    if (want) {
      ++valid;
      VoteRecord r{"r" + std::to_string(code), votes};
      const std::size_t n = static_cast<std::size_t>(std::count(votes.begin(), votes.end(), Vote(*want)));
      const double single = agreement_rate(std::span<const VoteRecord>(&r, 1));
      if (single != static_cast<double>(n) / 5.0) ++agreement_mismatches;
      agreeing += n;
      valid_records.push_back(std::move(r));
    } else {
      VoteRecord r{"r", votes};
      bool threw = false;
      try {
        agreement_rate(std::span<const VoteRecord>(&r, 1));
      } catch (const DataError&) {
        threw = true;
      }
      if (!threw) ++agreement_mismatches;
    }
  }
  const double pooled = agreement_rate(valid_records);
  const double pooled_want = static_cast<double>(agreeing) / (5.0 * static_cast<double>(valid_records.size()));
  if (std::abs(pooled - pooled_want) > 1e-12) ++agreement_mismatches;

  const std::vector<Vote> example = {FineLabel::kFriends, FineLabel::kFriends, FineLabel::kFamily,
                                     FineLabel::kFamily, FineLabel::kCouple};
  const bool two_two_one_invalid = !majority_vote(example).has_value();
  std::ostringstream d;
  d << sequences << " ordered sequences (" << multisets.size() << " multisets), " << valid << " valid, "
    << mismatches << " majority mismatches, " << agreement_mismatches << " agreement mismatches, 2-2-1 "
    << (two_two_one_invalid ? "invalid" : "VALID");
  return pass_if(mismatches == 0 && agreement_mismatches == 0 && two_two_one_invalid && multisets.size() == 126,
                 d.str());
}

// ------------------------------------------------------------ criteria 5 - 8

struct Runner {
  fs::path work;

  // Runs one command with its progress lines in <work>/<tag>.log.
  std::string run(const std::string& command, const RunConfig& config, const std::string& tag) {
    std::ostringstream out;
    std::ofstream log(work / (tag + ".log"));
    run_command(command, config, out, log);
    std::ofstream(work / (tag + ".out")) << out.str();
    return out.str();
  }
};

RunConfig base_config() {
  RunConfig c;
  for (const auto& [k, v] : std::vector<std::pair<std::string, std::string>>{{"synth_train", "3000"},
                                                                             {"synth_test", "600"},
                                                                             {"synth_canvas", "32"},
                                                                             {"variant", "dual-glance"},
                                                                             {"aggregation", "lse"},
                                                                             {"attention", "1"},
                                                                             {"patch_size", "16"},
                                                                             {"pair_backbone", "8p,16p"},
                                                                             {"union_backbone", "8p,16p"},
                                                                             {"context_backbone", "8p,16p"},
                                                                             {"k", "64"},
                                                                             {"lr", "0.01"},
                                                                             {"epochs", "15"},
                                                                             {"overwrite", "1"}})
    c.set(k, v);
  return c;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(std::ifstream(p)); }

struct SeedRun {
  std::uint64_t seed = 0;
  double dual = 0.0, first = 0.0;
  std::size_t cue_hits = 0, cue_eligible = 0;
  double seconds = 0.0;
  fs::path eval_dir;
};

// synth -> train -> eval for one seed under `dir`.
SeedRun pipeline(Runner& r, const fs::path& dir, std::uint64_t seed, const std::string& tag) {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig c = base_config();
  c.set("synth_seed", std::to_string(seed));
  c.set("seed", std::to_string(seed));
  c.set("out", (dir / "data").string());
  r.run("synth", c, tag + "_synth");
  c.set("data", (dir / "data").string());
  RunConfig t = c;
  t.set("out", (dir / "train").string());
  r.run("train", t, tag + "_train");
  RunConfig e = c;
  e.set("out", (dir / "eval").string());
  e.set("checkpoint", (dir / "train" / "model.ckpt").string());
  const std::string out = r.run("eval", e, tag + "_eval");

  SeedRun s;
  s.seed = seed;
  s.seconds = seconds_since(t0);
  s.eval_dir = dir / "eval";
  s.dual = read_json(s.eval_dir / "metrics.json")["accuracy"].get<double>();
  s.first = read_json(s.eval_dir / "first_glance_metrics.json")["accuracy"].get<double>();
  const auto pos = out.find("cue top-1 attention: ");
  if (pos != std::string::npos) {
    std::istringstream in(out.substr(pos + 21));
    char slash = 0;
    in >> s.cue_hits >> slash >> s.cue_eligible;
  }
  return s;
}

struct Acceptance {
  Runner runner;
  std::vector<SeedRun> seeds;
  double c5_seconds = 0.0;
  std::optional<std::string> c5_error;

  void run_c5() {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      for (std::uint64_t seed : {0, 1, 2}) {
        seeds.push_back(pipeline(runner, runner.work / ("c5_seed" + std::to_string(seed)), seed,
                                 "c5_seed" + std::to_string(seed)));
        const auto& s = seeds.back();
        std::cerr << "seed " << seed << ": dual " << fmt(s.dual) << ", first glance " << fmt(s.first) << ", "
                  << fmt(s.seconds, 1) << "s\n";
      }
    } catch (const std::exception& e) {
      c5_error = e.what();
    }
    c5_seconds = seconds_since(t0);
  }

  Outcome c5() {
    if (seeds.empty() && !c5_error) run_c5();
    if (c5_error) return {Verdict::kFail, "pipeline error: " + *c5_error};
    double gap_sum = 0.0, min_gap = 1e9;
    std::ostringstream d;
    for (const auto& s : seeds) {
      const double gap = 100.0 * (s.dual - s.first);
      gap_sum += gap;
      min_gap = std::min(min_gap, gap);
      d << "seed " << s.seed << " dual " << fmt(s.dual) << " vs first glance " << fmt(s.first) << "; ";
    }
    const double mean_gap = gap_sum / static_cast<double>(seeds.size());
    d << "mean gap " << fmt(mean_gap, 2) << " points, min " << fmt(min_gap, 2) << ", runtime " << fmt(c5_seconds, 1)
      << "s";
    return pass_if(seeds.size() == 3 && mean_gap >= 10.0 && min_gap >= 5.0 && c5_seconds < 1800.0, d.str());
  }

  Outcome c6() {
    if (seeds.empty() && !c5_error) run_c5();
    if (c5_error) return {Verdict::kFail, "pipeline error: " + *c5_error};
    std::size_t hits = 0, eligible = 0;
    std::ostringstream d;
    for (const auto& s : seeds) {
      hits += s.cue_hits;
      eligible += s.cue_eligible;
      d << "seed " << s.seed << ' ' << s.cue_hits << '/' << s.cue_eligible << "; ";
    }
    const double rate = eligible ? static_cast<double>(hits) / static_cast<double>(eligible) : 0.0;
    d << "pooled " << hits << '/' << eligible << " = " << fmt(rate);
    return pass_if(eligible > 0 && rate >= 0.6, d.str());
  }

  Outcome c7() {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path dir = runner.work / "c7";
    fs::create_directories(dir);
    std::ofstream(dir / "grid.txt") << "axis.aggregation = max,avg,lse\naxis.attention = 1,0\nseeds = 0,1,2\n";
    RunConfig c = base_config();
    c.set("synth_seed", "0");
    c.set("grid", (dir / "grid.txt").string());
    c.set("out", (dir / "out").string());
    try {
      runner.run("ablate", c, "c7_ablate");
    } catch (const std::exception& e) {
      return {Verdict::kFail, std::string("ablation error: ") + e.what()};
    }
    const fs::path csv = dir / "out" / "ablation.csv";
    if (!fs::exists(csv)) return {Verdict::kFail, "ablation.csv missing"};

    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    for (std::istringstream hs(line); std::getline(hs, line, ',');) header.push_back(line);
    auto col = [&](const std::string& name) {
      return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
    };
    const std::size_t c_agg = col("aggregation"), c_att = col("attention"), c_seed = col("seed"),
                      c_acc = col("accuracy"), c_map = col("mAP");
    // acc[aggregation][seed][attention]
    std::map<std::string, std::map<std::string, std::array<double, 2>>> acc;
    std::size_t rows = 0;
    std::ostringstream cells;
    while (std::getline(in, line)) {
      std::vector<std::string> f;
      for (std::istringstream ls(line); std::getline(ls, line, ',');) f.push_back(line);
      if (f.size() != header.size()) return {Verdict::kFail, "malformed ablation.csv row"};
      ++rows;
      acc[f[c_agg]][f[c_seed]][f[c_att] == "1" ? 1 : 0] = std::stod(f[c_acc]);
      cells << f[c_agg] << (f[c_att] == "1" ? "+att" : "") << "/s" << f[c_seed] << " acc " << f[c_acc] << " mAP "
            << f[c_map] << "; ";
    }
    std::cerr << "criterion 7 cells: " << cells.str() << '\n';

    bool ok = rows == 18 && acc.size() == 3;
    std::ostringstream d;
    d << rows << " cells";
    for (const auto& [agg, by_seed] : acc) {
      int wins = 0;
      double on = 0.0, off = 0.0;
      for (const auto& [seed, a] : by_seed) {
        wins += a[1] >= a[0] ? 1 : 0;
        on += a[1];
        off += a[0];
      }
      const double n = static_cast<double>(by_seed.size());
      d << "; " << agg << " on>=off " << wins << "/" << by_seed.size() << " (mean " << fmt(on / n) << " vs "
        << fmt(off / n) << ")";
      ok = ok && by_seed.size() == 3 && wins >= 2;
    }
    d << ", " << fmt(seconds_since(t0), 1) << "s, csv " << csv.string();
    return pass_if(ok, d.str());
  }

  Outcome c8() {
    if (seeds.empty() && !c5_error) run_c5();
    if (c5_error) return {Verdict::kFail, "pipeline error: " + *c5_error};
    SeedRun again;
    try {
      again = pipeline(runner, runner.work / "c8_rerun", 0, "c8_rerun");
    } catch (const std::exception& e) {
      return {Verdict::kFail, std::string("rerun error: ") + e.what()};
    }
    const SeedRun& first = seeds.front();
    std::ostringstream d;
    bool ok = true;
    for (const char* f : {"metrics.json", "first_glance_metrics.json", "metrics_swap_off.json",
                          "metrics_swap_on.json"}) {
      const std::string a = sha256_file(first.eval_dir / f), b = sha256_file(again.eval_dir / f);
      ok = ok && a == b;
      d << f << ' ' << (a == b ? "equal" : "DIFFERENT") << " (" << a.substr(0, 12) << "); ";
    }
    const bool ckpt = sha256_file(runner.work / "c5_seed0" / "train" / "model.ckpt") ==
                      sha256_file(runner.work / "c8_rerun" / "train" / "model.ckpt");
    d << "model.ckpt " << (ckpt ? "equal" : "DIFFERENT");
    return pass_if(ok && ckpt, d.str());
  }
};

// ---------------------------------------------------------------- criterion 9

Outcome pisc_ingest(Runner& r, const std::string& annotations, const std::string& images) {
  if (annotations.empty()) return {Verdict::kSkip, "no PISC annotation file given (--pisc-annotations)"};
  if (!fs::exists(annotations)) return {Verdict::kSkip, "PISC annotations not found at " + annotations};
  RunConfig c;
  c.set("annotations", annotations);
  if (!images.empty()) c.set("image_root", images);
  c.set("out", (r.work / "c9").string());
  c.set("overwrite", "1");
  try {
    r.run("ingest", c, "c9_ingest");
  } catch (const std::exception& e) {
    return {Verdict::kFail, std::string("ingest error: ") + e.what()};
  }
  const auto j = read_json(r.work / "c9" / "stats.json");
  const auto images_n = j["images"].get<std::size_t>(), samples = j["samples"].get<std::size_t>();
  std::ostringstream d;
  d << images_n << " images, " << samples << " valid samples (expected 22670 / 76568)";
  return pass_if(images_n == 22670 && samples == 76568, d.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria runner"};
  std::string work = "acceptance_work";
  std::vector<int> only;
  std::string pisc_annotations, pisc_images;
  app.add_option("--work", work, "scratch directory (recreated)");
  app.add_option("--criteria", only, "subset of criteria to run")->check(CLI::Range(1, 9));
  app.add_option("--pisc-annotations", pisc_annotations, "PISC annotation file in the documented text format");
  app.add_option("--pisc-images", pisc_images, "PISC image directory");
  CLI11_PARSE(app, argc, argv);
  if (pisc_annotations.empty())
    if (const char* env = std::getenv("DG_PISC_ANNOTATIONS")) pisc_annotations = env;
  if (pisc_images.empty())
    if (const char* env = std::getenv("DG_PISC_IMAGES")) pisc_images = env;

  Acceptance acc;
  acc.runner.work = fs::absolute(work);
  fs::remove_all(acc.runner.work);
  fs::create_directories(acc.runner.work);

  const std::map<int, std::function<Outcome()>> criteria = {
      {1, gradient_suite},
      {2, aggregation_algebra},
      {3, selection_oracle},
      {4, vote_oracles},
      {5, [&] { return acc.c5(); }},
      {6, [&] { return acc.c6(); }},
      {7, [&] { return acc.c7(); }},
      {8, [&] { return acc.c8(); }},
      {9, [&] { return pisc_ingest(acc.runner, pisc_annotations, pisc_images); }},
  };
  int failed = 0;
  std::ofstream summary(acc.runner.work / "summary.txt");
  for (const auto& [n, fn] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), n) == only.end()) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {Verdict::kFail, std::string("error: ") + e.what()};
    }
    const char* tag = o.verdict == Verdict::kPass ? "PASS" : o.verdict == Verdict::kSkip ? "SKIP" : "FAIL";
    std::ostringstream line;
    line << "criterion " << n << ": " << tag << " - " << o.detail;
    std::cout << line.str() << std::endl;
    summary << line.str() << std::endl;
    failed += o.verdict == Verdict::kFail ? 1 : 0;
  }
  return failed ? 1 : 0;
}

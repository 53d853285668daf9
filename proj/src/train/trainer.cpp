// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

#include "common/errors.hpp"
#include "common/kv.hpp"
#include "data/sampling.hpp"
#include "diffcore/ops.hpp"

namespace dg {
namespace {

using Clock = std::chrono::steady_clock;

std::vector<std::size_t> labels_of(std::span<const PreparedSample* const> batch) {
  std::vector<std::size_t> out;
  out.reserve(batch.size());
  for (const auto* s : batch) out.push_back(s->label);
  return out;
}

// Precomputed first-glance rows for every training sample.
struct FrozenCache {
  std::size_t c = 0, k = 0;
  std::vector<double> s1, v_top;

  DualGlanceModel::FirstGlanceOutput gather(std::span<const std::size_t> idx) const {
    std::vector<double> a, b;
    a.reserve(idx.size() * c);
    b.reserve(idx.size() * k);
    for (std::size_t i : idx) {
      a.insert(a.end(), s1.begin() + static_cast<std::ptrdiff_t>(i * c),
               s1.begin() + static_cast<std::ptrdiff_t>((i + 1) * c));
      b.insert(b.end(), v_top.begin() + static_cast<std::ptrdiff_t>(i * k),
               v_top.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
    }
    return {Tensor::from({idx.size(), c}, std::move(a)), Tensor::from({idx.size(), k}, std::move(b))};
  }
};

FrozenCache build_cache(const DualGlanceModel& model, std::span<const PreparedSample> samples) {
  FrozenCache cache;
  cache.c = model.config().num_classes;
  cache.k = model.config().k;
  for (std::size_t lo = 0; lo < samples.size(); lo += 64) {
    std::vector<const PreparedSample*> batch;
    for (std::size_t i = lo; i < std::min(samples.size(), lo + 64); ++i) batch.push_back(&samples[i]);
    const auto fg = model.first_glance(batch);
    cache.s1.insert(cache.s1.end(), fg.s1.values().begin(), fg.s1.values().end());
    cache.v_top.insert(cache.v_top.end(), fg.v_top.values().begin(), fg.v_top.values().end());
  }
  return cache;
}

TrainResult run_stage(const DualGlanceModel& model, const ParameterList& params, int stage,
                      std::span<const PreparedSample> train, const TrainSchedule& schedule,
                      const FrozenCache* frozen, const TrainObserver& observer) {
  if (train.empty()) throw DataError("training set is empty");
  if (params.empty()) throw UsageError("stage " + std::to_string(stage) + " has no parameters to train");
  const std::size_t c = model.config().num_classes;
  std::vector<std::size_t> classes;
  classes.reserve(train.size());
  for (const auto& s : train) classes.push_back(s.label);
  StratifiedBatcher batcher(classes, c, schedule.batch_size, schedule.seed * 2 + static_cast<std::uint64_t>(stage));
  SgdMomentum opt(schedule.sgd);
  for (const auto& p : params) Tensor(p.tensor).zero_grad();

  TrainResult result;
  result.stage = stage;
  double smoothed = 0.0, best = 0.0;
  std::size_t since_best = 0;
  const auto start = Clock::now();
  const std::size_t cap = schedule.epoch_cap(stage);
  bool stop = false;
  for (std::size_t epoch = 0; epoch < cap && !stop; ++epoch) {
    double epoch_sum = 0.0;
    std::size_t epoch_steps = 0;
    for (std::size_t b = 0; b < batcher.batches_per_epoch(); ++b) {
      if (schedule.max_steps && result.steps >= schedule.max_steps) {
        stop = true;
        break;
      }
      const std::vector<std::size_t> idx = batcher.next();
      std::vector<const PreparedSample*> batch;
      batch.reserve(idx.size());
      for (std::size_t i : idx) batch.push_back(&train[i]);
      const std::vector<std::size_t> labels = labels_of(batch);

      Tape tape;
      Tensor loss;
      std::size_t clamped = 0;
      {
        TapeScope scope(tape);
        Tensor s;
        if (stage == 1 && model.config().has_second_glance()) {
          s = model.first_glance(batch).s1;
        } else if (frozen) {
          const auto fg = frozen->gather(idx);
          s = model.forward(batch, &fg).s;
        } else {
          s = model.forward(batch).s;
        }
        loss = ops::softmax_cross_entropy(s, labels, &clamped);
      }
      if (loss.requires_grad()) tape.backward(loss);
      const StepReport rep = opt.step(params, result.steps);

      const double l = loss.item();
      result.clamped += clamped;
      if (result.steps == 0) {
        result.initial_loss = l;
        smoothed = l;
      } else {
        smoothed = schedule.smoothing * smoothed + (1.0 - schedule.smoothing) * l;
      }
      if (smoothed > schedule.divergence_factor * result.initial_loss) {
        std::ostringstream os;
        os << "stage " << stage << " diverged at step " << result.steps << ": smoothed loss " << smoothed
           << " exceeds " << schedule.divergence_factor << " x initial " << result.initial_loss
           << " (last grad norm " << rep.grad_norm << ")";
        throw NumericalError(os.str());
      }
      result.step_loss.push_back(l);
      epoch_sum += l;
      ++epoch_steps;
      ++result.steps;
      if (observer.log) {
        const double wall = std::chrono::duration<double>(Clock::now() - start).count();
        *observer.log << "stage=" << stage << " epoch=" << epoch << " step=" << result.steps - 1
                      << " loss=" << kv_format(l) << " lr=" << kv_format(schedule.sgd.lr_fresh)
                      << " grad_norm=" << kv_format(rep.grad_norm) << " clipped=" << rep.clipped
                      << " wall_s=" << wall << '\n';
      }
    }
    if (epoch_steps == 0) break;
    const double mean = epoch_sum / static_cast<double>(epoch_steps);
    result.epoch_loss.push_back(mean);
    result.epochs = epoch + 1;
    if (epoch == 0 || mean < best - schedule.min_delta) {
      best = mean;
      since_best = 0;
    } else if (++since_best >= schedule.patience) {
      result.converged = true;
      stop = true;
    }
    if (observer.on_epoch) observer.on_epoch(stage, epoch, result);
  }
  return result;
}

}  // namespace

bool TrainSchedule::set(std::string_view key, std::string_view value) {
  if (key == "batch_size") batch_size = kv_size(key, value);
  else if (key == "epochs") epochs = kv_size(key, value);
  else if (key == "stage2_epochs") stage2_epochs = kv_size(key, value);
  else if (key == "patience") patience = kv_size(key, value);
  else if (key == "min_delta") min_delta = kv_double(key, value);
  else if (key == "divergence_factor") divergence_factor = kv_double(key, value);
  else if (key == "max_steps") max_steps = kv_size(key, value);
  else if (key == "checkpoint_every") checkpoint_every = kv_size(key, value);
  else if (key == "seed") seed = kv_u64(key, value);
  else if (key == "lr") sgd.lr_fresh = kv_double(key, value);
  else if (key == "lr_finetune") sgd.lr_finetune = kv_double(key, value);
  else if (key == "momentum") sgd.momentum = kv_double(key, value);
  else if (key == "clip_norm") sgd.clip_norm = kv_double(key, value);
  else return false;
  return true;
}

std::vector<std::pair<std::string, std::string>> TrainSchedule::entries() const {
  return {
      {"batch_size", std::to_string(batch_size)},
      {"epochs", std::to_string(epochs)},
      {"stage2_epochs", std::to_string(stage2_epochs)},
      {"patience", std::to_string(patience)},
      {"min_delta", kv_format(min_delta)},
      {"divergence_factor", kv_format(divergence_factor)},
      {"max_steps", std::to_string(max_steps)},
      {"checkpoint_every", std::to_string(checkpoint_every)},
      {"seed", std::to_string(seed)},
      {"lr", kv_format(sgd.lr_fresh)},
      {"lr_finetune", kv_format(sgd.lr_finetune)},
      {"momentum", kv_format(sgd.momentum)},
      {"clip_norm", kv_format(sgd.clip_norm)},
  };
}

void TrainSchedule::validate() const {
  if (batch_size == 0) throw UsageError("batch_size must be >= 1");
  if (epochs == 0) throw UsageError("epochs must be >= 1");
  if (patience == 0) throw UsageError("patience must be >= 1");
  if (!(min_delta >= 0.0)) throw UsageError("min_delta must be >= 0");
  if (!(divergence_factor > 1.0)) throw UsageError("divergence_factor must be > 1");
  if (!(smoothing >= 0.0 && smoothing < 1.0)) throw UsageError("smoothing must lie in [0, 1)");
  sgd.validate();
}

NormalizerStats fit_geometry_normalizer(std::span<const PreparedSample> samples) {
  std::vector<GeometryFeature> feats;
  feats.reserve(2 * samples.size());
  for (const auto& s : samples) {
    for (std::size_t half = 0; half < 2; ++half) {
      GeometryFeature g;
      std::copy_n(s.geometry.begin() + static_cast<std::ptrdiff_t>(5 * half), 5, g.begin());
      feats.push_back(g);
    }
  }
  return fit_normalizer(feats);
}

TrainResult train_stage1(DualGlanceModel& model, std::span<const PreparedSample> train,
                         const TrainSchedule& schedule, const TrainObserver& observer) {
  schedule.validate();
  if (!model.config().has_first_glance()) {
    throw UsageError("variant " + std::string(variant_name(model.config().variant)) + " has no first glance to train");
  }
  if (model.config().uses_bbox()) model.set_normalizer(fit_geometry_normalizer(train));
  const ParameterList params =
      model.config().has_second_glance() ? model.first_glance_parameters() : model.parameters();
  return run_stage(model, params, 1, train, schedule, nullptr, observer);
}

TrainResult train_stage2(DualGlanceModel& model, const Checkpoint* stage1, std::span<const PreparedSample> train,
                         const TrainSchedule& schedule, const TrainObserver& observer) {
  schedule.validate();
  if (!model.config().has_second_glance()) {
    throw UsageError("variant " + std::string(variant_name(model.config().variant)) + " has no second glance");
  }
  std::optional<FrozenCache> cache;
  if (model.config().has_first_glance()) {
    if (!stage1) throw UsageError("stage 2 requires a stage-1 checkpoint");
    model.load_state(*stage1, true);
    cache = build_cache(model, train);
  }
  return run_stage(model, model.second_glance_parameters(), 2, train, schedule, cache ? &*cache : nullptr,
                   observer);
}

double mean_loss(const DualGlanceModel& model, std::span<const PreparedSample> samples, std::size_t batch_size) {
  if (samples.empty()) throw DataError("mean_loss: no samples");
  double total = 0.0;
  for (std::size_t lo = 0; lo < samples.size(); lo += batch_size) {
    std::vector<const PreparedSample*> batch;
    for (std::size_t i = lo; i < std::min(samples.size(), lo + batch_size); ++i) batch.push_back(&samples[i]);
    const Tensor loss = ops::softmax_cross_entropy(model.forward(batch).s, labels_of(batch));
    total += loss.item() * static_cast<double>(batch.size());
  }
  return total / static_cast<double>(samples.size());
}

void save_model(const std::filesystem::path& path, const DualGlanceModel& model, const TrainResult& result,
                std::uint64_t seed, const std::map<std::string, std::string>& extra) {
  std::map<std::string, std::string> manifest = extra;
  const auto entries = model.config().entries();
  for (const auto& [k, v] : entries) manifest["model." + k] = v;
  manifest["config_hash"] = config_hash(entries);
  manifest["seed"] = std::to_string(seed);
  manifest["stage"] = std::to_string(result.stage);
  manifest["epochs"] = std::to_string(result.epochs);
  manifest["steps"] = std::to_string(result.steps);
  manifest["converged"] = result.converged ? "1" : "0";
  std::string curve;
  for (double l : result.epoch_loss) curve += (curve.empty() ? "" : ",") + kv_format(l);
  manifest["loss_curve"] = curve;
  save_checkpoint(path, model.state(), manifest);
}

}  // namespace dg

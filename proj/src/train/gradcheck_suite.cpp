// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "train/gradcheck_suite.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <random>

#include "data/synth.hpp"
#include "diffcore/gradcheck.hpp"
#include "diffcore/ops.hpp"
#include "model/network.hpp"
#include "model/scoring.hpp"
#include "train/trainer.hpp"
#include "vision/backbone.hpp"

namespace dg {
namespace {

using Op = std::function<Tensor(const Tensor&)>;

class Suite {
 public:
  explicit Suite(std::uint64_t seed) : rng_(seed) {}

  Tensor rand(Shape s, double lo = -1.0, double hi = 1.0, bool grad = true) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(shape_numel(s));
    for (auto& x : v) x = d(rng_);
    return Tensor::from(std::move(s), std::move(v), grad);
  }

  // Magnitudes in [0.1, 1] with random sign, clear of kinks at zero.
  Tensor away_from_zero(Shape s) {
    Tensor t = rand(std::move(s), 0.1, 1.0);
    std::bernoulli_distribution coin(0.5);
    for (auto& x : t.mutable_values())
      if (coin(rng_)) x = -x;
    return t;
  }

  // Reduces op(x) to a scalar with fixed random weights, then checks.
  void check(const std::string& group, const std::string& name, const Tensor& x, const Op& op, double tol) {
    auto weights = std::make_shared<std::optional<Tensor>>();
    Op f = [this, op, weights](const Tensor& in) {
      Tensor y = op(in);
      if (!*weights) *weights = rand(y.shape(), -1.0, 1.0, false);
      return ops::sum(ops::mul(y, **weights));
    };
    entries.push_back({group, name, grad_check(f, x).max_relative_error, tol});
  }

  // f is already scalar-valued.
  void check_scalar(const std::string& group, const std::string& name, const Tensor& x, const Op& f, double tol) {
    entries.push_back({group, name, grad_check(f, x).max_relative_error, tol});
  }

  std::mt19937_64& rng() { return rng_; }

  std::vector<GradCheckEntry> entries;

 private:
  std::mt19937_64 rng_;
};

void primitives(Suite& s) {
  const double tol = kPrimitiveTolerance;
  const std::string g = "primitive";
  auto a = s.rand({3, 4}), b = s.rand({3, 4});
  s.check(g, "add.lhs", a, [b](const Tensor& x) { return ops::add(x, b); }, tol);
  s.check(g, "add.rhs", b, [a](const Tensor& x) { return ops::add(a, x); }, tol);
  s.check(g, "sub.lhs", a, [b](const Tensor& x) { return ops::sub(x, b); }, tol);
  s.check(g, "sub.rhs", b, [a](const Tensor& x) { return ops::sub(a, x); }, tol);
  s.check(g, "mul.lhs", a, [b](const Tensor& x) { return ops::mul(x, b); }, tol);
  s.check(g, "mul.rhs", b, [a](const Tensor& x) { return ops::mul(a, x); }, tol);
  s.check(g, "mul.square", a, [](const Tensor& x) { return ops::mul(x, x); }, tol);
  s.check(g, "scale", a, [](const Tensor& x) { return ops::scale(x, -2.5); }, tol);

  auto img = s.rand({2, 3, 2, 2}), bias = s.rand({3});
  s.check(g, "add_bias.x", img, [bias](const Tensor& x) { return ops::add_bias(x, bias); }, tol);
  s.check(g, "add_bias.bias", bias, [img](const Tensor& x) { return ops::add_bias(img, x); }, tol);

  auto rows = s.rand({4, 3}), rw = s.rand({4, 1}), rv = s.rand({4});
  s.check(g, "scale_rows.x", rows, [rw](const Tensor& x) { return ops::scale_rows(x, rw); }, tol);
  s.check(g, "scale_rows.column", rw, [rows](const Tensor& x) { return ops::scale_rows(rows, x); }, tol);
  s.check(g, "scale_rows.vector", rv, [rows](const Tensor& x) { return ops::scale_rows(rows, x); }, tol);

  auto ma = s.rand({3, 5}), mb = s.rand({5, 2});
  s.check(g, "matmul.lhs", ma, [mb](const Tensor& x) { return ops::matmul(x, mb); }, tol);
  s.check(g, "matmul.rhs", mb, [ma](const Tensor& x) { return ops::matmul(ma, x); }, tol);

  auto ax = s.rand({4, 5}), aw = s.rand({3, 5}), ab = s.rand({3});
  s.check(g, "affine.x", ax, [aw, ab](const Tensor& x) { return ops::affine(x, aw, ab); }, tol);
  s.check(g, "affine.weight", aw, [ax, ab](const Tensor& x) { return ops::affine(ax, x, ab); }, tol);
  s.check(g, "affine.bias", ab, [ax, aw](const Tensor& x) { return ops::affine(ax, aw, x); }, tol);

  auto cx = s.rand({2, 2, 5, 5}), cw = s.rand({3, 2, 3, 3}), cb = s.rand({3});
  for (auto opt : {ops::Conv2dOptions{1, 1}, ops::Conv2dOptions{2, 0}}) {
    const std::string tag = "conv2d[s" + std::to_string(opt.stride) + "p" + std::to_string(opt.padding) + "]";
    s.check(g, tag + ".x", cx, [cw, cb, opt](const Tensor& x) { return ops::conv2d(x, cw, cb, opt); }, tol);
    s.check(g, tag + ".weight", cw, [cx, cb, opt](const Tensor& x) { return ops::conv2d(cx, x, cb, opt); }, tol);
    s.check(g, tag + ".bias", cb, [cx, cw, opt](const Tensor& x) { return ops::conv2d(cx, cw, x, opt); }, tol);
  }

  auto px = s.rand({2, 2, 5, 5});
  s.check(g, "max_pool2d.ceil", px, [](const Tensor& x) { return ops::max_pool2d(x, 2, 2); }, tol);
  auto nz = s.away_from_zero({3, 4});
  s.check(g, "relu", nz, [](const Tensor& x) { return ops::relu(x); }, tol);
  s.check(g, "sigmoid", s.rand({3, 4}, -4.0, 4.0), [](const Tensor& x) { return ops::sigmoid(x); }, tol);
  s.check(g, "exp", s.rand({3, 4}, -2.0, 2.0), [](const Tensor& x) { return ops::exp(x); }, tol);
  s.check(g, "log", s.rand({3, 4}, 0.5, 2.0), [](const Tensor& x) { return ops::log(x); }, tol);

  auto c0 = s.rand({2, 3}), c1 = s.rand({2, 2});
  s.check(g, "concat.axis1.first", c0, [c1](const Tensor& x) { return ops::concat(std::vector<Tensor>{x, c1}, 1); }, tol);
  s.check(g, "concat.axis1.second", c1, [c0](const Tensor& x) { return ops::concat(std::vector<Tensor>{c0, x}, 1); }, tol);
  auto c2 = s.rand({3, 3});
  s.check(g, "concat.axis0", c2, [c0](const Tensor& x) { return ops::concat(std::vector<Tensor>{c0, x}, 0); }, tol);
  s.check(g, "reshape", s.rand({2, 6}), [](const Tensor& x) { return ops::reshape(x, {3, 4}); }, tol);
  s.check(g, "flatten", s.rand({2, 2, 3}), [](const Tensor& x) { return ops::flatten(x); }, tol);

  auto r = s.rand({3, 4});
  s.check(g, "sum", r, [](const Tensor& x) { return ops::sum(x); }, tol);
  s.check(g, "mean", r, [](const Tensor& x) { return ops::mean(x); }, tol);
  s.check(g, "sum.axis1", r, [](const Tensor& x) { return ops::sum(x, 1); }, tol);
  s.check(g, "mean.axis0", r, [](const Tensor& x) { return ops::mean(x, 0); }, tol);
  s.check(g, "max.axis1", r, [](const Tensor& x) { return ops::max(x, 1); }, tol);
  s.check(g, "max.axis0", r, [](const Tensor& x) { return ops::max(x, 0); }, tol);

  s.check(g, "tile_rows", s.rand({4}), [](const Tensor& x) { return ops::tile_rows(x, 3); }, tol);
  const std::vector<std::size_t> gidx = {2, 0, 2, 1};
  s.check(g, "gather_rows", s.rand({3, 4}), [gidx](const Tensor& x) { return ops::gather_rows(x, gidx); }, tol);

  const std::vector<std::size_t> offs = {0, 3, 3, 5};
  auto seg = s.rand({5, 3}, -3.0, 3.0);
  for (auto [mode, name] : {std::pair{ops::SegmentReduce::kSum, "sum"}, std::pair{ops::SegmentReduce::kMean, "mean"},
                            std::pair{ops::SegmentReduce::kMax, "max"},
                            std::pair{ops::SegmentReduce::kLog1pSumExp, "log1p_sum_exp"}}) {
    s.check(g, std::string("segment_reduce.") + name, seg,
            [offs, mode = mode](const Tensor& x) { return ops::segment_reduce(x, offs, mode); }, tol);
  }

  auto fm = s.rand({2, 3, 6, 6});
  const std::vector<ops::RoiCells> rois = {{0, 0, 6, 0, 6}, {1, 1, 4, 2, 5}, {0, 3, 4, 3, 4}};
  s.check(g, "roi_max_pool", fm, [rois](const Tensor& x) { return ops::roi_max_pool(x, rois, 2); }, tol);

  const std::vector<std::size_t> labels = {0, 2, 1, 2};
  s.check_scalar(g, "softmax_cross_entropy", s.rand({4, 3}, -3.0, 3.0),
                 [labels](const Tensor& x) { return ops::softmax_cross_entropy(x, labels); }, tol);
}

void components(Suite& s) {
  const double tol = kPrimitiveTolerance;
  const std::string g = "component";
  std::mt19937_64 init(11);
  Backbone bb("probe", BackboneSpec::parse("4p,6"), LrGroup::kFresh, init);
  // Zero-initialized biases would put pre-activations exactly on the ReLU kink.
  for (const auto& p : bb.parameters())
    if (p.name.ends_with(".b"))
      for (auto& v : Tensor(p.tensor).mutable_values()) v = std::uniform_real_distribution<double>(0.1, 0.5)(init);
  Tensor images = s.rand({2, 3, 8, 8}, 0.0, 1.0, false);
  for (const auto& p : bb.parameters()) {
    s.check(g, "backbone." + p.name, p.tensor, [bb, images](const Tensor&) { return bb.forward(images); }, tol);
  }

  const std::size_t k = 5, c = 3;
  AttentionParams ap{s.rand({k}), s.rand({1, k}), s.rand({1}), s.rand({c, k}), s.rand({c})};
  Tensor v = s.rand({4, k}), vt = s.rand({4, k});
  const std::vector<std::size_t> offs = {0, 1, 1, 4};
  auto pipeline = [&ap, offs](const Tensor& bag, const Tensor& top) {
    const Tensor a = attention_weights(bag, top, ap);
    return aggregate(region_scores(bag, &a, ap), offs, Aggregation::kLse);
  };
  s.check(g, "attention.bag", v, [pipeline, vt](const Tensor& x) { return pipeline(x, vt); }, tol);
  s.check(g, "attention.top_down", vt, [pipeline, v](const Tensor& x) { return pipeline(v, x); }, tol);
  for (auto* t : {&ap.w_top, &ap.w_ha, &ap.b_a, &ap.w_s, &ap.b_s}) {
    const std::string name = t == &ap.w_top ? "w_top" : t == &ap.w_ha ? "w_ha" : t == &ap.b_a ? "b_a"
                                                        : t == &ap.w_s  ? "w_s"  : "b_s";
    s.check(g, "attention." + name, *t, [pipeline, v, vt](const Tensor&) { return pipeline(v, vt); }, tol);
  }
}

void end_to_end(Suite& s) {
  SyntheticSceneSpec spec;
  const SyntheticData data = synth_generate(spec, 6, 0, 5);
  ModelConfig cfg;
  cfg.patch_size = 8;
  cfg.pair_backbone = "3p,4";
  cfg.union_backbone = "3p,4";
  cfg.context_backbone = "3p,4";
  cfg.k = 6;
  cfg.bbox_hidden = 4;
  cfg.context_size = 16;
  cfg.alpha = 0.7;
  const auto samples = prepare_samples(data.dataset, data.dataset.samples, cfg);
  std::vector<const PreparedSample*> batch;
  std::vector<std::size_t> labels;
  for (const auto& p : samples) {
    batch.push_back(&p);
    labels.push_back(p.label);
  }
  for (Aggregation mode : {Aggregation::kLse, Aggregation::kMax, Aggregation::kAvg}) {
    cfg.aggregation = mode;
    DualGlanceModel model(cfg, 3);
    model.set_normalizer(fit_geometry_normalizer(samples));
    const std::string tag = "dual_glance[" + std::string(aggregation_name(mode)) + "].";
    for (const auto& p : model.parameters()) {
      s.check_scalar("end-to-end", tag + p.name, p.tensor,
                     [&model, &batch, &labels](const Tensor&) {
                       return ops::softmax_cross_entropy(model.forward(batch).s, labels);
                     },
                     kEndToEndTolerance);
    }
  }
}

}  // namespace

std::vector<GradCheckEntry> run_gradcheck_suite(std::uint64_t seed) {
  Suite s(seed);
  primitives(s);
  components(s);
  end_to_end(s);
  return std::move(s.entries);
}

}  // namespace dg

// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

#include "common/errors.hpp"
#include "diffcore/ops.hpp"
#include "model/network.hpp"
#include "model/scoring.hpp"
#include "support.hpp"
#include "train/trainer.hpp"

namespace dg {
namespace {

AttentionParams random_attention(std::size_t k, std::size_t c, std::mt19937_64& rng) {
  return {test::random_tensor({k}, rng), test::random_tensor({1, k}, rng), test::random_tensor({1}, rng),
          test::random_tensor({c, k}, rng), test::random_tensor({c}, rng)};
}

void fill(const Tensor& t, double v) {
  Tensor h = t;
  for (auto& x : h.mutable_values()) x = v;
}

struct Fixture {
  SyntheticData synth;
  std::vector<PreparedSample> samples;
};

Fixture prepared(const ModelConfig& config, std::size_t n = 12, std::uint64_t seed = 5) {
  Fixture f{test::tiny_synth(n, 0, seed), {}};
  f.samples = prepare_samples(f.synth.dataset, f.synth.dataset.samples, config);
  return f;
}

std::unique_ptr<DualGlanceModel> fitted_model(const ModelConfig& config,
                                              const std::vector<PreparedSample>& samples, std::uint64_t seed = 3) {
  auto m = std::make_unique<DualGlanceModel>(config, seed);
  m->set_normalizer(fit_geometry_normalizer(samples));
  return m;
}

TEST(Attention, ZeroTopDownWeightIgnoresTopDownVector) {
  std::mt19937_64 rng(1);
  AttentionParams p = random_attention(5, 6, rng);
  fill(p.w_top, 0.0);
  const Tensor v = test::random_tensor({4, 5}, rng, -1, 1, false);
  const Tensor a = attention_weights(v, test::random_tensor({4, 5}, rng, -1, 1, false), p);
  const Tensor b = attention_weights(v, test::random_tensor({4, 5}, rng, -5, 5, false), p);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(a[i], b[i]);
}

TEST(Attention, ZeroWeightsGiveOneHalf) {
  std::mt19937_64 rng(2);
  AttentionParams p = random_attention(5, 6, rng);
  fill(p.w_ha, 0.0);
  fill(p.b_a, 0.0);
  const Tensor a = attention_weights(test::random_tensor({3, 5}, rng, -1, 1, false),
                                     test::random_tensor({3, 5}, rng, -1, 1, false), p);
  ASSERT_EQ(a.shape(), (Shape{3, 1}));
  for (double v : a.values()) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(Attention, MonotoneInBiasAndInUnitInterval) {
  std::mt19937_64 rng(3);
  AttentionParams p = random_attention(4, 3, rng);
  const Tensor v = test::random_tensor({6, 4}, rng, -1, 1, false);
  const Tensor top = test::random_tensor({6, 4}, rng, -1, 1, false);
  std::vector<double> prev(6, -1.0);
  for (double b = -6.0; b <= 6.0; b += 0.5) {
    fill(p.b_a, b);
    const Tensor a = attention_weights(v, top, p);
    for (std::size_t i = 0; i < 6; ++i) {
      EXPECT_GT(a[i], 0.0);
      EXPECT_LT(a[i], 1.0);
      EXPECT_GT(a[i], prev[i]);
      prev[i] = a[i];
    }
  }
}

TEST(Attention, ShapeMismatchRejected) {
  std::mt19937_64 rng(4);
  const AttentionParams p = random_attention(4, 3, rng);
  EXPECT_THROW(attention_weights(Tensor::zeros({2, 4}), Tensor::zeros({3, 4}), p), ShapeError);
  EXPECT_THROW(attention_weights(Tensor::zeros({2, 5}), Tensor::zeros({2, 5}), p), ShapeError);
}

TEST(RegionScores, ZeroAttentionGivesBias) {
  std::mt19937_64 rng(5);
  const AttentionParams p = random_attention(4, 3, rng);
  const Tensor v = test::random_tensor({2, 4}, rng, -1, 1, false);
  const Tensor a = Tensor::zeros({2, 1});
  const Tensor s = region_scores(v, &a, p);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(s[r * 3 + c], p.b_s[c]);
}

TEST(RegionScores, LinearInAttention) {
  std::mt19937_64 rng(6);
  const AttentionParams p = random_attention(4, 3, rng);
  const Tensor v = test::random_tensor({1, 4}, rng, -1, 1, false);
  auto at = [&](double a) {
    const Tensor t = Tensor::from({1, 1}, {a});
    return region_scores(v, &t, p);
  };
  const Tensor s0 = at(0.0), s1 = at(0.3), s2 = at(0.6);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(s2[c] - s1[c], s1[c] - s0[c], 1e-12);
  const Tensor none = region_scores(v, nullptr, p);
  const Tensor one = at(1.0);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(none[c], one[c], 1e-12);
  const Tensor wrong = Tensor::zeros({2, 1});
  EXPECT_THROW(region_scores(v, &wrong, p), ShapeError);
}

TEST(Aggregate, LogSumExpExamples) {
  const auto z = aggregate({{0.0}}, 1, Aggregation::kLse);
  EXPECT_NEAR(z[0], std::log(2.0), 1e-12);
  const auto t = aggregate({{10.0}, {0.0}}, 1, Aggregation::kLse);
  EXPECT_NEAR(t[0], std::log(1.0 + std::exp(10.0) + 1.0), 1e-12);
  const auto m = aggregate({{1.0, -2.0}, {3.0, -4.0}}, 2, Aggregation::kMax);
  EXPECT_EQ(m, (std::vector<double>{3.0, -2.0}));
  const auto a = aggregate({{1.0, -2.0}, {3.0, -4.0}}, 2, Aggregation::kAvg);
  EXPECT_EQ(a, (std::vector<double>{2.0, -3.0}));
}

TEST(Aggregate, EmptyBagIsZeroForEveryMode) {
  for (Aggregation mode : {Aggregation::kMax, Aggregation::kAvg, Aggregation::kLse})
    EXPECT_EQ(aggregate({}, 3, mode), std::vector<double>(3, 0.0));
}

TEST(Aggregate, OrderingProperties) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  std::uniform_int_distribution<int> len(1, 8);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::vector<double>> s(static_cast<std::size_t>(len(rng)), std::vector<double>(2));
    for (auto& r : s)
      for (auto& v : r) v = u(rng);
    const auto mx = aggregate(s, 2, Aggregation::kMax);
    const auto av = aggregate(s, 2, Aggregation::kAvg);
    const auto ls = aggregate(s, 2, Aggregation::kLse);
    for (std::size_t c = 0; c < 2; ++c) {
      EXPECT_LE(av[c], mx[c] + 1e-12);
      EXPECT_GT(ls[c], std::max(mx[c], 0.0));
      EXPECT_TRUE(std::isfinite(ls[c]));
    }
  }
}

TEST(Aggregate, PermutationInvariant) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<std::vector<double>> s(5, std::vector<double>(3));
  for (auto& r : s)
    for (auto& v : r) v = u(rng);
  for (Aggregation mode : {Aggregation::kMax, Aggregation::kAvg, Aggregation::kLse}) {
    const auto before = aggregate(s, 3, mode);
    auto shuffled = s;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto after = aggregate(shuffled, 3, mode);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(before[c], after[c], 1e-12);
  }
}

TEST(Fuse, Examples) {
  const std::vector<double> s1 = {1, 2, 3}, s2 = {10, 20, 30};
  EXPECT_EQ(fuse(s1, s2, 0.0), s1);
  EXPECT_EQ(fuse(s1, s2, 0.5), (std::vector<double>{6, 12, 18}));
  EXPECT_THROW(fuse(s1, std::vector<double>{1.0}, 1.0), ShapeError);
  EXPECT_THROW(fuse(s1, s2, -1.0), UsageError);
}

TEST(PredictProba, UniformShiftInvariantAndNormalized) {
  for (double v : predict_proba(std::vector<double>(6, 0.0))) EXPECT_NEAR(v, 1.0 / 6.0, 1e-15);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> s(6);
    for (auto& v : s) v = u(rng);
    const auto p = predict_proba(s);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    std::vector<double> shifted = s;
    for (auto& v : shifted) v += 123.0;
    const auto q = predict_proba(shifted);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
  }
}

TEST(PredictProba, ArgmaxInvariantUnderPositiveScaling) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> s(6);
    for (auto& v : s) v = u(rng);
    std::vector<double> b = s;
    for (auto& v : b) v *= 2.0;
    const auto p = predict_proba(s), q = predict_proba(b);
    EXPECT_EQ(std::max_element(p.begin(), p.end()) - p.begin(), std::max_element(q.begin(), q.end()) - q.begin());
  }
}

TEST(Model, ForwardShapesAndFusion) {
  const ModelConfig config = test::tiny_config();
  const Fixture f = prepared(config);
  const auto m = fitted_model(config, f.samples);
  const auto batch = test::pointers(f.samples);
  const auto o = m->forward(batch);
  ASSERT_TRUE(o.first && o.second);
  EXPECT_EQ(o.s.shape(), (Shape{batch.size(), 6}));
  EXPECT_EQ(o.first->v_top.shape(), (Shape{batch.size(), config.k}));
  for (std::size_t i = 0; i < o.s.numel(); ++i)
    EXPECT_NEAR(o.s[i], o.first->s1[i] + config.alpha * o.second->s2[i], 1e-12);
  for (const auto& sb : m->score_all(f.samples)) {
    EXPECT_NEAR(std::accumulate(sb.p.begin(), sb.p.end(), 0.0), 1.0, 1e-12);
    EXPECT_EQ(sb.attention.size(), sb.region_scores.size());
  }
}

TEST(Model, EmptyBagFallsBackToFirstGlance) {
  const ModelConfig config = test::tiny_config();
  Fixture f = prepared(config);
  for (auto& s : f.samples) {
    s.regions.clear();
    s.roi_boxes.clear();
  }
  const auto m = fitted_model(config, f.samples);
  for (const auto& sb : m->score_all(f.samples)) {
    EXPECT_EQ(sb.s2, std::vector<double>(6, 0.0));
    EXPECT_EQ(sb.s, sb.s1);
    EXPECT_TRUE(sb.attention.empty());
  }
}

TEST(Model, AlphaZeroMatchesFirstGlanceVariant) {
  ModelConfig dual = test::tiny_config();
  dual.alpha = 0.0;
  ModelConfig first = dual;
  first.variant = Variant::kFirstGlance;
  const Fixture f = prepared(dual);
  const auto a = fitted_model(dual, f.samples, 11);
  const auto b = fitted_model(first, f.samples, 11);
  const auto x = a->score_all(f.samples), y = b->score_all(f.samples);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t c = 0; c < 6; ++c) EXPECT_DOUBLE_EQ(x[i].s[c], y[i].s[c]);
}

TEST(Model, ZeroFirstGlanceWeightsGiveZeroS1) {
  const ModelConfig config = test::tiny_config();
  const Fixture f = prepared(config);
  const auto m = fitted_model(config, f.samples);
  for (const auto& p : m->first_glance_parameters()) fill(p.tensor, 0.0);
  for (const auto& sb : m->score_all(f.samples)) EXPECT_EQ(sb.s1, std::vector<double>(6, 0.0));
}

TEST(Model, BBoxVariantIgnoresPixels) {
  ModelConfig config = test::tiny_config();
  config.variant = Variant::kBBox;
  Fixture f = prepared(config);
  const auto m = fitted_model(config, f.samples);
  const auto before = m->score_all(f.samples);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& s : f.samples)
    for (ImagePlane* im : {&s.p1, &s.p2, &s.p_union})
      for (auto& v : im->values) v = u(rng);
  const auto after = m->score_all(f.samples);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(before[i].s, after[i].s);
}

TEST(Model, UnionCnnIgnoresPairCrops) {
  ModelConfig config = test::tiny_config();
  config.variant = Variant::kUnionCnn;
  Fixture f = prepared(config);
  const auto m = fitted_model(config, f.samples);
  for (const auto& p : m->parameters()) EXPECT_EQ(p.name.rfind("fg.pair", 0), std::string::npos) << p.name;
  const auto before = m->score_all(f.samples);
  for (auto& s : f.samples) {
    std::swap(s.p1, s.p2);
    for (auto& v : s.p1.values) v = 1.0 - v;
  }
  const auto after = m->score_all(f.samples);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(before[i].s, after[i].s);
}

TEST(Model, AttentionOffIgnoresAttentionParameters) {
  ModelConfig config = test::tiny_config();
  config.attention = false;
  const Fixture f = prepared(config);
  const auto m = fitted_model(config, f.samples);
  for (const auto& p : m->parameters()) {
    EXPECT_NE(p.name, "sg.w_top");
    EXPECT_NE(p.name, "sg.w_ha");
    EXPECT_NE(p.name, "sg.b_a");
  }
  const auto before = m->score_all(f.samples);
  const auto& a = m->second_glance_params().attention;
  fill(a.w_top, 3.0);
  fill(a.w_ha, -2.0);
  fill(a.b_a, 7.0);
  const auto after = m->score_all(f.samples);
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_EQ(before[i].s, after[i].s);
    for (double w : after[i].attention) EXPECT_EQ(w, 1.0);
  }
}

TEST(Model, SceneVariantUnsupported) {
  ModelConfig config = test::tiny_config();
  config.variant = Variant::kPairCnnBBoxScene;
  try {
    DualGlanceModel m(config, 1);
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("external weights"), std::string::npos);
  }
}

TEST(Model, RcnnHasNoFirstGlanceAndAveragesRegions) {
  ModelConfig config = test::tiny_config();
  config.variant = Variant::kRcnn;
  const Fixture f = prepared(config);
  const DualGlanceModel m(config, 2);
  EXPECT_TRUE(m.first_glance_parameters().empty());
  EXPECT_EQ(config.effective_aggregation(), Aggregation::kAvg);
  for (const auto& sb : m.score_all(f.samples)) {
    EXPECT_EQ(sb.s, sb.s2);
    EXPECT_EQ(sb.s2, aggregate(sb.region_scores, 6, Aggregation::kAvg));
  }
}

TEST(Model, PairSwapAveragingIsSymmetricAndCostsTwoPasses) {
  ModelConfig config = test::tiny_config();
  config.pair_swap_averaging = true;
  const Fixture f = prepared(config);
  const auto m = fitted_model(config, f.samples);
  for (const auto& s : f.samples) {
    const std::size_t before = m->forward_passes();
    const auto p = m->predict_pair_symmetric(s);
    EXPECT_EQ(m->forward_passes() - before, 2u);
    const auto q = m->predict_pair_symmetric(swapped_view(s));
    for (std::size_t c = 0; c < 6; ++c) EXPECT_NEAR(p[c], q[c], 1e-12);
    const auto sb = m->score(s);
    for (std::size_t c = 0; c < 6; ++c) EXPECT_NEAR(sb.p[c], p[c], 1e-12);
  }
}

TEST(Model, SwappedViewExchangesPersons) {
  const ModelConfig config = test::tiny_config();
  const Fixture f = prepared(config, 6);
  const PreparedSample& s = f.samples.front();
  const PreparedSample t = swapped_view(s);
  EXPECT_EQ(t.b1, s.b2);
  EXPECT_EQ(t.b2, s.b1);
  EXPECT_EQ(t.p1, s.p2);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(t.geometry[i], s.geometry[5 + i]);
  EXPECT_EQ(swapped_view(t).geometry, s.geometry);
}

TEST(Model, StateRoundTripReproducesScores) {
  const ModelConfig config = test::tiny_config();
  const Fixture f = prepared(config, 6);
  const auto a = fitted_model(config, f.samples, 21);
  DualGlanceModel b(config, 99);
  Checkpoint ck;
  ck.tensors = a->state();
  b.load_state(ck);
  const auto x = a->score_all(f.samples), y = b.score_all(f.samples);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i].s, y[i].s);
}

TEST(Model, SeedDeterminesInitialization) {
  const ModelConfig config = test::tiny_config();
  const DualGlanceModel a(config, 4), b(config, 4), c(config, 5);
  const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  bool differs = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_TRUE(std::equal(pa[i].tensor.values().begin(), pa[i].tensor.values().end(),
                           pb[i].tensor.values().begin()));
    differs |= !std::equal(pa[i].tensor.values().begin(), pa[i].tensor.values().end(),
                           pc[i].tensor.values().begin());
  }
  EXPECT_TRUE(differs);
}

TEST(Model, BagSelectionFollowsConfig) {
  ModelConfig config = test::tiny_config();
  config.m = 2;
  const Fixture f = prepared(config);
  for (const auto& s : f.samples) {
    EXPECT_LE(s.regions.size(), 2u);
    EXPECT_EQ(s.regions.size(), s.roi_boxes.size());
    for (const auto& r : s.regions) EXPECT_LT(std::max(iou(r.box, s.b1), iou(r.box, s.b2)), config.tau_u);
  }
}

TEST(Config, SetValidateAndHash) {
  ModelConfig c;
  EXPECT_TRUE(c.set("alpha", "0.5"));
  EXPECT_FALSE(c.set("nonsense", "1"));
  EXPECT_EQ(c.alpha, 0.5);
  EXPECT_EQ(config_hash(c.entries()), config_hash(ModelConfig(c).entries()));
  ModelConfig d = c;
  d.k = 7;
  EXPECT_NE(config_hash(c.entries()), config_hash(d.entries()));
  d.num_classes = 4;
  EXPECT_THROW(d.validate(), UsageError);
  for (Variant v : {Variant::kUnionCnn, Variant::kBBox, Variant::kPairCnn, Variant::kPairCnnBBox,
                    Variant::kFirstGlance, Variant::kPairCnnBBoxGlobal, Variant::kRcnn, Variant::kDualGlance})
    EXPECT_EQ(parse_variant(variant_name(v)), v);
  EXPECT_THROW(parse_variant("bogus"), UsageError);
}

}  // namespace
}  // namespace dg

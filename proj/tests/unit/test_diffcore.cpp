// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "common/errors.hpp"
#include "diffcore/checkpoint.hpp"
#include "diffcore/gradcheck.hpp"
#include "diffcore/ops.hpp"
#include "diffcore/tensor.hpp"
#include "support.hpp"

namespace dg {
namespace {

using test::random_tensor;

TEST(Tensor, ShapeAndGradInvariants) {
  Tensor t = Tensor::zeros({2, 3}, true);
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_EQ(t.grad().size(), 6u);
  EXPECT_TRUE(Tensor::zeros({4}).grad().empty());
  EXPECT_THROW(Tensor::from({2, 2}, {1, 2, 3}), ShapeError);
}

TEST(Tensor, CopiesAliasAndCloneDetaches) {
  Tensor a = Tensor::from({2}, {1, 2});
  Tensor b = a;
  b.mutable_values()[0] = 5;
  EXPECT_EQ(a[0], 5);
  Tensor c = a.clone();
  c.mutable_values()[0] = 7;
  EXPECT_EQ(a[0], 5);
  EXPECT_FALSE(c.same_storage(a));
}

TEST(Ops, SigmoidAtZero) {
  Tensor x = Tensor::scalar(0.0, true);
  Tape tape;
  Tensor y;
  {
    TapeScope scope(tape);
    y = ops::sum(ops::sigmoid(x));
  }
  EXPECT_DOUBLE_EQ(y.item(), 0.5);
  tape.backward(y);
  EXPECT_DOUBLE_EQ(x.grad()[0], 0.25);
}

TEST(Ops, ReluPiecewise) {
  Tensor x = Tensor::from({2}, {-3.0, 3.0}, true);
  Tape tape;
  Tensor y;
  {
    TapeScope scope(tape);
    y = ops::relu(x);
  }
  EXPECT_EQ(y[0], 0.0);
  EXPECT_EQ(y[1], 3.0);
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = ops::sum(y);
  }
  tape.backward(loss);
  EXPECT_EQ(x.grad()[0], 0.0);
  EXPECT_EQ(x.grad()[1], 1.0);
}

TEST(Ops, ShapeMismatchNamesOpAndShapes) {
  Tensor a = Tensor::zeros({2, 3}), b = Tensor::zeros({3, 2});
  try {
    ops::add(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("add"), std::string::npos);
    EXPECT_NE(msg.find("2"), std::string::npos);
    EXPECT_NE(msg.find("3"), std::string::npos);
  }
  EXPECT_THROW(ops::matmul(a, a), ShapeError);
  EXPECT_THROW(ops::conv2d(Tensor::zeros({1, 2, 4, 4}), Tensor::zeros({1, 3, 3, 3}), Tensor::zeros({1})),
               ShapeError);
}

TEST(Backward, IdentityLoss) {
  Tensor x = Tensor::scalar(3.0, true);
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = ops::sum(x);
  }
  tape.backward(loss);
  EXPECT_EQ(x.grad()[0], 1.0);
}

TEST(Backward, SumOfSquares) {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = ops::sum(ops::mul(x, x));
  }
  tape.backward(loss);
  EXPECT_EQ(x.grad()[0], 2.0);
  EXPECT_EQ(x.grad()[1], 4.0);
}

TEST(Backward, NonScalarLossRejected) {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  Tape tape;
  Tensor y;
  {
    TapeScope scope(tape);
    y = ops::scale(x, 2.0);
  }
  EXPECT_THROW(tape.backward(y), ShapeError);
}

TEST(Backward, AccumulatesAcrossUses) {
  std::mt19937_64 rng(3);
  Tensor x = random_tensor({5}, rng);
  auto f = [](const Tensor& t) { return ops::sum(ops::exp(t)); };
  auto g = [](const Tensor& t) { return ops::sum(ops::mul(t, t)); };
  auto grad_of = [&](auto fn) {
    x.zero_grad();
    Tape tape;
    Tensor loss;
    {
      TapeScope scope(tape);
      loss = fn(x);
    }
    tape.backward(loss);
    return std::vector<double>(x.grad().begin(), x.grad().end());
  };
  const auto gf = grad_of(f);
  const auto gg = grad_of(g);
  const auto both = grad_of([&](const Tensor& t) { return ops::add(f(t), g(t)); });
  for (std::size_t i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(both[i], gf[i] + gg[i]);
}

TEST(Backward, NoTapeMeansInference) {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  Tensor y = ops::mul(x, x);
  EXPECT_EQ(y[1], 4.0);
  EXPECT_FALSE(y.requires_grad());
}

TEST(GradCheck, SumIsExact) {
  std::mt19937_64 rng(1);
  const auto r = grad_check([](const Tensor& x) { return ops::sum(x); }, random_tensor({7}, rng));
  EXPECT_LT(r.max_relative_error, 1e-10);
}

TEST(GradCheck, SigmoidAtZero) {
  const auto r = grad_check([](const Tensor& x) { return ops::sum(ops::sigmoid(x)); }, Tensor::scalar(0.0, true));
  EXPECT_LT(r.max_relative_error, 1e-8);
  EXPECT_NEAR(r.analytic_at_worst, 0.25, 1e-15);
}

TEST(GradCheck, LseBag) {
  const std::vector<std::size_t> offs = {0, 3};
  const auto r = grad_check(
      [&](const Tensor& x) { return ops::sum(ops::segment_reduce(x, offs, ops::SegmentReduce::kLog1pSumExp)); },
      Tensor::from({3, 1}, {0.3, -1.2, 2.0}, true));
  EXPECT_LT(r.max_relative_error, 1e-7);
}

TEST(GradCheck, ConvOnSingleChannelInput) {
  std::mt19937_64 rng(9);
  Tensor w = random_tensor({2, 1, 3, 3}, rng, -1, 1, false);
  Tensor b = random_tensor({2}, rng, -1, 1, false);
  Tensor weights = random_tensor({1, 2, 4, 4}, rng, -1, 1, false);
  const auto r = grad_check(
      [&](const Tensor& x) { return ops::sum(ops::mul(ops::conv2d(x, w, b, {1, 1}), weights)); },
      random_tensor({1, 1, 4, 4}, rng));
  EXPECT_LT(r.max_relative_error, 1e-6);
}

TEST(GradCheck, NonFiniteProbeIsReported) {
  EXPECT_THROW(grad_check([](const Tensor& x) { return ops::sum(ops::log(x)); }, Tensor::from({2}, {1.0, 0.0}, true)),
               NumericalError);
}

// Every primitive over 100 random draws.
class PrimitiveSweep : public ::testing::TestWithParam<int> {};

TEST_P(PrimitiveSweep, RandomInputsPass) {
  std::mt19937_64 rng(1000 + GetParam());
  const Tensor w = random_tensor({3, 4}, rng, -1, 1, false);
  const Tensor m = random_tensor({4, 2}, rng, -1, 1, false);
  const Tensor aw = random_tensor({2, 4}, rng, -1, 1, false), ab = random_tensor({2}, rng, -1, 1, false);
  auto weighted = [&](const Tensor& y) {
    std::mt19937_64 r2(7);
    return ops::sum(ops::mul(y, random_tensor(y.shape(), r2, -1, 1, false)));
  };
  const std::vector<std::pair<const char*, std::function<Tensor(const Tensor&)>>> fs = {
      {"mul", [&](const Tensor& x) { return weighted(ops::mul(x, w)); }},
      {"add", [&](const Tensor& x) { return weighted(ops::add(x, ops::mul(x, x))); }},
      {"matmul", [&](const Tensor& x) { return weighted(ops::matmul(x, m)); }},
      {"affine", [&](const Tensor& x) { return weighted(ops::affine(x, aw, ab)); }},
      {"sigmoid", [&](const Tensor& x) { return weighted(ops::sigmoid(x)); }},
      {"exp", [&](const Tensor& x) { return weighted(ops::exp(x)); }},
      {"log", [&](const Tensor& x) { return weighted(ops::log(ops::add(ops::mul(x, x), Tensor::full({3, 4}, 0.5)))); }},
      {"max", [&](const Tensor& x) { return weighted(ops::max(x, 1)); }},
      {"mean", [&](const Tensor& x) { return weighted(ops::mean(x, 0)); }},
      {"concat", [&](const Tensor& x) { return weighted(ops::concat(std::vector<Tensor>{x, ops::scale(x, 2)}, 1)); }},
  };
  for (const auto& [name, f] : fs) {
    const auto r = grad_check(f, random_tensor({3, 4}, rng));
    EXPECT_LT(r.max_relative_error, 1e-6) << name;
  }
}

INSTANTIATE_TEST_SUITE_P(Draws, PrimitiveSweep, ::testing::Range(0, 100));

TEST(Determinism, ForwardIsBitIdentical) {
  std::mt19937_64 r1(4), r2(4);
  Tensor a = random_tensor({1, 2, 6, 6}, r1), wa = random_tensor({3, 2, 3, 3}, r1), ba = random_tensor({3}, r1);
  Tensor b = random_tensor({1, 2, 6, 6}, r2), wb = random_tensor({3, 2, 3, 3}, r2), bb = random_tensor({3}, r2);
  const Tensor ya = ops::max_pool2d(ops::relu(ops::conv2d(a, wa, ba, {1, 1})), 2, 2);
  const Tensor yb = ops::max_pool2d(ops::relu(ops::conv2d(b, wb, bb, {1, 1})), 2, 2);
  ASSERT_EQ(ya.numel(), yb.numel());
  for (std::size_t i = 0; i < ya.numel(); ++i) EXPECT_EQ(ya[i], yb[i]);
}

TEST(Ops, SegmentReduceEmptySegmentIsZero) {
  const Tensor x = Tensor::from({2, 2}, {1, 2, 3, 4});
  const std::vector<std::size_t> offs = {0, 0, 2};
  for (auto mode : {ops::SegmentReduce::kSum, ops::SegmentReduce::kMean, ops::SegmentReduce::kMax,
                    ops::SegmentReduce::kLog1pSumExp}) {
    const Tensor y = ops::segment_reduce(x, offs, mode);
    EXPECT_EQ(y[0], 0.0);
    EXPECT_EQ(y[1], 0.0);
  }
}

TEST(Ops, MaxPoolCeilMode) {
  const Tensor x = Tensor::zeros({1, 1, 5, 5});
  EXPECT_EQ(ops::max_pool2d(x, 2, 2).shape(), (Shape{1, 1, 3, 3}));
}

TEST(Ops, SoftmaxCrossEntropyValues) {
  std::size_t clamps = 0;
  const Tensor uniform = Tensor::zeros({1, 6});
  const std::vector<std::size_t> l0 = {0};
  EXPECT_NEAR(ops::softmax_cross_entropy(uniform, l0).item(), std::log(6.0), 1e-12);
  const Tensor sure = Tensor::from({1, 3}, {0, 0, -1e4});
  const std::vector<std::size_t> l2 = {2};
  EXPECT_NEAR(ops::softmax_cross_entropy(sure, l2, &clamps).item(), -std::log(1e-12), 1e-9);
  EXPECT_EQ(clamps, 1u);
  const Tensor onehot = Tensor::from({1, 2}, {1e3, 0});
  EXPECT_NEAR(ops::softmax_cross_entropy(onehot, l0).item(), 0.0, 1e-12);
}

TEST(Ops, SoftmaxCrossEntropyGradientIsPMinusOnehot) {
  std::mt19937_64 rng(2);
  Tensor logits = random_tensor({1, 4}, rng, -2, 2);
  const std::vector<std::size_t> label = {2};
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = ops::softmax_cross_entropy(logits, label);
  }
  tape.backward(loss);
  const auto p = ops::softmax(logits.values());
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(logits.grad()[i], p[i] - (i == 2 ? 1.0 : 0.0), 1e-15);
  const auto r = grad_check([&](const Tensor& x) { return ops::softmax_cross_entropy(x, label); }, logits);
  EXPECT_LT(r.max_relative_error, 1e-7);
}

TEST(Checkpoint, RoundTrip) {
  test::TempDir dir("ckpt");
  const auto path = dir.path() / "a.ckpt";
  const Tensor t = Tensor::from({2, 3}, {1, -2, 3.5, 1e-300, 0, 7});
  save_checkpoint(path, {{"x.w", t}}, {{"config_hash", "abc"}, {"seed", "4"}});
  const Checkpoint ck = load_checkpoint(path);
  ASSERT_TRUE(ck.contains("x.w"));
  EXPECT_EQ(ck.at("x.w").shape(), t.shape());
  for (std::size_t i = 0; i < t.numel(); ++i) EXPECT_EQ(ck.at("x.w")[i], t[i]);
  EXPECT_EQ(ck.manifest.at("config_hash"), "abc");
  EXPECT_EQ(ck.manifest.at("seed"), "4");
}

TEST(Checkpoint, TruncatedFileRejected) {
  test::TempDir dir("ckpt_bad");
  const auto path = dir.path() / "a.ckpt";
  save_checkpoint(path, {{"x", Tensor::from({4}, {1, 2, 3, 4})}}, {});
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 5);
  EXPECT_THROW(load_checkpoint(path), IoError);
}

}  // namespace
}  // namespace dg

// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dg {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Shared handle to a dense row-major double buffer with an optional gradient.
// Copies of a Tensor alias the same storage.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(d_); }
  const Shape& shape() const;
  std::size_t dim(std::size_t axis) const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;

  std::span<const double> values() const;
  std::span<double> mutable_values();
  double item() const;
  double operator[](std::size_t i) const { return values()[i]; }

  bool requires_grad() const;
  // Present iff requires_grad(); same extent as values().
  // Handle semantics: a const Tensor still exposes its gradient buffer.
  std::span<double> grad() const;
  void zero_grad();

  // Deep copy detached from any tape.
  Tensor clone(bool requires_grad = false) const;

  bool same_storage(const Tensor& other) const { return d_ == other.d_; }

 private:
  struct Data {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Data> d_;
};

// Ordered record of differentiable operations for one forward pass.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::string_view op, Tensor output, BackwardFn backward);
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and replays the recorded rules in reverse.
  // The tape is cleared afterwards.
  void backward(const Tensor& loss);

  void clear() { nodes_.clear(); }

 private:
  struct Node {
    std::string_view op;
    Tensor output;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

// Makes `tape` the recording target for ops issued on this thread while the
// scope is alive. Without an active tape ops run in inference mode.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

  static Tape* active();

 private:
  Tape* previous_;
};

}  // namespace dg

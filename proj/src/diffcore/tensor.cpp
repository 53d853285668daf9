// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "diffcore/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "common/errors.hpp"

namespace dg {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape.empty()) throw ShapeError("tensor: empty shape (use {1} for scalars)");
  for (auto e : shape) {
    if (e == 0) throw ShapeError("tensor: zero extent in shape " + shape_str(shape));
  }
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("tensor: shape " + shape_str(shape) + " does not hold " +
                     std::to_string(values.size()) + " values");
  }
  Tensor t;
  t.d_ = std::make_shared<Data>();
  t.d_->shape = std::move(shape);
  t.d_->values = std::move(values);
  t.d_->requires_grad = requires_grad;
  if (requires_grad) t.d_->grad.assign(t.d_->values.size(), 0.0);
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return d_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= d_->shape.size()) {
    throw ShapeError("tensor: axis " + std::to_string(axis) + " out of range for " +
                     shape_str(d_->shape));
  }
  return d_->shape[axis];
}

std::size_t Tensor::numel() const { return d_->values.size(); }

std::span<const double> Tensor::values() const { return d_->values; }
std::span<double> Tensor::mutable_values() { return d_->values; }

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item: tensor " + shape_str(shape()) + " is not scalar");
  return d_->values[0];
}

bool Tensor::requires_grad() const { return d_ && d_->requires_grad; }

std::span<double> Tensor::grad() const { return d_->grad; }

void Tensor::zero_grad() { std::fill(d_->grad.begin(), d_->grad.end(), 0.0); }

Tensor Tensor::clone(bool requires_grad) const {
  return from(d_->shape, d_->values, requires_grad);
}

void Tape::record(std::string_view op, Tensor output, BackwardFn backward) {
  nodes_.push_back(Node{op, std::move(output), std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward: loss must be a scalar tensor, got " +
                     (loss.defined() ? shape_str(loss.shape()) : std::string("undefined")));
  }
  if (!loss.requires_grad()) {
    throw UsageError("backward: loss does not depend on any requires_grad tensor");
  }
  // Intermediate gradients start from zero on every pass.
  for (auto& node : nodes_) node.output.zero_grad();
  Tensor seed = loss;
  seed.grad()[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward();
  nodes_.clear();
}

namespace {
thread_local Tape* g_active_tape = nullptr;
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }
Tape* TapeScope::active() { return g_active_tape; }

}  // namespace dg

// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "diffcore/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "common/errors.hpp"

namespace dg::ops {
namespace {

using MatR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<MatR>;
using CMapR = Eigen::Map<const MatR>;

[[noreturn]] void shape_fail(std::string_view op, const Tensor& a, const Tensor& b,
                             std::string_view why = "shape mismatch") {
  throw ShapeError(std::string(op) + ": " + std::string(why) + " " + shape_str(a.shape()) +
                   " vs " + shape_str(b.shape()));
}

[[noreturn]] void shape_fail(std::string_view op, const Tensor& a, std::string_view why) {
  throw ShapeError(std::string(op) + ": " + std::string(why) + " " + shape_str(a.shape()));
}

bool recording() { return TapeScope::active() != nullptr; }

template <class... Ts>
bool needs_grad(const Ts&... ts) {
  return recording() && (ts.requires_grad() || ...);
}

Tensor output(Shape shape, std::vector<double> values, bool grad, std::string_view op) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericalError(std::string(op) + ": non-finite value in forward output");
    }
  }
  return Tensor::from(std::move(shape), std::move(values), grad);
}

void record(std::string_view op, const Tensor& out, Tape::BackwardFn fn) {
  if (out.requires_grad()) TapeScope::active()->record(op, out, std::move(fn));
}

// Accumulates src into t's gradient when t participates in differentiation.
void accumulate(Tensor t, std::span<const double> src) {
  if (!t.requires_grad()) return;
  auto g = t.grad();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += src[i];
}

template <class F>
Tensor unary(std::string_view op, const Tensor& x, F&& f) {
  std::vector<double> out(x.numel());
  auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
  return output(x.shape(), std::move(out), needs_grad(x), op);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("add", a, b);
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] + b[i];
  auto out = output(a.shape(), std::move(v), needs_grad(a, b), "add");
  record("add", out, [a, b, out]() mutable {
    accumulate(a, out.grad());
    accumulate(b, out.grad());
  });
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("sub", a, b);
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] - b[i];
  auto out = output(a.shape(), std::move(v), needs_grad(a, b), "sub");
  record("sub", out, [a, b, out]() mutable {
    accumulate(a, out.grad());
    if (b.requires_grad()) {
      auto gb = b.grad();
      auto go = out.grad();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= go[i];
    }
  });
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("mul", a, b);
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] * b[i];
  auto out = output(a.shape(), std::move(v), needs_grad(a, b), "mul");
  record("mul", out, [a, b, out]() mutable {
    auto go = out.grad();
    if (a.requires_grad()) {
      auto ga = a.grad();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go[i] * b[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += go[i] * a[i];
    }
  });
  return out;
}

Tensor scale(const Tensor& x, double factor) {
  auto out = unary("scale", x, [factor](double v) { return v * factor; });
  record("scale", out, [x, out, factor]() mutable {
    if (!x.requires_grad()) return;
    auto gx = x.grad();
    auto go = out.grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * factor;
  });
  return out;
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  if (x.rank() < 2 || bias.rank() != 1 || bias.dim(0) != x.dim(1)) {
    shape_fail("add_bias", x, bias);
  }
  const std::size_t n = x.dim(0), c = x.dim(1);
  const std::size_t inner = x.numel() / (n * c);
  std::vector<double> v(x.values().begin(), x.values().end());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      double* p = v.data() + (i * c + j) * inner;
      for (std::size_t k = 0; k < inner; ++k) p[k] += bias[j];
    }
  auto out = output(x.shape(), std::move(v), needs_grad(x, bias), "add_bias");
  record("add_bias", out, [x, bias, out, n, c, inner]() mutable {
    accumulate(x, out.grad());
    if (bias.requires_grad()) {
      auto gb = bias.grad();
      auto go = out.grad();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) {
          const double* p = go.data() + (i * c + j) * inner;
          double s = 0.0;
          for (std::size_t k = 0; k < inner; ++k) s += p[k];
          gb[j] += s;
        }
    }
  });
  return out;
}

Tensor scale_rows(const Tensor& x, const Tensor& weights) {
  if (x.rank() != 2 || weights.numel() != x.dim(0) ||
      !(weights.rank() == 1 || (weights.rank() == 2 && weights.dim(1) == 1))) {
    shape_fail("scale_rows", x, weights);
  }
  const std::size_t r = x.dim(0), k = x.dim(1);
  std::vector<double> v(x.numel());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < k; ++j) v[i * k + j] = x[i * k + j] * weights[i];
  auto out = output(x.shape(), std::move(v), needs_grad(x, weights), "scale_rows");
  record("scale_rows", out, [x, weights, out, r, k]() mutable {
    auto go = out.grad();
    if (x.requires_grad()) {
      auto gx = x.grad();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < k; ++j) gx[i * k + j] += go[i * k + j] * weights[i];
    }
    if (weights.requires_grad()) {
      auto gw = weights.grad();
      for (std::size_t i = 0; i < r; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) s += go[i * k + j] * x[i * k + j];
        gw[i] += s;
      }
    }
  });
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) shape_fail("matmul", a, b);
  const auto m = static_cast<Eigen::Index>(a.dim(0));
  const auto kk = static_cast<Eigen::Index>(a.dim(1));
  const auto n = static_cast<Eigen::Index>(b.dim(1));
  std::vector<double> v(static_cast<std::size_t>(m * n));
  MapR(v.data(), m, n).noalias() =
      CMapR(a.values().data(), m, kk) * CMapR(b.values().data(), kk, n);
  auto out = output({a.dim(0), b.dim(1)}, std::move(v), needs_grad(a, b), "matmul");
  record("matmul", out, [a, b, out, m, kk, n]() mutable {
    CMapR go(out.grad().data(), m, n);
    if (a.requires_grad()) {
      MapR(a.grad().data(), m, kk).noalias() += go * CMapR(b.values().data(), kk, n).transpose();
    }
    if (b.requires_grad()) {
      MapR(b.grad().data(), kk, n).noalias() += CMapR(a.values().data(), m, kk).transpose() * go;
    }
  });
  return out;
}

Tensor affine(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (x.rank() != 2 || weight.rank() != 2 || weight.dim(1) != x.dim(1)) {
    shape_fail("affine", x, weight);
  }
  if (bias.rank() != 1 || bias.dim(0) != weight.dim(0)) {
    shape_fail("affine", weight, bias, "bias does not match weight");
  }
  const auto n = static_cast<Eigen::Index>(x.dim(0));
  const auto in = static_cast<Eigen::Index>(x.dim(1));
  const auto outw = static_cast<Eigen::Index>(weight.dim(0));
  std::vector<double> v(static_cast<std::size_t>(n * outw));
  MapR y(v.data(), n, outw);
  y.noalias() = CMapR(x.values().data(), n, in) * CMapR(weight.values().data(), outw, in).transpose();
  y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.values().data(), outw);
  auto out = output({x.dim(0), weight.dim(0)}, std::move(v), needs_grad(x, weight, bias), "affine");
  record("affine", out, [x, weight, bias, out, n, in, outw]() mutable {
    CMapR go(out.grad().data(), n, outw);
    if (x.requires_grad()) {
      MapR(x.grad().data(), n, in).noalias() += go * CMapR(weight.values().data(), outw, in);
    }
    if (weight.requires_grad()) {
      MapR(weight.grad().data(), outw, in).noalias() += go.transpose() * CMapR(x.values().data(), n, in);
    }
    if (bias.requires_grad()) {
      Eigen::Map<Eigen::RowVectorXd>(bias.grad().data(), outw) += go.colwise().sum();
    }
  });
  return out;
}

namespace {

struct ConvGeom {
  std::size_t n, c, h, w, o, kh, kw, stride, pad, oh, ow;
  std::size_t col_rows() const { return c * kh * kw; }
  std::size_t col_cols() const { return oh * ow; }
};

void im2col(const ConvGeom& g, const double* img, double* col) {
  for (std::size_t ci = 0; ci < g.c; ++ci)
    for (std::size_t ky = 0; ky < g.kh; ++ky)
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        double* row = col + ((ci * g.kh + ky) * g.kw + kx) * g.col_cols();
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                          static_cast<std::ptrdiff_t>(g.pad);
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                            static_cast<std::ptrdiff_t>(g.pad);
            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(g.h) &&
                                ix < static_cast<std::ptrdiff_t>(g.w);
            row[oy * g.ow + ox] =
                inside ? img[(ci * g.h + static_cast<std::size_t>(iy)) * g.w + static_cast<std::size_t>(ix)]
                       : 0.0;
          }
        }
      }
}

void col2im_add(const ConvGeom& g, const double* col, double* img) {
  for (std::size_t ci = 0; ci < g.c; ++ci)
    for (std::size_t ky = 0; ky < g.kh; ++ky)
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const double* row = col + ((ci * g.kh + ky) * g.kw + kx) * g.col_cols();
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                          static_cast<std::ptrdiff_t>(g.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                            static_cast<std::ptrdiff_t>(g.pad);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
            img[(ci * g.h + static_cast<std::size_t>(iy)) * g.w + static_cast<std::size_t>(ix)] +=
                row[oy * g.ow + ox];
          }
        }
      }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, Conv2dOptions options) {
  if (x.rank() != 4 || weight.rank() != 4 || weight.dim(1) != x.dim(1)) {
    shape_fail("conv2d", x, weight);
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != weight.dim(0))) {
    shape_fail("conv2d", weight, bias, "bias does not match weight");
  }
  if (options.stride == 0) throw ShapeError("conv2d: stride must be positive");
  ConvGeom g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), weight.dim(0), weight.dim(2), weight.dim(3),
             options.stride, options.padding, 0, 0};
  if (g.h + 2 * g.pad < g.kh || g.w + 2 * g.pad < g.kw) {
    shape_fail("conv2d", x, weight, "kernel larger than padded input");
  }
  g.oh = (g.h + 2 * g.pad - g.kh) / g.stride + 1;
  g.ow = (g.w + 2 * g.pad - g.kw) / g.stride + 1;

  const auto rows = static_cast<Eigen::Index>(g.col_rows());
  const auto cols = static_cast<Eigen::Index>(g.col_cols());
  const auto oc = static_cast<Eigen::Index>(g.o);
  std::vector<double> col(g.col_rows() * g.col_cols());
  std::vector<double> v(g.n * g.o * g.col_cols());
  CMapR wmat(weight.values().data(), oc, rows);
  for (std::size_t i = 0; i < g.n; ++i) {
    im2col(g, x.values().data() + i * g.c * g.h * g.w, col.data());
    MapR y(v.data() + i * g.o * g.col_cols(), oc, cols);
    y.noalias() = wmat * CMapR(col.data(), rows, cols);
    if (bias.defined()) y.colwise() += Eigen::Map<const Eigen::VectorXd>(bias.values().data(), oc);
  }
  const bool grad = bias.defined() ? needs_grad(x, weight, bias) : needs_grad(x, weight);
  auto out = output({g.n, g.o, g.oh, g.ow}, std::move(v), grad, "conv2d");
  record("conv2d", out, [x, weight, bias, out, g, rows, cols, oc]() mutable {
    std::vector<double> col(g.col_rows() * g.col_cols());
    std::vector<double> dcol(x.requires_grad() ? col.size() : 0);
    CMapR wmat(weight.values().data(), oc, rows);
    for (std::size_t i = 0; i < g.n; ++i) {
      CMapR go(out.grad().data() + i * g.o * g.col_cols(), oc, cols);
      if (weight.requires_grad()) {
        im2col(g, x.values().data() + i * g.c * g.h * g.w, col.data());
        MapR(weight.grad().data(), oc, rows).noalias() += go * CMapR(col.data(), rows, cols).transpose();
      }
      if (x.requires_grad()) {
        MapR(dcol.data(), rows, cols).noalias() = wmat.transpose() * go;
        col2im_add(g, dcol.data(), x.grad().data() + i * g.c * g.h * g.w);
      }
      if (bias.defined() && bias.requires_grad()) {
        Eigen::Map<Eigen::VectorXd>(bias.grad().data(), oc) += go.rowwise().sum();
      }
    }
  });
  return out;
}

Tensor max_pool2d(const Tensor& x, std::size_t kernel, std::size_t stride) {
  if (x.rank() != 4) shape_fail("max_pool2d", x, "expects (N, C, H, W), got");
  if (kernel == 0 || stride == 0) throw ShapeError("max_pool2d: kernel and stride must be positive");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  auto extent = [&](std::size_t e) {
    return e <= kernel ? std::size_t{1} : (e - kernel + stride - 1) / stride + 1;
  };
  const std::size_t oh = extent(h), ow = extent(w);
  std::vector<double> v(n * c * oh * ow);
  auto argmax = std::make_shared<std::vector<std::size_t>>(v.size());
  auto xv = x.values();
  for (std::size_t p = 0; p < n * c; ++p) {
    const std::size_t base = p * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const std::size_t y0 = oy * stride, x0 = ox * stride;
        const std::size_t y1 = std::min(y0 + kernel, h), x1 = std::min(x0 + kernel, w);
        std::size_t best = base + y0 * w + x0;
        for (std::size_t yy = y0; yy < y1; ++yy)
          for (std::size_t xx = x0; xx < x1; ++xx) {
            const std::size_t idx = base + yy * w + xx;
            if (xv[idx] > xv[best]) best = idx;
          }
        const std::size_t o = (p * oh + oy) * ow + ox;
        v[o] = xv[best];
        (*argmax)[o] = best;
      }
  }
  auto out = output({n, c, oh, ow}, std::move(v), needs_grad(x), "max_pool2d");
  record("max_pool2d", out, [x, out, argmax]() mutable {
    if (!x.requires_grad()) return;
    auto gx = x.grad();
    auto go = out.grad();
    for (std::size_t o = 0; o < go.size(); ++o) gx[(*argmax)[o]] += go[o];
  });
  return out;
}

Tensor relu(const Tensor& x) {
  auto out = unary("relu", x, [](double v) { return v > 0.0 ? v : 0.0; });
  record("relu", out, [x, out]() mutable {
    if (!x.requires_grad()) return;
    auto gx = x.grad();
    auto go = out.grad();
    for (std::size_t i = 0; i < gx.size(); ++i)
      if (x[i] > 0.0) gx[i] += go[i];
  });
  return out;
}

Tensor sigmoid(const Tensor& x) {
  auto out = unary("sigmoid", x, [](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
  record("sigmoid", out, [x, out]() mutable {
    if (!x.requires_grad()) return;
    auto gx = x.grad();
    auto go = out.grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * out[i] * (1.0 - out[i]);
  });
  return out;
}

Tensor exp(const Tensor& x) {
  auto out = unary("exp", x, [](double v) { return std::exp(v); });
  record("exp", out, [x, out]() mutable {
    if (!x.requires_grad()) return;
    auto gx = x.grad();
    auto go = out.grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * out[i];
  });
  return out;
}

Tensor log(const Tensor& x) {
  auto out = unary("log", x, [](double v) { return std::log(v); });
  record("log", out, [x, out]() mutable {
    if (!x.requires_grad()) return;
    auto gx = x.grad();
    auto go = out.grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] / x[i];
  });
  return out;
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Tensor& first = parts.front();
  if (axis >= first.rank()) shape_fail("concat", first, "axis out of range for");
  Shape shape = first.shape();
  shape[axis] = 0;
  for (const auto& p : parts) {
    if (p.rank() != first.rank()) shape_fail("concat", first, p);
    for (std::size_t d = 0; d < p.rank(); ++d)
      if (d != axis && p.dim(d) != first.dim(d)) shape_fail("concat", first, p);
    shape[axis] += p.dim(axis);
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= shape[d];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) inner *= shape[d];
  const std::size_t out_stride = shape[axis] * inner;
  std::vector<double> v(shape_numel(shape));
  bool grad = false;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t chunk = p.dim(axis) * inner;
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(p.values().data() + o * chunk, chunk, v.data() + o * out_stride + offset);
    offset += chunk;
    grad = grad || needs_grad(p);
  }
  auto out = output(shape, std::move(v), grad, "concat");
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  record("concat", out, [inputs, out, outer, inner, out_stride, axis]() mutable {
    auto go = out.grad();
    std::size_t off = 0;
    for (auto& p : inputs) {
      const std::size_t chunk = p.dim(axis) * inner;
      if (p.requires_grad()) {
        auto gp = p.grad();
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t i = 0; i < chunk; ++i) gp[o * chunk + i] += go[o * out_stride + off + i];
      }
      off += chunk;
    }
  });
  return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  auto out = output(std::move(shape), std::vector<double>(x.values().begin(), x.values().end()),
                    needs_grad(x), "reshape");
  record("reshape", out, [x, out]() mutable { accumulate(x, out.grad()); });
  return out;
}

Tensor flatten(const Tensor& x) { return reshape(x, {x.dim(0), x.numel() / x.dim(0)}); }

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  auto out = output({1}, {s}, needs_grad(x), "sum");
  record("sum", out, [x, out]() mutable {
    if (!x.requires_grad()) return;
    const double g = out.grad()[0];
    for (auto& gx : x.grad()) gx += g;
  });
  return out;
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

namespace {

struct AxisSplit {
  std::size_t outer, extent, inner;
  Shape reduced;
};

AxisSplit split_axis(std::string_view op, const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) shape_fail(op, x, "axis out of range for");
  AxisSplit s{1, x.dim(axis), 1, {}};
  for (std::size_t d = 0; d < x.rank(); ++d) {
    if (d < axis) s.outer *= x.dim(d);
    if (d > axis) s.inner *= x.dim(d);
    if (d != axis) s.reduced.push_back(x.dim(d));
  }
  if (s.reduced.empty()) s.reduced.push_back(1);
  return s;
}

}  // namespace

Tensor sum(const Tensor& x, std::size_t axis) {
  const auto s = split_axis("sum", x, axis);
  std::vector<double> v(s.outer * s.inner, 0.0);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t e = 0; e < s.extent; ++e)
      for (std::size_t i = 0; i < s.inner; ++i)
        v[o * s.inner + i] += x[(o * s.extent + e) * s.inner + i];
  auto out = output(s.reduced, std::move(v), needs_grad(x), "sum");
  record("sum", out, [x, out, s]() mutable {
    if (!x.requires_grad()) return;
    auto gx = x.grad();
    auto go = out.grad();
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t e = 0; e < s.extent; ++e)
        for (std::size_t i = 0; i < s.inner; ++i) gx[(o * s.extent + e) * s.inner + i] += go[o * s.inner + i];
  });
  return out;
}

Tensor mean(const Tensor& x, std::size_t axis) {
  return scale(sum(x, axis), 1.0 / static_cast<double>(x.dim(axis)));
}

Tensor max(const Tensor& x, std::size_t axis) {
  const auto s = split_axis("max", x, axis);
  std::vector<double> v(s.outer * s.inner);
  auto argmax = std::make_shared<std::vector<std::size_t>>(v.size());
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < s.inner; ++i) {
      std::size_t best = o * s.extent * s.inner + i;
      for (std::size_t e = 1; e < s.extent; ++e) {
        const std::size_t idx = (o * s.extent + e) * s.inner + i;
        if (x[idx] > x[best]) best = idx;
      }
      v[o * s.inner + i] = x[best];
      (*argmax)[o * s.inner + i] = best;
    }
  auto out = output(s.reduced, std::move(v), needs_grad(x), "max");
  record("max", out, [x, out, argmax]() mutable {
    if (!x.requires_grad()) return;
    auto gx = x.grad();
    auto go = out.grad();
    for (std::size_t o = 0; o < go.size(); ++o) gx[(*argmax)[o]] += go[o];
  });
  return out;
}

Tensor tile_rows(const Tensor& v, std::size_t n) {
  if (v.rank() != 1) shape_fail("tile_rows", v, "expects a vector, got");
  if (n == 0) throw ShapeError("tile_rows: zero rows");
  const std::size_t k = v.dim(0);
  std::vector<double> out_v(n * k);
  for (std::size_t r = 0; r < n; ++r) std::copy_n(v.values().data(), k, out_v.data() + r * k);
  auto out = output({n, k}, std::move(out_v), needs_grad(v), "tile_rows");
  record("tile_rows", out, [v, out, n, k]() mutable {
    if (!v.requires_grad()) return;
    auto gv = v.grad();
    auto go = out.grad();
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < k; ++j) gv[j] += go[r * k + j];
  });
  return out;
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index) {
  if (x.rank() != 2) shape_fail("gather_rows", x, "expects a matrix, got");
  if (index.empty()) throw ShapeError("gather_rows: empty index");
  const std::size_t b = x.dim(0), k = x.dim(1);
  std::vector<double> v(index.size() * k);
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= b) {
      throw ShapeError("gather_rows: row " + std::to_string(index[r]) + " out of range for " +
                       shape_str(x.shape()));
    }
    std::copy_n(x.values().data() + index[r] * k, k, v.data() + r * k);
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  auto out = output({index.size(), k}, std::move(v), needs_grad(x), "gather_rows");
  record("gather_rows", out, [x, out, idx, k]() mutable {
    if (!x.requires_grad()) return;
    auto gx = x.grad();
    auto go = out.grad();
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t j = 0; j < k; ++j) gx[idx[r] * k + j] += go[r * k + j];
  });
  return out;
}

Tensor segment_reduce(const Tensor& x, std::span<const std::size_t> offsets, SegmentReduce mode) {
  if (x.rank() != 2) shape_fail("segment_reduce", x, "expects (R, C), got");
  if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != x.dim(0)) {
    throw ShapeError("segment_reduce: offsets do not partition the " + std::to_string(x.dim(0)) +
                     " rows of " + shape_str(x.shape()));
  }
  const std::size_t b = offsets.size() - 1, c = x.dim(1);
  for (std::size_t s = 0; s < b; ++s) {
    if (offsets[s + 1] < offsets[s]) throw ShapeError("segment_reduce: offsets not monotone");
  }
  std::vector<double> v(b * c, 0.0);
  // Per-row backward coefficients: d out[s, j] / d x[r, j].
  auto coef = std::make_shared<std::vector<double>>(x.numel(), 0.0);
  for (std::size_t s = 0; s < b; ++s) {
    const std::size_t lo = offsets[s], hi = offsets[s + 1];
    if (lo == hi) continue;
    const double count = static_cast<double>(hi - lo);
    for (std::size_t j = 0; j < c; ++j) {
      switch (mode) {
        case SegmentReduce::kSum:
        case SegmentReduce::kMean: {
          double acc = 0.0;
          for (std::size_t r = lo; r < hi; ++r) acc += x[r * c + j];
          const double w = mode == SegmentReduce::kMean ? 1.0 / count : 1.0;
          v[s * c + j] = acc * w;
          for (std::size_t r = lo; r < hi; ++r) (*coef)[r * c + j] = w;
          break;
        }
        case SegmentReduce::kMax: {
          std::size_t best = lo;
          for (std::size_t r = lo + 1; r < hi; ++r)
            if (x[r * c + j] > x[best * c + j]) best = r;
          v[s * c + j] = x[best * c + j];
          (*coef)[best * c + j] = 1.0;
          break;
        }
        case SegmentReduce::kLog1pSumExp: {
          // log(1 + sum exp(x_r)) = m + log(exp(-m) + sum exp(x_r - m)), m >= 0.
          double m = 0.0;
          for (std::size_t r = lo; r < hi; ++r) m = std::max(m, x[r * c + j]);
          double acc = std::exp(-m);
          for (std::size_t r = lo; r < hi; ++r) acc += std::exp(x[r * c + j] - m);
          const double lse = m + std::log(acc);
          v[s * c + j] = lse;
          for (std::size_t r = lo; r < hi; ++r) (*coef)[r * c + j] = std::exp(x[r * c + j] - lse);
          break;
        }
      }
    }
  }
  std::vector<std::size_t> offs(offsets.begin(), offsets.end());
  auto out = output({b, c}, std::move(v), needs_grad(x), "segment_reduce");
  record("segment_reduce", out, [x, out, offs, coef, c]() mutable {
    if (!x.requires_grad()) return;
    auto gx = x.grad();
    auto go = out.grad();
    for (std::size_t s = 0; s + 1 < offs.size(); ++s)
      for (std::size_t r = offs[s]; r < offs[s + 1]; ++r)
        for (std::size_t j = 0; j < c; ++j) gx[r * c + j] += go[s * c + j] * (*coef)[r * c + j];
  });
  return out;
}

Tensor roi_max_pool(const Tensor& fm, std::span<const RoiCells> rois, std::size_t grid) {
  if (fm.rank() != 4) shape_fail("roi_max_pool", fm, "expects (N, C, H, W), got");
  if (grid == 0) throw ShapeError("roi_max_pool: grid must be positive");
  if (rois.empty()) throw ShapeError("roi_max_pool: no regions");
  const std::size_t n = fm.dim(0), c = fm.dim(1), h = fm.dim(2), w = fm.dim(3);
  const std::size_t per = c * grid * grid;
  std::vector<double> v(rois.size() * per);
  auto argmax = std::make_shared<std::vector<std::size_t>>(v.size());
  for (std::size_t r = 0; r < rois.size(); ++r) {
    const auto& roi = rois[r];
    if (roi.batch >= n || roi.row0 >= roi.row1 || roi.col0 >= roi.col1 || roi.row1 > h ||
        roi.col1 > w) {
      throw ShapeError("roi_max_pool: region rows [" + std::to_string(roi.row0) + "," +
                       std::to_string(roi.row1) + ") cols [" + std::to_string(roi.col0) + "," +
                       std::to_string(roi.col1) + ") invalid for map " + shape_str(fm.shape()));
    }
    const std::size_t rh = roi.row1 - roi.row0, rw = roi.col1 - roi.col0;
    for (std::size_t gy = 0; gy < grid; ++gy) {
      // floor(i*len/g) .. ceil((i+1)*len/g): never empty, covers the region.
      const std::size_t y0 = roi.row0 + gy * rh / grid;
      const std::size_t y1 = roi.row0 + ((gy + 1) * rh + grid - 1) / grid;
      for (std::size_t gx = 0; gx < grid; ++gx) {
        const std::size_t x0 = roi.col0 + gx * rw / grid;
        const std::size_t x1 = roi.col0 + ((gx + 1) * rw + grid - 1) / grid;
        for (std::size_t ch = 0; ch < c; ++ch) {
          const std::size_t base = (roi.batch * c + ch) * h * w;
          std::size_t best = base + y0 * w + x0;
          for (std::size_t yy = y0; yy < y1; ++yy)
            for (std::size_t xx = x0; xx < x1; ++xx) {
              const std::size_t idx = base + yy * w + xx;
              if (fm[idx] > fm[best]) best = idx;
            }
          const std::size_t o = r * per + (ch * grid + gy) * grid + gx;
          v[o] = fm[best];
          (*argmax)[o] = best;
        }
      }
    }
  }
  auto out = output({rois.size(), per}, std::move(v), needs_grad(fm), "roi_max_pool");
  record("roi_max_pool", out, [fm, out, argmax]() mutable {
    if (!fm.requires_grad()) return;
    auto g = fm.grad();
    auto go = out.grad();
    for (std::size_t o = 0; o < go.size(); ++o) g[(*argmax)[o]] += go[o];
  });
  return out;
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const std::size_t> labels,
                             std::size_t* clamp_count) {
  if (logits.rank() != 2 || labels.size() != logits.dim(0)) {
    throw ShapeError("softmax_cross_entropy: logits " + shape_str(logits.shape()) + " vs " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t b = logits.dim(0), c = logits.dim(1);
  static const double kMaxLoss = -std::log(1e-12);
  auto probs = std::make_shared<std::vector<double>>(logits.numel());
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    if (labels[i] >= c) {
      throw DataError("softmax_cross_entropy: label " + std::to_string(labels[i]) +
                      " out of range for " + std::to_string(c) + " classes");
    }
    const double* row = logits.values().data() + i * c;
    const double m = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - m);
    const double log_z = m + std::log(z);
    for (std::size_t j = 0; j < c; ++j) (*probs)[i * c + j] = std::exp(row[j] - log_z);
    double li = log_z - row[labels[i]];
    if (li > kMaxLoss) {
      li = kMaxLoss;
      if (clamp_count) ++*clamp_count;
    }
    total += li;
  }
  auto out = output({1}, {total / static_cast<double>(b)}, needs_grad(logits), "softmax_cross_entropy");
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  record("softmax_cross_entropy", out, [logits, out, probs, lab, b, c]() mutable {
    if (!logits.requires_grad()) return;
    auto g = logits.grad();
    const double scale_g = out.grad()[0] / static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        const double target = j == lab[i] ? 1.0 : 0.0;
        g[i * c + j] += scale_g * ((*probs)[i * c + j] - target);
      }
  });
  return out;
}

std::vector<double> softmax(std::span<const double> scores) {
  std::vector<double> p(scores.size());
  if (scores.empty()) return p;
  const double m = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) z += (p[i] = std::exp(scores[i] - m));
  for (auto& v : p) v /= z;
  return p;
}

}  // namespace dg::ops

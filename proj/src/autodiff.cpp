// Copyright 2026 The gmtl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gmtl/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gmtl/errors.hpp"
#include "gmtl/kernels.hpp"

namespace gmtl {

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kDiv: return "div";
    case OpKind::kScale: return "scale";
    case OpKind::kConcat: return "concat";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kTanh: return "tanh";
    case OpKind::kLrelu: return "lrelu";
    case OpKind::kLog: return "log";
    case OpKind::kExp: return "exp";
    case OpKind::kSquare: return "square";
    case OpKind::kSqrt: return "sqrt";
    case OpKind::kAbs: return "abs";
    case OpKind::kClamp: return "clamp";
    case OpKind::kMean: return "mean";
    case OpKind::kSum: return "sum";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kReshape: return "reshape";
    case OpKind::kSlice: return "slice";
    case OpKind::kConv2d: return "conv2d";
    case OpKind::kSoftmax: return "softmax";
  }
  return "unknown";
}

Param::Param(std::string n, Tensor v)
    : name(std::move(n)), value(std::move(v)), grad(value.shape(), 0.0) {}

const Tensor& Var::value() const {
  if (!tape_) throw ShapeError("value() on an unbound Var");
  return tape_->value(*this);
}

namespace {

[[noreturn]] void shape_fail(OpKind kind, const std::string& detail) {
  throw ShapeError(std::string(op_name(kind)) + ": " + detail);
}

std::string shapes_of(std::span<const Tensor* const> in) {
  std::string s;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (i) s += " and ";
    s += shape_str(in[i]->shape());
  }
  return s;
}

std::size_t norm_axis(OpKind kind, int axis, std::size_t rank) {
  int r = static_cast<int>(rank);
  int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) shape_fail(kind, "axis " + std::to_string(axis) + " out of range for rank " + std::to_string(rank));
  return static_cast<std::size_t>(a);
}

// outer x axis x inner decomposition around `axis`.
struct AxisSplit {
  std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.n = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

// Reduction plan: the kept shape has 1 on reduced axes.
struct ReducePlan {
  Shape out;       // user-visible output shape
  Shape kept;      // same rank as input
  Broadcast bc;    // input vs kept
  std::size_t count = 1;
};

ReducePlan reduce_plan(OpKind kind, const Shape& in, const OpAttrs& attrs) {
  ReducePlan p;
  std::vector<bool> reduced(in.size(), attrs.axes.empty());
  for (auto ax : attrs.axes) {
    if (ax >= in.size()) shape_fail(kind, "reduction axis " + std::to_string(ax) + " out of range for " + shape_str(in));
    if (reduced[ax]) shape_fail(kind, "duplicate reduction axis " + std::to_string(ax));
    reduced[ax] = true;
  }
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (reduced[i]) {
      p.count *= in[i];
      p.kept.push_back(1);
      if (attrs.keepdims) p.out.push_back(1);
    } else {
      p.kept.push_back(in[i]);
      p.out.push_back(in[i]);
    }
  }
  p.bc = make_broadcast(in, p.kept);
  return p;
}

// Per sample: y[n] (O x HW) = K (O x CKK) * cols[n] (CKK x HW).
Tensor conv2d_forward(const Tensor& x, const Tensor& k) {
  const Shape xs = x.shape(), ks = k.shape();
  const std::size_t N = xs[0], C = xs[1], H = xs[2], W = xs[3];
  const std::size_t O = ks[0], KH = ks[2], KW = ks[3];
  const std::size_t CKK = C * KH * KW, HW = H * W;
  std::vector<double> cols(CKK * HW);
  Tensor y({N, O, H, W});
  for (std::size_t n = 0; n < N; ++n) {
    im2col(x.data().data() + n * C * HW, C, H, W, KH, KW, cols.data());
    gemm_nn(O, CKK, HW, k.data().data(), cols.data(), y.data().data() + n * O * HW);
  }
  return y;
}

void conv2d_backward(const Tensor& x, const Tensor& k, const Tensor& g, Tensor* gx, Tensor* gk) {
  const Shape xs = x.shape(), ks = k.shape();
  const std::size_t N = xs[0], C = xs[1], H = xs[2], W = xs[3];
  const std::size_t O = ks[0], KH = ks[2], KW = ks[3];
  const std::size_t CKK = C * KH * KW, HW = H * W;
  std::vector<double> cols(CKK * HW);
  for (std::size_t n = 0; n < N; ++n) {
    const double* gn = g.data().data() + n * O * HW;
    if (gk) {
      im2col(x.data().data() + n * C * HW, C, H, W, KH, KW, cols.data());
      gemm_nt(O, HW, CKK, gn, cols.data(), gk->data().data());
    }
    if (gx) {
      std::fill(cols.begin(), cols.end(), 0.0);
      gemm_tn(O, CKK, HW, k.data().data(), gn, cols.data());
      col2im_add(cols.data(), C, H, W, KH, KW, gx->data().data() + n * C * HW);
    }
  }
}

template <class F>
Tensor unary(const Tensor& a, F f) {
  Tensor y(a.shape());
  const double* pa = a.data().data();
  double* py = y.data().data();
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) py[i] = f(pa[i]);
  return y;
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor forward_kernel(OpKind kind, const OpAttrs& attrs, std::span<const Tensor* const> in) {
  auto need = [&](std::size_t n) {
    if (in.size() != n) shape_fail(kind, "expected " + std::to_string(n) + " inputs, got " + std::to_string(in.size()));
  };
  switch (kind) {
    case OpKind::kLeaf:
      shape_fail(kind, "leaf nodes have no forward kernel");
    case OpKind::kMatmul: {
      need(2);
      const Tensor& a = *in[0];
      const Tensor& b = *in[1];
      if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        shape_fail(kind, "shape mismatch " + shapes_of(in));
      }
      Tensor y({a.dim(0), b.dim(1)});
      gemm_nn(a.dim(0), a.dim(1), b.dim(1), a.data().data(), b.data().data(), y.data().data());
      return y;
    }
    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul:
    case OpKind::kDiv: {
      need(2);
      broadcast_shape(in[0]->shape(), in[1]->shape(), op_name(kind));
      Broadcast bc = make_broadcast(in[0]->shape(), in[1]->shape());
      Tensor y(bc.out);
      const double* a = in[0]->data().data();
      const double* b = in[1]->data().data();
      double* py = y.data().data();
      switch (kind) {
        case OpKind::kAdd: for_each_broadcast(bc, [&](std::size_t o, std::size_t i, std::size_t j) { py[o] = a[i] + b[j]; }); break;
        case OpKind::kSub: for_each_broadcast(bc, [&](std::size_t o, std::size_t i, std::size_t j) { py[o] = a[i] - b[j]; }); break;
        case OpKind::kMul: for_each_broadcast(bc, [&](std::size_t o, std::size_t i, std::size_t j) { py[o] = a[i] * b[j]; }); break;
        default: {
          for (double v : in[1]->data()) {
            if (v == 0.0) throw DomainError("div: division by zero");
          }
          for_each_broadcast(bc, [&](std::size_t o, std::size_t i, std::size_t j) { py[o] = a[i] / b[j]; });
        }
      }
      return y;
    }
    case OpKind::kScale:
      need(1);
      return unary(*in[0], [s = attrs.alpha](double v) { return s * v; });
    case OpKind::kConcat: {
      if (in.empty()) shape_fail(kind, "no inputs");
      const Shape& s0 = in[0]->shape();
      std::size_t axis = norm_axis(kind, attrs.axis, s0.size());
      Shape out = s0;
      out[axis] = 0;
      for (auto* t : in) {
        const Shape& s = t->shape();
        bool ok = s.size() == s0.size();
        for (std::size_t d = 0; ok && d < s.size(); ++d) ok = d == axis || s[d] == s0[d];
        if (!ok) shape_fail(kind, "shape mismatch along non-concat axes: " + shapes_of(in));
        out[axis] += s[axis];
      }
      Tensor y(out);
      AxisSplit sp = split_at(out, axis);
      double* py = y.data().data();
      std::size_t offset = 0;
      for (auto* t : in) {
        const std::size_t block = t->dim(axis) * sp.inner;
        const double* pt = t->data().data();
        for (std::size_t o = 0; o < sp.outer; ++o) {
          std::copy_n(pt + o * block, block, py + o * sp.n * sp.inner + offset);
        }
        offset += block;
      }
      return y;
    }
    case OpKind::kSigmoid:
      need(1);
      return unary(*in[0], stable_sigmoid);
    case OpKind::kTanh:
      need(1);
      return unary(*in[0], [](double v) { return std::tanh(v); });
    case OpKind::kLrelu:
      need(1);
      return unary(*in[0], [a = attrs.alpha](double v) { return v > 0 ? v : a * v; });
    case OpKind::kLog:
      need(1);
      for (double v : in[0]->data()) {
        if (!(v > 0.0)) throw DomainError("log: non-positive input " + std::to_string(v));
      }
      return unary(*in[0], [](double v) { return std::log(v); });
    case OpKind::kExp:
      need(1);
      return unary(*in[0], [](double v) { return std::exp(v); });
    case OpKind::kSquare:
      need(1);
      return unary(*in[0], [](double v) { return v * v; });
    case OpKind::kSqrt:
      need(1);
      for (double v : in[0]->data()) {
        if (v < 0.0) throw DomainError("sqrt: negative input " + std::to_string(v));
      }
      return unary(*in[0], [](double v) { return std::sqrt(v); });
    case OpKind::kAbs:
      need(1);
      return unary(*in[0], [](double v) { return std::fabs(v); });
    case OpKind::kClamp:
      need(1);
      if (!(attrs.lo <= attrs.hi)) shape_fail(kind, "require lo <= hi");
      return unary(*in[0], [lo = attrs.lo, hi = attrs.hi](double v) { return std::clamp(v, lo, hi); });
    case OpKind::kMean:
    case OpKind::kSum: {
      need(1);
      const Tensor& a = *in[0];
      ReducePlan p = reduce_plan(kind, a.shape(), attrs);
      Tensor y(p.out, 0.0);
      const double* pa = a.data().data();
      double* py = y.data().data();
      for_each_broadcast(p.bc, [&](std::size_t o, std::size_t, std::size_t j) { py[j] += pa[o]; });
      if (kind == OpKind::kMean) {
        const double inv = 1.0 / static_cast<double>(p.count);
        for (auto& v : y.data()) v *= inv;
      }
      return y;
    }
    case OpKind::kTranspose: {
      need(1);
      const Tensor& a = *in[0];
      if (a.rank() != 2) shape_fail(kind, "rank-2 input required, got " + shape_str(a.shape()));
      Tensor y({a.dim(1), a.dim(0)});
      transpose_into(a.data().data(), a.dim(0), a.dim(1), y.data().data());
      return y;
    }
    case OpKind::kReshape:
      need(1);
      if (shape_size(attrs.shape) != in[0]->size()) {
        shape_fail(kind, "cannot reshape " + shape_str(in[0]->shape()) + " to " + shape_str(attrs.shape));
      }
      return in[0]->reshaped(attrs.shape);
    case OpKind::kSlice: {
      need(1);
      const Tensor& a = *in[0];
      std::size_t axis = norm_axis(kind, attrs.axis, a.rank());
      if (attrs.length == 0 || attrs.start + attrs.length > a.dim(axis)) {
        shape_fail(kind, "range [" + std::to_string(attrs.start) + ", " +
                             std::to_string(attrs.start + attrs.length) + ") invalid for " + shape_str(a.shape()));
      }
      Shape out = a.shape();
      out[axis] = attrs.length;
      Tensor y(out);
      AxisSplit sp = split_at(a.shape(), axis);
      const std::size_t block = attrs.length * sp.inner;
      const double* pa = a.data().data();
      double* py = y.data().data();
      for (std::size_t o = 0; o < sp.outer; ++o) {
        std::copy_n(pa + o * sp.n * sp.inner + attrs.start * sp.inner, block, py + o * block);
      }
      return y;
    }
    case OpKind::kConv2d: {
      need(2);
      const Tensor& x = *in[0];
      const Tensor& k = *in[1];
      if (x.rank() != 4 || k.rank() != 4) shape_fail(kind, "rank-4 operands required, got " + shapes_of(in));
      if (k.dim(1) != x.dim(1)) shape_fail(kind, "channel mismatch " + shapes_of(in));
      if (k.dim(2) % 2 == 0 || k.dim(3) % 2 == 0) shape_fail(kind, "kernel spatial dims must be odd, got " + shape_str(k.shape()));
      return conv2d_forward(x, k);
    }
    case OpKind::kSoftmax: {
      need(1);
      const Tensor& a = *in[0];
      std::size_t axis = norm_axis(kind, attrs.axis, a.rank());
      AxisSplit sp = split_at(a.shape(), axis);
      Tensor y(a.shape());
      const double* pa = a.data().data();
      double* py = y.data().data();
      for (std::size_t o = 0; o < sp.outer; ++o)
        for (std::size_t i = 0; i < sp.inner; ++i) {
          const std::size_t base = o * sp.n * sp.inner + i;
          double mx = pa[base];
          for (std::size_t r = 1; r < sp.n; ++r) mx = std::max(mx, pa[base + r * sp.inner]);
          double z = 0.0;
          for (std::size_t r = 0; r < sp.n; ++r) {
            double e = std::exp(pa[base + r * sp.inner] - mx);
            py[base + r * sp.inner] = e;
            z += e;
          }
          for (std::size_t r = 0; r < sp.n; ++r) py[base + r * sp.inner] /= z;
        }
      return y;
    }
  }
  shape_fail(kind, "unsupported op");
}

namespace {

void backward_kernel(OpKind kind, const OpAttrs& attrs, std::span<const Tensor* const> in,
                     const Tensor& y, const Tensor& g, std::span<Tensor* const> gin) {
  const double* pg = g.data().data();
  const double* py = y.data().data();
  auto unary_grad = [&](auto f) {
    const double* pa = in[0]->data().data();
    double* ga = gin[0]->data().data();
    const std::size_t n = g.size();
    for (std::size_t i = 0; i < n; ++i) ga[i] += f(pg[i], pa[i], py[i]);
  };
  switch (kind) {
    case OpKind::kLeaf:
      return;
    case OpKind::kMatmul: {
      const Tensor& a = *in[0];
      const Tensor& b = *in[1];
      const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
      if (gin[0]) gemm_nt(m, n, k, pg, b.data().data(), gin[0]->data().data());
      if (gin[1]) gemm_tn(m, k, n, a.data().data(), pg, gin[1]->data().data());
      return;
    }
    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul:
    case OpKind::kDiv: {
      Broadcast bc = make_broadcast(in[0]->shape(), in[1]->shape());
      const double* a = in[0]->data().data();
      const double* b = in[1]->data().data();
      double* ga = gin[0] ? gin[0]->data().data() : nullptr;
      double* gb = gin[1] ? gin[1]->data().data() : nullptr;
      switch (kind) {
        case OpKind::kAdd:
          for_each_broadcast(bc, [&](std::size_t o, std::size_t i, std::size_t j) {
            if (ga) ga[i] += pg[o];
            if (gb) gb[j] += pg[o];
          });
          break;
        case OpKind::kSub:
          for_each_broadcast(bc, [&](std::size_t o, std::size_t i, std::size_t j) {
            if (ga) ga[i] += pg[o];
            if (gb) gb[j] -= pg[o];
          });
          break;
        case OpKind::kMul:
          for_each_broadcast(bc, [&](std::size_t o, std::size_t i, std::size_t j) {
            if (ga) ga[i] += pg[o] * b[j];
            if (gb) gb[j] += pg[o] * a[i];
          });
          break;
        default:
          for_each_broadcast(bc, [&](std::size_t o, std::size_t i, std::size_t j) {
            if (ga) ga[i] += pg[o] / b[j];
            if (gb) gb[j] -= pg[o] * a[i] / (b[j] * b[j]);
          });
      }
      return;
    }
    case OpKind::kScale:
      unary_grad([s = attrs.alpha](double gv, double, double) { return s * gv; });
      return;
    case OpKind::kConcat: {
      std::size_t axis = norm_axis(kind, attrs.axis, y.rank());
      AxisSplit sp = split_at(y.shape(), axis);
      std::size_t offset = 0;
      for (std::size_t t = 0; t < in.size(); ++t) {
        const std::size_t block = in[t]->dim(axis) * sp.inner;
        if (gin[t]) {
          double* gt = gin[t]->data().data();
          for (std::size_t o = 0; o < sp.outer; ++o) {
            const double* src = pg + o * sp.n * sp.inner + offset;
            double* dst = gt + o * block;
            for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
          }
        }
        offset += block;
      }
      return;
    }
    case OpKind::kSigmoid:
      unary_grad([](double gv, double, double yv) { return gv * yv * (1.0 - yv); });
      return;
    case OpKind::kTanh:
      unary_grad([](double gv, double, double yv) { return gv * (1.0 - yv * yv); });
      return;
    case OpKind::kLrelu:
      unary_grad([a = attrs.alpha](double gv, double xv, double) { return xv > 0 ? gv : a * gv; });
      return;
    case OpKind::kLog:
      unary_grad([](double gv, double xv, double) { return gv / xv; });
      return;
    case OpKind::kExp:
      unary_grad([](double gv, double, double yv) { return gv * yv; });
      return;
    case OpKind::kSquare:
      unary_grad([](double gv, double xv, double) { return 2.0 * xv * gv; });
      return;
    case OpKind::kSqrt:
      unary_grad([](double gv, double, double yv) { return gv / (2.0 * yv); });
      return;
    case OpKind::kAbs:
      unary_grad([](double gv, double xv, double) { return xv > 0 ? gv : (xv < 0 ? -gv : 0.0); });
      return;
    case OpKind::kClamp:
      unary_grad([lo = attrs.lo, hi = attrs.hi](double gv, double xv, double) {
        return (xv >= lo && xv <= hi) ? gv : 0.0;
      });
      return;
    case OpKind::kMean:
    case OpKind::kSum: {
      ReducePlan p = reduce_plan(kind, in[0]->shape(), attrs);
      const double s = kind == OpKind::kMean ? 1.0 / static_cast<double>(p.count) : 1.0;
      double* ga = gin[0]->data().data();
      for_each_broadcast(p.bc, [&](std::size_t o, std::size_t, std::size_t j) { ga[o] += s * pg[j]; });
      return;
    }
    case OpKind::kTranspose: {
      const std::size_t r = in[0]->dim(0), c = in[0]->dim(1);
      double* ga = gin[0]->data().data();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += pg[j * r + i];
      return;
    }
    case OpKind::kReshape: {
      double* ga = gin[0]->data().data();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += pg[i];
      return;
    }
    case OpKind::kSlice: {
      const Tensor& a = *in[0];
      std::size_t axis = norm_axis(kind, attrs.axis, a.rank());
      AxisSplit sp = split_at(a.shape(), axis);
      const std::size_t block = attrs.length * sp.inner;
      double* ga = gin[0]->data().data();
      for (std::size_t o = 0; o < sp.outer; ++o) {
        double* dst = ga + o * sp.n * sp.inner + attrs.start * sp.inner;
        const double* src = pg + o * block;
        for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
      }
      return;
    }
    case OpKind::kConv2d:
      conv2d_backward(*in[0], *in[1], g, gin[0], gin[1]);
      return;
    case OpKind::kSoftmax: {
      std::size_t axis = norm_axis(kind, attrs.axis, y.rank());
      AxisSplit sp = split_at(y.shape(), axis);
      double* ga = gin[0]->data().data();
      for (std::size_t o = 0; o < sp.outer; ++o)
        for (std::size_t i = 0; i < sp.inner; ++i) {
          const std::size_t base = o * sp.n * sp.inner + i;
          double dot = 0.0;
          for (std::size_t r = 0; r < sp.n; ++r) dot += pg[base + r * sp.inner] * py[base + r * sp.inner];
          for (std::size_t r = 0; r < sp.n; ++r) {
            const std::size_t idx = base + r * sp.inner;
            ga[idx] += py[idx] * (pg[idx] - dot);
          }
        }
      return;
    }
  }
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r);
  for (std::size_t i = 0; i < r; ++i) {
    std::size_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
    std::size_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " and " + shape_str(b));
    }
    out[i] = std::max(da, db);
  }
  return out;
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::input(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Param& p, bool trainable) {
  Node n;
  n.external = &p.value;
  n.param = trainable ? &p : nullptr;
  n.needs_grad = trainable;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::apply(OpKind kind, std::span<const Var> inputs, OpAttrs attrs) {
  if (kind == OpKind::kLeaf) throw ShapeError("apply: leaf is not an op");
  std::vector<const Tensor*> in;
  in.reserve(inputs.size());
  Node n;
  n.kind = kind;
  for (const Var& v : inputs) {
    if (v.tape() != this) throw ShapeError(std::string(op_name(kind)) + ": input from a different tape");
    in.push_back(&node_value(nodes_[v.id()]));
    n.inputs.push_back(v.id());
    n.needs_grad = n.needs_grad || nodes_[v.id()].needs_grad;
  }
  n.value = forward_kernel(kind, attrs, in);
  n.attrs = std::move(attrs);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(Var v) const { return node_value(nodes_.at(v.id())); }

const Tensor* Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id());
  return n.has_grad ? &n.grad : nullptr;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw ShapeError("backward: loss from a different tape");
  const std::size_t root = loss.id();
  if (value(loss).size() != 1) {
    throw ShapeError("backward: loss node must be scalar, got shape " + shape_str(value(loss).shape()));
  }
  for (auto& n : nodes_) n.has_grad = false;
  Node& top = nodes_[root];
  top.grad = Tensor(node_value(top).shape(), 1.0);
  top.has_grad = true;

  std::vector<const Tensor*> in;
  std::vector<Tensor*> gin;
  for (std::size_t id = root + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.needs_grad) continue;
    if (n.kind == OpKind::kLeaf) {
      if (n.param) {
        double* pg = n.param->grad.data().data();
        const double* src = n.grad.data().data();
        for (std::size_t i = 0; i < n.grad.size(); ++i) pg[i] += src[i];
      }
      continue;
    }
    in.clear();
    gin.clear();
    for (auto iid : n.inputs) {
      Node& src = nodes_[iid];
      in.push_back(&node_value(src));
      if (src.needs_grad) {
        if (!src.has_grad) {
          src.grad = Tensor(node_value(src).shape(), 0.0);
          src.has_grad = true;
        }
        gin.push_back(&src.grad);
      } else {
        gin.push_back(nullptr);
      }
    }
    backward_kernel(n.kind, n.attrs, in, n.value, n.grad, gin);
    for (Tensor* gt : gin) {
      if (gt && !gt->all_finite()) {
        throw NumericError(std::string("non-finite gradient produced by ") + op_name(n.kind) +
                           " (node " + std::to_string(id) + ")");
      }
    }
  }
}

bool Tape::replay() {
  bool same = true;
  std::vector<const Tensor*> in;
  for (auto& n : nodes_) {
    if (n.kind == OpKind::kLeaf) continue;
    in.clear();
    for (auto iid : n.inputs) in.push_back(&node_value(nodes_[iid]));
    Tensor v = forward_kernel(n.kind, n.attrs, in);
    same = same && v.identical(n.value);
    n.value = std::move(v);
  }
  return same;
}

Var tensor_op(OpKind kind, std::span<const Var> inputs, const OpAttrs& attrs) {
  if (inputs.empty() || !inputs[0].tape()) throw ShapeError(std::string(op_name(kind)) + ": no inputs");
  return inputs[0].tape()->apply(kind, inputs, attrs);
}

namespace {
Var op1(OpKind k, Var a, OpAttrs attrs = {}) {
  Var v[1] = {a};
  return tensor_op(k, v, attrs);
}
Var op2(OpKind k, Var a, Var b, OpAttrs attrs = {}) {
  Var v[2] = {a, b};
  return tensor_op(k, v, attrs);
}
}  // namespace

Var matmul(Var a, Var b) { return op2(OpKind::kMatmul, a, b); }
Var add(Var a, Var b) { return op2(OpKind::kAdd, a, b); }
Var sub(Var a, Var b) { return op2(OpKind::kSub, a, b); }
Var mul(Var a, Var b) { return op2(OpKind::kMul, a, b); }
Var div(Var a, Var b) { return op2(OpKind::kDiv, a, b); }
Var scale(Var a, double factor) {
  OpAttrs at;
  at.alpha = factor;
  return op1(OpKind::kScale, a, at);
}
Var concat(std::span<const Var> parts, int axis) {
  OpAttrs at;
  at.axis = axis;
  return tensor_op(OpKind::kConcat, parts, at);
}
Var concat(std::initializer_list<Var> parts, int axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}
Var sigmoid(Var a) { return op1(OpKind::kSigmoid, a); }
Var tanh(Var a) { return op1(OpKind::kTanh, a); }
Var lrelu(Var a, double alpha) {
  OpAttrs at;
  at.alpha = alpha;
  return op1(OpKind::kLrelu, a, at);
}
Var log(Var a) { return op1(OpKind::kLog, a); }
Var exp(Var a) { return op1(OpKind::kExp, a); }
Var square(Var a) { return op1(OpKind::kSquare, a); }
Var sqrt(Var a) { return op1(OpKind::kSqrt, a); }
Var abs(Var a) { return op1(OpKind::kAbs, a); }
Var clamp(Var a, double lo, double hi) {
  OpAttrs at;
  at.lo = lo;
  at.hi = hi;
  return op1(OpKind::kClamp, a, at);
}
Var mean(Var a) { return op1(OpKind::kMean, a); }
Var mean(Var a, std::vector<std::size_t> axes, bool keepdims) {
  OpAttrs at;
  at.axes = std::move(axes);
  at.keepdims = keepdims;
  return op1(OpKind::kMean, a, at);
}
Var sum(Var a) { return op1(OpKind::kSum, a); }
Var sum(Var a, std::vector<std::size_t> axes, bool keepdims) {
  OpAttrs at;
  at.axes = std::move(axes);
  at.keepdims = keepdims;
  return op1(OpKind::kSum, a, at);
}
Var transpose(Var a) { return op1(OpKind::kTranspose, a); }
Var reshape(Var a, Shape shape) {
  OpAttrs at;
  at.shape = std::move(shape);
  return op1(OpKind::kReshape, a, at);
}
Var slice(Var a, int axis, std::size_t start, std::size_t length) {
  OpAttrs at;
  at.axis = axis;
  at.start = start;
  at.length = length;
  return op1(OpKind::kSlice, a, at);
}
Var conv2d(Var x, Var kernel) { return op2(OpKind::kConv2d, x, kernel); }
Var softmax(Var a, int axis) {
  OpAttrs at;
  at.axis = axis;
  return op1(OpKind::kSoftmax, a, at);
}

}  // namespace gmtl

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

// Reverse-mode automatic differentiation over a linear tape.
//
// Every op appends a node holding its output tensor, the ids of its inputs
// (always earlier nodes) and its attributes. backward() walks the tape in
// reverse and accumulates gradients into the Params bound as leaves.
// Shape rules per op kind:
//   matmul      [m,k] x [k,n] -> [m,n]
//   add/sub/mul/div  numpy-style broadcasting of the two operands
//   scale       x * attrs.alpha
//   concat      equal shapes except along attrs.axis
//   slice       attrs.length entries from attrs.start along attrs.axis
//   mean/sum    over attrs.axes (all axes when empty), attrs.keepdims
//   transpose   rank-2 only
//   reshape     to attrs.shape, equal element count
//   conv2d      x [N,C,H,W], k [O,C,KH,KW] with odd KH, KW; zero "same"
//               padding, stride 1 -> [N,O,H,W]
//   softmax     along attrs.axis
//   clamp       to [attrs.lo, attrs.hi]; zero gradient outside
//   elementwise sigmoid, tanh, lrelu(alpha), log, exp, square, sqrt, abs

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gmtl/tensor.hpp"

namespace gmtl {

enum class OpKind {
  kLeaf,
  kMatmul,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kScale,
  kConcat,
  kSigmoid,
  kTanh,
  kLrelu,
  kLog,
  kExp,
  kSquare,
  kSqrt,
  kAbs,
  kClamp,
  kMean,
  kSum,
  kTranspose,
  kReshape,
  kSlice,
  kConv2d,
  kSoftmax,
};

const char* op_name(OpKind kind);

struct OpAttrs {
  int axis = 0;
  std::vector<std::size_t> axes;
  bool keepdims = false;
  double alpha = 0.2;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t start = 0;
  std::size_t length = 0;
  Shape shape;
};

/// Trainable tensor with an accumulated gradient of identical shape.
struct Param {
  Param() = default;
  Param(std::string name, Tensor value);

  void zero_grad() { grad.fill(0.0); }

  std::string name;
  Tensor value;
  Tensor grad;
};

class Tape;

/// Handle to a tape node.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;
  // By value: a reference would dangle once the tape grows.
  Shape shape() const { return value().shape(); }
  std::size_t dim(std::size_t axis) const { return value().dim(axis); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Tensor value);
  /// Leaf whose gradient is kept on the tape after backward() and read via grad().
  Var input(Tensor value);
  /// Leaf bound to a Param. When trainable, backward() adds into param.grad.
  /// The param must outlive the tape and keep its value while the tape is used.
  Var param(Param& p, bool trainable = true);

  Var apply(OpKind kind, std::span<const Var> inputs, OpAttrs attrs = {});

  /// Reverse sweep from a node holding exactly one element. Param grads
  /// accumulate across calls; per-node gradients are reset on each call.
  void backward(Var loss);

  const Tensor& value(Var v) const;
  /// Gradient of an input() leaf (or any node) from the last backward();
  /// nullptr if the node did not receive one.
  const Tensor* grad(Var v) const;

  /// Recompute every non-leaf node from the stored leaves. Returns true when
  /// every recomputed output is bit-identical to the recorded one.
  bool replay();

  std::size_t size() const noexcept { return nodes_.size(); }
  OpKind kind(std::size_t id) const { return nodes_.at(id).kind; }
  const std::vector<std::size_t>& inputs_of(std::size_t id) const { return nodes_.at(id).inputs; }

 private:
  struct Node {
    OpKind kind = OpKind::kLeaf;
    OpAttrs attrs;
    std::vector<std::size_t> inputs;
    Tensor value;
    const Tensor* external = nullptr;  // param-bound leaves read the param in place
    Param* param = nullptr;
    bool needs_grad = false;
    Tensor grad;
    bool has_grad = false;
  };

  const Tensor& node_value(const Node& n) const { return n.external ? *n.external : n.value; }

  std::vector<Node> nodes_;
};

// Generic entry point; the typed helpers below forward to it.
Var tensor_op(OpKind kind, std::span<const Var> inputs, const OpAttrs& attrs = {});

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double factor);
Var concat(std::span<const Var> parts, int axis);
Var concat(std::initializer_list<Var> parts, int axis);
Var sigmoid(Var a);
Var tanh(Var a);
Var lrelu(Var a, double alpha = 0.2);
Var log(Var a);
Var exp(Var a);
Var square(Var a);
Var sqrt(Var a);
Var abs(Var a);
Var clamp(Var a, double lo, double hi);
Var mean(Var a);
Var mean(Var a, std::vector<std::size_t> axes, bool keepdims = false);
Var sum(Var a);
Var sum(Var a, std::vector<std::size_t> axes, bool keepdims = false);
Var transpose(Var a);
Var reshape(Var a, Shape shape);
Var slice(Var a, int axis, std::size_t start, std::size_t length);
Var conv2d(Var x, Var kernel);
Var softmax(Var a, int axis);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

/// Broadcast result shape of two operands; throws ShapeError naming `op`.
Shape broadcast_shape(const Shape& a, const Shape& b, const char* op);

// Forward kernels on plain tensors, shared by the tape and by replay.
Tensor forward_kernel(OpKind kind, const OpAttrs& attrs, std::span<const Tensor* const> in);

}  // namespace gmtl

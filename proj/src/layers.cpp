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

#include "gmtl/layers.hpp"

#include <cmath>

#include "gmtl/errors.hpp"

namespace gmtl {

Tensor xavier_uniform(Rng& rng, const Shape& shape, std::size_t fan_in, std::size_t fan_out) {
  const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return rng_uniform(rng, shape, -s, s);
}

static void require_positive(const std::string& name, std::initializer_list<std::size_t> dims) {
  for (auto d : dims) {
    if (d == 0) throw ConfigError(name + ": layer dimensions must be positive");
  }
}

DenseLayer make_dense(const std::string& name, std::size_t in, std::size_t out, Activation act, Rng& rng) {
  require_positive(name, {in, out});
  DenseLayer l;
  l.W = Param(name + ".W", xavier_uniform(rng, {in, out}, in, out));
  l.b = Param(name + ".b", Tensor({out}, 0.0));
  l.activation = act;
  return l;
}

static Var activate(Var x, Activation act, double alpha) {
  switch (act) {
    case Activation::kNone: return x;
    case Activation::kTanh: return tanh(x);
    case Activation::kSigmoid: return sigmoid(x);
    case Activation::kLrelu: return lrelu(x, alpha);
  }
  return x;
}

Var dense_forward(Tape& tape, DenseLayer& layer, Var x, bool trainable) {
  if (x.value().rank() != 2 || x.dim(1) != layer.in_width()) {
    throw ShapeError("dense: input " + shape_str(x.shape()) + " does not match layer input width " +
                     std::to_string(layer.in_width()));
  }
  Var h = add(matmul(x, tape.param(layer.W, trainable)), tape.param(layer.b, trainable));
  return activate(h, layer.activation, layer.lrelu_alpha);
}

static LstmDirection make_direction(const std::string& name, std::size_t in, std::size_t hidden, Rng& rng) {
  LstmDirection d;
  d.Wx = Param(name + ".Wx", xavier_uniform(rng, {in, 4 * hidden}, in, 4 * hidden));
  d.Wh = Param(name + ".Wh", xavier_uniform(rng, {hidden, 4 * hidden}, hidden, 4 * hidden));
  d.b = Param(name + ".b", Tensor({4 * hidden}, 0.0));
  return d;
}

RecurrentParams make_bilstm(const std::string& name, std::size_t in, std::size_t hidden, Rng& rng) {
  require_positive(name, {in, hidden});
  RecurrentParams p;
  p.hidden = hidden;
  p.fw = make_direction(name + ".fw", in, hidden, rng);
  p.bw = make_direction(name + ".bw", in, hidden, rng);
  return p;
}

namespace {

// One direction over x [B, T, in]; returns [B, T, H].
Var lstm_direction(Tape& tape, LstmDirection& d, Var x, std::size_t hidden, bool reverse, bool trainable) {
  const std::size_t B = x.dim(0), T = x.dim(1), in = x.dim(2), H = hidden;
  Var Wx = tape.param(d.Wx, trainable);
  Var Wh = tape.param(d.Wh, trainable);
  Var b = tape.param(d.b, trainable);
  Var proj = reshape(add(matmul(reshape(x, {B * T, in}), Wx), b), {B, T * 4 * H});

  std::vector<Var> states(T);
  Var h, c;
  for (std::size_t step = 0; step < T; ++step) {
    const std::size_t t = reverse ? T - 1 - step : step;
    Var pre = slice(proj, 1, t * 4 * H, 4 * H);
    if (step > 0) pre = add(pre, matmul(h, Wh));
    Var ifo = sigmoid(slice(pre, 1, 0, 3 * H));
    Var i = slice(ifo, 1, 0, H);
    Var f = slice(ifo, 1, H, H);
    Var o = slice(ifo, 1, 2 * H, H);
    Var g = tanh(slice(pre, 1, 3 * H, H));
    c = step > 0 ? add(mul(f, c), mul(i, g)) : mul(i, g);
    h = mul(o, tanh(c));
    states[t] = h;
  }
  return reshape(concat(states, 1), {B, T, H});
}

}  // namespace

Var bilstm_forward(Tape& tape, RecurrentParams& params, Var seq, bool trainable) {
  const bool batched = seq.value().rank() == 3;
  if (!batched && seq.value().rank() != 2) {
    throw ShapeError("bilstm: expected [T, in] or [B, T, in], got " + shape_str(seq.shape()));
  }
  Var x = batched ? seq : reshape(seq, {1, seq.dim(0), seq.dim(1)});
  if (x.dim(1) == 0) throw ShapeError("bilstm: empty sequence");
  if (x.dim(2) != params.in_width()) {
    throw ShapeError("bilstm: input width " + std::to_string(x.dim(2)) + " does not match " +
                     std::to_string(params.in_width()));
  }
  Var fw = lstm_direction(tape, params.fw, x, params.hidden, false, trainable);
  Var bw = lstm_direction(tape, params.bw, x, params.hidden, true, trainable);
  Var out = concat({fw, bw}, 2);
  if (batched) return out;
  return reshape(out, {seq.dim(0), 2 * params.hidden});
}

Conv2dLayer make_conv(const std::string& name, std::size_t in_ch, std::size_t out_ch, std::size_t k, Rng& rng) {
  require_positive(name, {in_ch, out_ch, k});
  Conv2dLayer l;
  l.kernels = Param(name + ".k", xavier_uniform(rng, {out_ch, in_ch, k, k}, in_ch * k * k, out_ch * k * k));
  l.bias = Param(name + ".b", Tensor({out_ch}, 0.0));
  return l;
}

BatchNorm make_batchnorm(const std::string& name, std::size_t features) {
  require_positive(name, {features});
  BatchNorm bn;
  bn.gamma = Param(name + ".gamma", Tensor({features}, 1.0));
  bn.beta = Param(name + ".beta", Tensor({features}, 0.0));
  bn.running_mean = Tensor({features}, 0.0);
  bn.running_var = Tensor({features}, 1.0);
  return bn;
}

Var batchnorm_forward(Tape& tape, BatchNorm& bn, Var x, bool trainable, bool update_stats) {
  const auto& xs = x.shape();
  const std::size_t F = bn.gamma.value.size();
  if ((xs.size() != 2 && xs.size() != 4) || xs[1] != F) {
    throw ShapeError("batchnorm: input " + shape_str(xs) + " does not match " + std::to_string(F) + " features");
  }
  Shape stat_shape = xs.size() == 2 ? Shape{1, F} : Shape{1, F, 1, 1};
  std::vector<std::size_t> axes = xs.size() == 2 ? std::vector<std::size_t>{0} : std::vector<std::size_t>{0, 2, 3};
  Var gamma = reshape(tape.param(bn.gamma, trainable), stat_shape);
  Var beta = reshape(tape.param(bn.beta, trainable), stat_shape);

  Var xhat;
  if (bn.mode == BnMode::kTrain) {
    if (xs[0] < 2 && xs.size() == 2) throw ShapeError("batchnorm: train mode needs batch >= 2");
    Var m = mean(x, axes, true);
    Var xc = sub(x, m);
    Var v = mean(square(xc), axes, true);
    xhat = div(xc, sqrt(add(v, tape.constant(Tensor::scalar(bn.epsilon)))));
    if (update_stats) {
      const double keep = bn.momentum;
      for (std::size_t f = 0; f < F; ++f) {
        bn.running_mean[f] = keep * bn.running_mean[f] + (1.0 - keep) * m.value()[f];
        bn.running_var[f] = keep * bn.running_var[f] + (1.0 - keep) * v.value()[f];
      }
    }
  } else {
    Var rm = tape.constant(bn.running_mean.reshaped(stat_shape));
    Tensor denom = bn.running_var.reshaped(stat_shape);
    for (auto& d : denom.data()) d = std::sqrt(d + bn.epsilon);
    xhat = div(sub(x, rm), tape.constant(std::move(denom)));
  }
  return add(mul(xhat, gamma), beta);
}

Var conv_block_forward(Tape& tape, Conv2dLayer& conv, BatchNorm& bn, Var x, double lrelu_alpha,
                       bool trainable, bool update_stats) {
  if (x.value().rank() != 4 || x.dim(1) != conv.kernels.value.dim(1)) {
    throw ShapeError("conv block: channel mismatch, input " + shape_str(x.shape()) + " kernels " +
                     shape_str(conv.kernels.value.shape()));
  }
  const std::size_t O = conv.kernels.value.dim(0);
  Var y = conv2d(x, tape.param(conv.kernels, trainable));
  y = add(y, reshape(tape.param(conv.bias, trainable), {1, O, 1, 1}));
  y = lrelu(y, lrelu_alpha);
  return batchnorm_forward(tape, bn, y, trainable, update_stats);
}

}  // namespace gmtl

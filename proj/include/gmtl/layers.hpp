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

#pragma once

#include <string>
#include <vector>

#include "gmtl/autodiff.hpp"
#include "gmtl/rng.hpp"

namespace gmtl {

enum class Activation { kNone, kTanh, kSigmoid, kLrelu };

/// Uniform(-s, s) with s = sqrt(6 / (fan_in + fan_out)).
Tensor xavier_uniform(Rng& rng, const Shape& shape, std::size_t fan_in, std::size_t fan_out);

struct DenseLayer {
  Param W;  // [in, out]
  Param b;  // [out]
  Activation activation = Activation::kNone;
  double lrelu_alpha = 0.2;

  std::size_t in_width() const { return W.value.dim(0); }
  std::size_t out_width() const { return W.value.dim(1); }
  std::vector<Param*> params() { return {&W, &b}; }
};

DenseLayer make_dense(const std::string& name, std::size_t in, std::size_t out, Activation act, Rng& rng);

/// activation(x W + b) for x [batch, in].
Var dense_forward(Tape& tape, DenseLayer& layer, Var x, bool trainable = true);

/// LSTM weights for one direction. Gate blocks along the 4H axis are ordered
/// input, forget, output, candidate.
struct LstmDirection {
  Param Wx;  // [in, 4H]
  Param Wh;  // [H, 4H]
  Param b;   // [4H]
};

struct RecurrentParams {
  LstmDirection fw;
  LstmDirection bw;
  std::size_t hidden = 0;

  std::size_t in_width() const { return fw.Wx.value.dim(0); }
  std::vector<Param*> params() { return {&fw.Wx, &fw.Wh, &fw.b, &bw.Wx, &bw.Wh, &bw.b}; }
};

RecurrentParams make_bilstm(const std::string& name, std::size_t in, std::size_t hidden, Rng& rng);

/// seq [T, in] -> [T, 2H], or batched [B, T, in] -> [B, T, 2H]. Forward-direction
/// states occupy the first H columns. Zero initial state in both directions.
Var bilstm_forward(Tape& tape, RecurrentParams& params, Var seq, bool trainable = true);

struct Conv2dLayer {
  Param kernels;  // [out_ch, in_ch, 5, 5]
  Param bias;     // [out_ch]
  std::vector<Param*> params() { return {&kernels, &bias}; }
};

Conv2dLayer make_conv(const std::string& name, std::size_t in_ch, std::size_t out_ch, std::size_t k, Rng& rng);

enum class BnMode { kTrain, kInfer };

struct BatchNorm {
  Param gamma;
  Param beta;
  Tensor running_mean;
  Tensor running_var;
  double epsilon = 1e-8;
  // running <- momentum * running + (1 - momentum) * batch statistic
  double momentum = 0.9;
  BnMode mode = BnMode::kTrain;

  std::vector<Param*> params() { return {&gamma, &beta}; }
};

BatchNorm make_batchnorm(const std::string& name, std::size_t features);

/// Normalizes x [N, F] or [N, F, H, W] per feature F. In train mode uses batch
/// statistics and, when update_stats is set, folds them into the running ones.
Var batchnorm_forward(Tape& tape, BatchNorm& bn, Var x, bool trainable = true, bool update_stats = false);

/// conv (same padding) -> bias -> LReLU -> batch norm.
Var conv_block_forward(Tape& tape, Conv2dLayer& conv, BatchNorm& bn, Var x, double lrelu_alpha = 0.2,
                       bool trainable = true, bool update_stats = false);

}  // namespace gmtl

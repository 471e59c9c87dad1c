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

// The conditioned generator G(z|y) and discriminator D(x|y).

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gmtl/layers.hpp"

namespace gmtl {

/// Noise distribution p_z: uniform on [-1, 1] per frame.
struct NoiseSpec {
  std::size_t dim = 16;
  double lo = -1.0;
  double hi = 1.0;
};

struct GeneratorConfig {
  std::size_t noise_dim = 16;  // 0 for the noise-free acoustic model
  std::size_t cond_dim = 0;
  std::size_t acoustic_dim = 0;
  std::size_t dense_layers = 3;
  std::size_t dense_width = 64;
  std::size_t recurrent_layers = 2;
  std::size_t recurrent_hidden = 32;
};

/// Every layer sees [previous output ; y]; the first sees [z ; y].
/// Dense layers use tanh, the output layer is linear.
struct Generator {
  GeneratorConfig config;
  std::vector<DenseLayer> dense;
  std::vector<RecurrentParams> recurrent;
  DenseLayer output;

  std::vector<Param*> params();
};

Generator init_generator(const GeneratorConfig& config, Rng& rng);

/// z [T, noise_dim] (absent when noise_dim == 0) and y [T, cond_dim] -> [T, A].
/// Batched forms [B, T, ·] are accepted as well; recurrence runs along T.
Var generator_forward(Tape& tape, Generator& g, std::optional<Var> z, Var y, bool trainable = true);

enum class HeadKind { kBinary, kPhoneme };

struct DiscriminatorConfig {
  std::size_t window = 9;
  std::size_t acoustic_dim = 0;
  std::size_t cond_dim = 0;
  std::size_t conv1_channels = 8;
  std::size_t conv2_channels = 16;
  std::size_t kernel = 5;
  std::size_t fc_width = 32;
  double lrelu_alpha = 0.2;
  HeadKind head = HeadKind::kBinary;
  std::size_t num_classes = 1;  // phoneme classes for the PC head
};

/// Input image has two channels: the acoustic patch and a W x A plane
/// projected from the condition vector. Two conv blocks, flatten, concat y,
/// LReLU dense layer, then a sigmoid unit or a softmax over phoneme classes.
struct Discriminator {
  DiscriminatorConfig config;
  DenseLayer cond_proj;
  Conv2dLayer conv1, conv2;
  BatchNorm bn1, bn2;
  DenseLayer fc;
  DenseLayer head;

  std::vector<Param*> params();
  std::vector<std::pair<std::string, Tensor*>> buffers();
  void set_bn_mode(BnMode mode);
};

Discriminator init_discriminator(const DiscriminatorConfig& config, Rng& rng);

/// x_win [B, W, A], y_win [B, cond_dim] -> [B, 1] probabilities (binary head)
/// or [B, P] class distributions (PC head).
Var discriminator_forward(Tape& tape, Discriminator& d, Var x_win, Var y_win, bool trainable = true,
                          bool update_stats = false);

}  // namespace gmtl

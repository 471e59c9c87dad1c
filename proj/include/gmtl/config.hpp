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

// Experiment configuration as flat section.key=value text.

#pragma once

#include <cstdint>
#include <string>

#include "gmtl/io.hpp"
#include "gmtl/losses.hpp"

namespace gmtl {

enum class TrainMode { kMse, kGan, kGanPc, kAsv };

const char* mode_name(TrainMode m);
TrainMode parse_mode(const std::string& s);

struct TrainConfig {
  TrainMode mode = TrainMode::kGan;
  std::uint64_t steps = 5000;
  std::size_t batch_size = 16;
  std::size_t d_steps = 1;
  std::uint64_t seed = 1;
  std::uint64_t valid_every = 200;
  std::string data;
  std::string out;
  // Feed uniform noise to the generator in mse mode as well.
  bool mse_with_noise = false;
  // z-score acoustic targets with training-split statistics.
  bool normalize = true;
  // When false the wall_ms log column is written as 0 so logs are byte-stable.
  bool log_wall_time = true;

  std::size_t noise_dim = 16;
  std::size_t dense_layers = 3;
  std::size_t dense_width = 64;
  std::size_t recurrent_layers = 2;
  std::size_t recurrent_hidden = 32;
  std::size_t window = 9;
  std::size_t conv1_channels = 8;
  std::size_t conv2_channels = 16;
  std::size_t fc_width = 32;
  double lrelu_alpha = 0.2;
  double bn_momentum = 0.9;
  double bn_epsilon = 1e-8;

  LossConfig loss;
  AdamConfig adam;

  bool uses_noise() const;
  bool uses_discriminator() const { return mode != TrainMode::kMse; }

  void validate() const;
  KeyValues to_kv() const;
  std::string to_text() const { return format_key_values(to_kv()); }
  /// Starts from defaults; every key must be known.
  static TrainConfig from_kv(const KeyValues& kv);
  static TrainConfig from_text(std::string_view text) { return from_kv(parse_key_values(text)); }
};

}  // namespace gmtl

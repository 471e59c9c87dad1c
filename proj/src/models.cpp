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

#include "gmtl/models.hpp"

#include "gmtl/errors.hpp"

namespace gmtl {

std::vector<Param*> Generator::params() {
  std::vector<Param*> out;
  for (auto& l : dense)
    for (auto* p : l.params()) out.push_back(p);
  for (auto& r : recurrent)
    for (auto* p : r.params()) out.push_back(p);
  for (auto* p : output.params()) out.push_back(p);
  return out;
}

Generator init_generator(const GeneratorConfig& c, Rng& rng) {
  if (c.cond_dim == 0 || c.acoustic_dim == 0 || c.dense_width == 0 || c.recurrent_hidden == 0) {
    throw ConfigError("generator: dimensions must be positive");
  }
  Generator g;
  g.config = c;
  std::size_t width = c.noise_dim;
  for (std::size_t i = 0; i < c.dense_layers; ++i) {
    g.dense.push_back(make_dense("g.dense" + std::to_string(i), width + c.cond_dim, c.dense_width,
                                 Activation::kTanh, rng));
    width = c.dense_width;
  }
  for (std::size_t i = 0; i < c.recurrent_layers; ++i) {
    g.recurrent.push_back(make_bilstm("g.blstm" + std::to_string(i), width + c.cond_dim, c.recurrent_hidden, rng));
    width = 2 * c.recurrent_hidden;
  }
  g.output = make_dense("g.out", width + c.cond_dim, c.acoustic_dim, Activation::kNone, rng);
  return g;
}

Var generator_forward(Tape& tape, Generator& g, std::optional<Var> z, Var y, bool trainable) {
  const auto& c = g.config;
  const bool batched = y.value().rank() == 3;
  if (!batched && y.value().rank() != 2) {
    throw ShapeError("generator: conditions must be [T, L] or [B, T, L], got " + shape_str(y.shape()));
  }
  const std::size_t B = batched ? y.dim(0) : 1;
  const std::size_t T = batched ? y.dim(1) : y.dim(0);
  const std::size_t L = y.shape().back();
  if (L != c.cond_dim) {
    throw ShapeError("generator: condition width " + std::to_string(L) + " != " + std::to_string(c.cond_dim));
  }
  Var yf = reshape(y, {B * T, L});
  Var h;
  if (c.noise_dim > 0) {
    if (!z) throw ShapeError("generator: noise input required (noise_dim > 0)");
    const auto& zs = z->shape();
    const bool z_ok = zs.size() == y.shape().size() && zs.back() == c.noise_dim &&
                      (batched ? (zs[0] == B && zs[1] == T) : zs[0] == T);
    if (!z_ok) {
      throw ShapeError("generator: noise " + shape_str(zs) + " does not match conditions " + shape_str(y.shape()) +
                       " (frame count or width mismatch)");
    }
    h = concat({reshape(*z, {B * T, c.noise_dim}), yf}, 1);
  } else {
    if (z) throw ShapeError("generator: noise given to a noise-free generator");
    h = yf;
  }

  for (auto& layer : g.dense) {
    h = dense_forward(tape, layer, h, trainable);
    h = concat({h, yf}, 1);
  }
  for (auto& rec : g.recurrent) {
    Var seq = reshape(h, {B, T, h.dim(1)});
    Var out = bilstm_forward(tape, rec, seq, trainable);
    h = concat({reshape(out, {B * T, 2 * rec.hidden}), yf}, 1);
  }
  Var x = dense_forward(tape, g.output, h, trainable);
  return batched ? reshape(x, {B, T, c.acoustic_dim}) : x;
}

std::vector<Param*> Discriminator::params() {
  std::vector<Param*> out;
  for (auto* p : cond_proj.params()) out.push_back(p);
  for (auto* p : conv1.params()) out.push_back(p);
  for (auto* p : bn1.params()) out.push_back(p);
  for (auto* p : conv2.params()) out.push_back(p);
  for (auto* p : bn2.params()) out.push_back(p);
  for (auto* p : fc.params()) out.push_back(p);
  for (auto* p : head.params()) out.push_back(p);
  return out;
}

std::vector<std::pair<std::string, Tensor*>> Discriminator::buffers() {
  return {{"d.bn1.running_mean", &bn1.running_mean},
          {"d.bn1.running_var", &bn1.running_var},
          {"d.bn2.running_mean", &bn2.running_mean},
          {"d.bn2.running_var", &bn2.running_var}};
}

void Discriminator::set_bn_mode(BnMode mode) {
  bn1.mode = mode;
  bn2.mode = mode;
}

Discriminator init_discriminator(const DiscriminatorConfig& c, Rng& rng) {
  if (c.window == 0 || c.acoustic_dim == 0 || c.cond_dim == 0 || c.conv1_channels == 0 || c.conv2_channels == 0 ||
      c.fc_width == 0 || c.kernel == 0) {
    throw ConfigError("discriminator: dimensions must be positive");
  }
  if (c.kernel % 2 == 0) throw ConfigError("discriminator: kernel size must be odd");
  if (c.head == HeadKind::kPhoneme && c.num_classes < 2) {
    throw ConfigError("discriminator: phoneme head needs at least 2 classes");
  }
  Discriminator d;
  d.config = c;
  const std::size_t plane = c.window * c.acoustic_dim;
  d.cond_proj = make_dense("d.cond", c.cond_dim, plane, Activation::kNone, rng);
  d.conv1 = make_conv("d.conv1", 2, c.conv1_channels, c.kernel, rng);
  d.bn1 = make_batchnorm("d.bn1", c.conv1_channels);
  d.conv2 = make_conv("d.conv2", c.conv1_channels, c.conv2_channels, c.kernel, rng);
  d.bn2 = make_batchnorm("d.bn2", c.conv2_channels);
  d.fc = make_dense("d.fc", c.conv2_channels * plane + c.cond_dim, c.fc_width, Activation::kLrelu, rng);
  d.fc.lrelu_alpha = c.lrelu_alpha;
  const std::size_t head_out = c.head == HeadKind::kBinary ? 1 : c.num_classes;
  d.head = make_dense("d.head", c.fc_width, head_out, Activation::kNone, rng);
  return d;
}

Var discriminator_forward(Tape& tape, Discriminator& d, Var x_win, Var y_win, bool trainable, bool update_stats) {
  const auto& c = d.config;
  const auto& xs = x_win.shape();
  if (xs.size() != 3 || xs[1] != c.window || xs[2] != c.acoustic_dim) {
    throw ShapeError("discriminator: window " + shape_str(xs) + " does not match [B, " + std::to_string(c.window) +
                     ", " + std::to_string(c.acoustic_dim) + "]");
  }
  const std::size_t B = xs[0];
  if (y_win.value().rank() != 2 || y_win.dim(0) != B || y_win.dim(1) != c.cond_dim) {
    throw ShapeError("discriminator: conditions " + shape_str(y_win.shape()) + " do not match [" +
                     std::to_string(B) + ", " + std::to_string(c.cond_dim) + "]");
  }
  Var acoustic = reshape(x_win, {B, 1, c.window, c.acoustic_dim});
  Var cond_plane = reshape(dense_forward(tape, d.cond_proj, y_win, trainable), {B, 1, c.window, c.acoustic_dim});
  Var img = concat({acoustic, cond_plane}, 1);
  Var h = conv_block_forward(tape, d.conv1, d.bn1, img, c.lrelu_alpha, trainable, update_stats);
  h = conv_block_forward(tape, d.conv2, d.bn2, h, c.lrelu_alpha, trainable, update_stats);
  h = reshape(h, {B, c.conv2_channels * c.window * c.acoustic_dim});
  h = dense_forward(tape, d.fc, concat({h, y_win}, 1), trainable);
  Var logits = dense_forward(tape, d.head, h, trainable);
  return c.head == HeadKind::kBinary ? sigmoid(logits) : softmax(logits, 1);
}

}  // namespace gmtl

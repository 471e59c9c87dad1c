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

#include "gmtl/config.hpp"

#include <functional>
#include <map>

#include "gmtl/errors.hpp"

namespace gmtl {

const char* mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::kMse: return "mse";
    case TrainMode::kGan: return "gan";
    case TrainMode::kGanPc: return "gan-pc";
    case TrainMode::kAsv: return "asv";
  }
  return "?";
}

TrainMode parse_mode(const std::string& s) {
  if (s == "mse") return TrainMode::kMse;
  if (s == "gan") return TrainMode::kGan;
  if (s == "gan-pc") return TrainMode::kGanPc;
  if (s == "asv") return TrainMode::kAsv;
  throw ConfigError("unknown mode '" + s + "' (expected mse, gan, gan-pc or asv)");
}

bool TrainConfig::uses_noise() const {
  switch (mode) {
    case TrainMode::kGan:
    case TrainMode::kGanPc: return true;
    case TrainMode::kMse: return mse_with_noise;
    case TrainMode::kAsv: return false;
  }
  return false;
}

void TrainConfig::validate() const {
  if (steps < 1) throw ConfigError("train.steps must be >= 1");
  if (batch_size < 2) throw ConfigError("train.batch_size must be >= 2");
  if (valid_every < 1) throw ConfigError("train.valid_every must be >= 1");
  if (uses_noise() && noise_dim < 1) throw ConfigError("model.noise_dim must be >= 1 when noise is used");
  if (dense_width < 1 || recurrent_hidden < 1 || window < 1 || conv1_channels < 1 || conv2_channels < 1 ||
      fc_width < 1) {
    throw ConfigError("model dimensions must be >= 1");
  }
  if (!(bn_epsilon > 0.0)) throw ConfigError("model.bn_epsilon must be > 0");
  if (!(bn_momentum >= 0.0 && bn_momentum <= 1.0)) throw ConfigError("model.bn_momentum must lie in [0, 1]");
  if (!(adam.lr > 0.0)) throw ConfigError("optim.lr must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("optim.beta1 and optim.beta2 must lie in [0, 1)");
  }
  if (!(adam.eps > 0.0)) throw ConfigError("optim.eps must be > 0");
  loss.validate();
}

KeyValues TrainConfig::to_kv() const {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  auto u = [](std::uint64_t v) { return std::to_string(v); };
  return {
      {"train.mode", mode_name(mode)},
      {"train.steps", u(steps)},
      {"train.batch_size", u(batch_size)},
      {"train.d_steps", u(d_steps)},
      {"train.seed", u(seed)},
      {"train.valid_every", u(valid_every)},
      {"train.data", data},
      {"train.out", out},
      {"train.mse_with_noise", b(mse_with_noise)},
      {"train.normalize", b(normalize)},
      {"train.log_wall_time", b(log_wall_time)},
      {"model.noise_dim", u(noise_dim)},
      {"model.dense_layers", u(dense_layers)},
      {"model.dense_width", u(dense_width)},
      {"model.recurrent_layers", u(recurrent_layers)},
      {"model.recurrent_hidden", u(recurrent_hidden)},
      {"model.window", u(window)},
      {"model.conv1_channels", u(conv1_channels)},
      {"model.conv2_channels", u(conv2_channels)},
      {"model.fc_width", u(fc_width)},
      {"model.lrelu_alpha", format_double(lrelu_alpha)},
      {"model.bn_momentum", format_double(bn_momentum)},
      {"model.bn_epsilon", format_double(bn_epsilon)},
      {"loss.adv_weight", format_double(loss.adv_weight)},
      {"loss.recon_norm", loss.recon_norm == ReconNorm::kL2 ? "l2" : "l1"},
      {"loss.g_adv_form", loss.g_adv_form == AdvForm::kSaturating ? "saturating" : "non-saturating"},
      {"loss.prob_clamp", format_double(loss.prob_clamp)},
      {"loss.recon_weight", format_double(loss.recon_weight)},
      {"optim.lr", format_double(adam.lr)},
      {"optim.beta1", format_double(adam.beta1)},
      {"optim.beta2", format_double(adam.beta2)},
      {"optim.eps", format_double(adam.eps)},
  };
}

TrainConfig TrainConfig::from_kv(const KeyValues& kv) {
  TrainConfig c;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto sz = [](std::size_t& f) { return Setter([&f](auto& k, auto& v) { f = parse_u64(k, v); }); };
  auto u64 = [](std::uint64_t& f) { return Setter([&f](auto& k, auto& v) { f = parse_u64(k, v); }); };
  auto dbl = [](double& f) { return Setter([&f](auto& k, auto& v) { f = parse_double(k, v); }); };
  auto bl = [](bool& f) { return Setter([&f](auto& k, auto& v) { f = parse_bool(k, v); }); };
  auto str = [](std::string& f) { return Setter([&f](auto&, auto& v) { f = v; }); };
  const std::map<std::string, Setter> setters = {
      {"train.mode", [&c](auto&, auto& v) { c.mode = parse_mode(v); }},
      {"train.steps", u64(c.steps)},
      {"train.batch_size", sz(c.batch_size)},
      {"train.d_steps", sz(c.d_steps)},
      {"train.seed", u64(c.seed)},
      {"train.valid_every", u64(c.valid_every)},
      {"train.data", str(c.data)},
      {"train.out", str(c.out)},
      {"train.mse_with_noise", bl(c.mse_with_noise)},
      {"train.normalize", bl(c.normalize)},
      {"train.log_wall_time", bl(c.log_wall_time)},
      {"model.noise_dim", sz(c.noise_dim)},
      {"model.dense_layers", sz(c.dense_layers)},
      {"model.dense_width", sz(c.dense_width)},
      {"model.recurrent_layers", sz(c.recurrent_layers)},
      {"model.recurrent_hidden", sz(c.recurrent_hidden)},
      {"model.window", sz(c.window)},
      {"model.conv1_channels", sz(c.conv1_channels)},
      {"model.conv2_channels", sz(c.conv2_channels)},
      {"model.fc_width", sz(c.fc_width)},
      {"model.lrelu_alpha", dbl(c.lrelu_alpha)},
      {"model.bn_momentum", dbl(c.bn_momentum)},
      {"model.bn_epsilon", dbl(c.bn_epsilon)},
      {"loss.adv_weight", dbl(c.loss.adv_weight)},
      {"loss.recon_norm",
       [&c](auto& k, auto& v) {
         if (v == "l2") c.loss.recon_norm = ReconNorm::kL2;
         else if (v == "l1") c.loss.recon_norm = ReconNorm::kL1;
         else throw ConfigError(k + ": expected l2 or l1, got '" + v + "'");
       }},
      {"loss.g_adv_form",
       [&c](auto& k, auto& v) {
         if (v == "saturating") c.loss.g_adv_form = AdvForm::kSaturating;
         else if (v == "non-saturating") c.loss.g_adv_form = AdvForm::kNonSaturating;
         else throw ConfigError(k + ": expected saturating or non-saturating, got '" + v + "'");
       }},
      {"loss.prob_clamp", dbl(c.loss.prob_clamp)},
      {"loss.recon_weight", dbl(c.loss.recon_weight)},
      {"optim.lr", dbl(c.adam.lr)},
      {"optim.beta1", dbl(c.adam.beta1)},
      {"optim.beta2", dbl(c.adam.beta2)},
      {"optim.eps", dbl(c.adam.eps)},
  };
  for (const auto& [k, v] : kv) {
    auto it = setters.find(k);
    if (it == setters.end()) throw ConfigError("unknown config key '" + k + "'");
    it->second(k, v);
  }
  c.validate();
  return c;
}

}  // namespace gmtl

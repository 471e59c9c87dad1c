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

// Training objectives for the reconstruction + conditional-adversarial
// multi-task setup, and the Adam update.
//
// Sign conventions: every function returns a quantity to MINIMIZE.
//   D (binary):  -mean log D(x|y) - mean log(1 - D(G(z|y)|y))
//   G (binary):  recon + w * mean log(1 - D(G(z|y)|y))       (saturating)
//                recon - w * mean log D(G(z|y)|y)            (non-saturating)
//   D (phoneme): mean CE(real) - mean CE(fake)
//   G (phoneme): recon - w * mean CE(fake)
// All probabilities pass through clamp(p, eps, 1 - eps) before the log.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gmtl/autodiff.hpp"

namespace gmtl {

enum class ReconNorm { kL2, kL1 };
enum class AdvForm { kSaturating, kNonSaturating };

struct LossConfig {
  double adv_weight = 1.0;
  ReconNorm recon_norm = ReconNorm::kL2;
  AdvForm g_adv_form = AdvForm::kSaturating;
  double prob_clamp = 1e-7;
  // Weight on the reconstruction term; 0 gives the pure-adversarial ablation.
  double recon_weight = 1.0;

  void validate() const;
};

/// Mean squared (L2) or absolute (L1) difference over all elements.
Var loss_mse(Var x_model, Var x_real, ReconNorm norm = ReconNorm::kL2);

Var loss_discriminator(Var d_real, Var d_fake, double prob_clamp = 1e-7);

/// The adversarial term alone, unweighted, as added to the generator loss.
Var generator_adversarial_term(Var d_fake, const LossConfig& cfg);

Var loss_generator_mtl(Var x_model, Var x_real, Var d_fake, const LossConfig& cfg);

/// mean over rows of -sum(labels * log(clamp(p))).
Var mean_cross_entropy(Var p, Var labels, double prob_clamp = 1e-7);

Var loss_pc_discriminator(Var p_real, Var p_fake, Var labels, double prob_clamp = 1e-7);

Var loss_pc_generator(Var x_model, Var x_real, Var p_fake, Var labels, const LossConfig& cfg);

/// One-hot [rows, classes] tensor from class indices.
Tensor one_hot(std::span<const std::uint32_t> labels, std::size_t classes);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig hp;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t t = 0;

  static AdamState for_params(std::span<Param* const> params, const AdamConfig& hp);
};

/// Bias-corrected Adam update from each param's accumulated grad. Throws
/// NumericError naming the param if a gradient is not finite; no param is
/// touched in that case.
void adam_step(std::span<Param* const> params, AdamState& state);

}  // namespace gmtl

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

#include "gmtl/losses.hpp"

#include <cmath>
#include <optional>
#include <string>

#include "gmtl/errors.hpp"

namespace gmtl {

void LossConfig::validate() const {
  if (!(prob_clamp > 0.0 && prob_clamp < 0.5)) throw ConfigError("loss.prob_clamp must lie in (0, 0.5)");
  if (!(adv_weight >= 0.0)) throw ConfigError("loss.adv_weight must be >= 0");
  if (!(recon_weight >= 0.0)) throw ConfigError("loss.recon_weight must be >= 0");
}

namespace {

void check_probabilities(Var p, const char* what) {
  for (double v : p.value().data()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw DomainError(std::string(what) + ": probability " + std::to_string(v) + " outside [0, 1]");
    }
  }
}

void check_same_shape(Var a, Var b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
}

Var clamp_prob(Var p, double eps) { return clamp(p, eps, 1.0 - eps); }

Var one_minus(Var p) {
  Var one = p.tape()->constant(Tensor::scalar(1.0));
  return sub(one, p);
}

void check_distribution_rows(Var p, const char* what) {
  const Tensor& t = p.value();
  if (t.rank() != 2) throw ShapeError(std::string(what) + ": expected [batch, P], got " + shape_str(t.shape()));
  const std::size_t rows = t.dim(0), cols = t.dim(1);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = t.at(r, c);
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError(std::string(what) + ": probability outside [0, 1]");
      s += v;
    }
    if (std::fabs(s - 1.0) > 1e-9) {
      throw DomainError(std::string(what) + ": row " + std::to_string(r) + " sums to " + std::to_string(s));
    }
  }
}

void check_one_hot(Var labels, Var like) {
  const Tensor& t = labels.value();
  if (t.shape() != like.shape()) {
    throw ShapeError("labels: shape " + shape_str(t.shape()) + " does not match " + shape_str(like.shape()));
  }
  for (std::size_t r = 0; r < t.dim(0); ++r) {
    int ones = 0;
    for (std::size_t c = 0; c < t.dim(1); ++c) {
      const double v = t.at(r, c);
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        throw DomainError("labels: row " + std::to_string(r) + " is not one-hot");
      }
    }
    if (ones != 1) throw DomainError("labels: row " + std::to_string(r) + " is not one-hot");
  }
}

}  // namespace

Var loss_mse(Var x_model, Var x_real, ReconNorm norm) {
  check_same_shape(x_model, x_real, "loss_mse");
  Var diff = sub(x_model, x_real);
  return norm == ReconNorm::kL2 ? mean(square(diff)) : mean(abs(diff));
}

Var loss_discriminator(Var d_real, Var d_fake, double prob_clamp) {
  check_probabilities(d_real, "loss_discriminator");
  check_probabilities(d_fake, "loss_discriminator");
  Var real_term = mean(log(clamp_prob(d_real, prob_clamp)));
  Var fake_term = mean(log(one_minus(clamp_prob(d_fake, prob_clamp))));
  return scale(add(real_term, fake_term), -1.0);
}

Var generator_adversarial_term(Var d_fake, const LossConfig& cfg) {
  check_probabilities(d_fake, "generator adversarial term");
  Var p = clamp_prob(d_fake, cfg.prob_clamp);
  if (cfg.g_adv_form == AdvForm::kSaturating) return mean(log(one_minus(p)));
  return scale(mean(log(p)), -1.0);
}

namespace {
Var combine(Var recon, std::optional<Var> adv, const LossConfig& cfg) {
  Var total = cfg.recon_weight == 1.0 ? recon : scale(recon, cfg.recon_weight);
  if (adv) total = add(total, cfg.adv_weight == 1.0 ? *adv : scale(*adv, cfg.adv_weight));
  return total;
}
}  // namespace

Var loss_generator_mtl(Var x_model, Var x_real, Var d_fake, const LossConfig& cfg) {
  Var recon = loss_mse(x_model, x_real, cfg.recon_norm);
  if (cfg.adv_weight == 0.0) return combine(recon, std::nullopt, cfg);
  return combine(recon, generator_adversarial_term(d_fake, cfg), cfg);
}

Var mean_cross_entropy(Var p, Var labels, double prob_clamp) {
  Var lp = log(clamp_prob(p, prob_clamp));
  Var per_row = sum(mul(labels, lp), {1});
  return scale(mean(per_row), -1.0);
}

Var loss_pc_discriminator(Var p_real, Var p_fake, Var labels, double prob_clamp) {
  check_distribution_rows(p_real, "loss_pc_discriminator");
  check_distribution_rows(p_fake, "loss_pc_discriminator");
  check_one_hot(labels, p_real);
  check_same_shape(p_real, p_fake, "loss_pc_discriminator");
  return sub(mean_cross_entropy(p_real, labels, prob_clamp), mean_cross_entropy(p_fake, labels, prob_clamp));
}

Var loss_pc_generator(Var x_model, Var x_real, Var p_fake, Var labels, const LossConfig& cfg) {
  Var recon = loss_mse(x_model, x_real, cfg.recon_norm);
  if (cfg.adv_weight == 0.0) return combine(recon, std::nullopt, cfg);
  check_distribution_rows(p_fake, "loss_pc_generator");
  check_one_hot(labels, p_fake);
  return combine(recon, scale(mean_cross_entropy(p_fake, labels, cfg.prob_clamp), -1.0), cfg);
}

Tensor one_hot(std::span<const std::uint32_t> labels, std::size_t classes) {
  Tensor t({labels.size(), classes}, 0.0);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] >= classes) throw DomainError("one_hot: label " + std::to_string(labels[r]) + " out of range");
    t.at(r, labels[r]) = 1.0;
  }
  return t;
}

AdamState AdamState::for_params(std::span<Param* const> params, const AdamConfig& hp) {
  AdamState s;
  s.hp = hp;
  for (Param* p : params) {
    s.m.emplace_back(p->value.shape(), 0.0);
    s.v.emplace_back(p->value.shape(), 0.0);
  }
  return s;
}

void adam_step(std::span<Param* const> params, AdamState& state) {
  if (params.size() != state.m.size()) throw ShapeError("adam_step: state does not match parameter list");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k]->grad.shape() != state.m[k].shape()) {
      throw ShapeError("adam_step: shape mismatch for " + params[k]->name);
    }
    if (!params[k]->grad.all_finite()) throw NumericError("adam_step: non-finite gradient in " + params[k]->name);
  }
  const auto& hp = state.hp;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(hp.beta1, t);
  const double c2 = 1.0 - std::pow(hp.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    double* theta = params[k]->value.data().data();
    const double* g = params[k]->grad.data().data();
    double* m = state.m[k].data().data();
    double* v = state.v[k].data().data();
    const std::size_t n = params[k]->value.size();
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g[i];
      v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      theta[i] -= hp.lr * mhat / (std::sqrt(vhat) + hp.eps);
    }
  }
}

}  // namespace gmtl

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

// Randomized gradient-check problems for every layer and every loss, shared by
// the unit tests and the acceptance binary.

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gmtl/gradcheck.hpp"
#include "gmtl/layers.hpp"
#include "gmtl/losses.hpp"
#include "gmtl/models.hpp"
#include "gmtl/rng.hpp"

namespace gmtl::test {

inline constexpr double kGradH = 1e-5;
inline constexpr double kGradTol = 1e-6;
// Denominator floor for the relative error. Central differences of an O(1)
// loss carry about eps*|f|/h = 2e-11 of rounding error, which swamps a 1e-6
// relative bound once the true gradient is below ~1e-5.
inline constexpr double kGradFloor = 1e-3;

struct GradProblem {
  std::string name;
  std::shared_ptr<void> owner;
  LossBuilder f;
  std::vector<Param*> params;
};

inline const std::vector<std::string>& layer_kinds() {
  static const std::vector<std::string> k{"dense",     "bilstm",    "conv_block",          "batchnorm",
                                          "generator", "generator_noise_free", "discriminator_binary",
                                          "discriminator_pc"};
  return k;
}

inline const std::vector<std::string>& loss_kinds() {
  static const std::vector<std::string> k{"mse_l2",  "mse_l1",        "discriminator",
                                          "generator_saturating", "generator_non_saturating",
                                          "pc_discriminator",     "pc_generator"};
  return k;
}

namespace detail {

inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

inline Var weighted_sum(Tape& t, Var y, const Tensor& r) { return sum(mul(y, t.constant(r))); }

inline void randomize(std::span<Param* const> ps, Rng& rng, double s) {
  for (Param* p : ps) p->value = rng_uniform(rng, p->value.shape(), -s, s);
}

// Tiny G and D sharing a window geometry; batch-norm epsilon is raised so the
// normalization stays well conditioned under central differences.
struct Pipeline {
  Generator g;
  Discriminator d;
  std::size_t B = 2, W = 3, L = 3, A = 2, P = 3;
  Tensor z, y, y_center, real, labels;

  std::vector<Param*> all_params() {
    std::vector<Param*> out = g.params();
    for (Param* p : d.params()) out.push_back(p);
    return out;
  }
};

inline std::shared_ptr<Pipeline> make_pipeline(Rng& rng, HeadKind head, std::size_t noise_dim) {
  auto p = std::make_shared<Pipeline>();
  p->B = pick(rng, 2, 3);
  p->W = pick(rng, 2, 3);
  p->A = pick(rng, 1, 3);
  p->P = pick(rng, 2, 3);
  p->L = p->P + 1;
  GeneratorConfig gc;
  gc.noise_dim = noise_dim;
  gc.cond_dim = p->L;
  gc.acoustic_dim = p->A;
  gc.dense_layers = 1;
  gc.dense_width = pick(rng, 2, 3);
  gc.recurrent_layers = 1;
  gc.recurrent_hidden = 2;
  p->g = init_generator(gc, rng);
  DiscriminatorConfig dc;
  dc.window = p->W;
  dc.acoustic_dim = p->A;
  dc.cond_dim = p->L;
  dc.conv1_channels = 1;
  dc.conv2_channels = 2;
  dc.kernel = 3;
  dc.fc_width = 3;
  dc.head = head;
  dc.num_classes = head == HeadKind::kPhoneme ? p->P : 1;
  p->d = init_discriminator(dc, rng);
  p->d.bn1.epsilon = p->d.bn2.epsilon = 1e-5;
  for (Param* q : p->all_params()) {
    if (q->name.ends_with(".b") || q->name.ends_with(".beta")) q->value = rng_uniform(rng, q->value.shape(), -0.1, 0.1);
  }
  if (noise_dim) p->z = rng_uniform(rng, {p->B, p->W, noise_dim}, -1.0, 1.0);
  p->y = rng_uniform(rng, {p->B, p->W, p->L}, 0.0, 1.0);
  p->y_center = Tensor({p->B, p->L});
  for (std::size_t b = 0; b < p->B; ++b)
    for (std::size_t l = 0; l < p->L; ++l) p->y_center.at(b, l) = p->y[(b * p->W + p->W / 2) * p->L + l];
  p->real = rng_uniform(rng, {p->B, p->W, p->A}, -1.5, 1.5);
  std::vector<std::uint32_t> lab;
  for (std::size_t b = 0; b < p->B; ++b) lab.push_back(static_cast<std::uint32_t>(rng.below(p->P)));
  p->labels = one_hot(lab, p->P);
  return p;
}

inline Var fake_of(Tape& t, Pipeline& p) {
  std::optional<Var> z;
  if (p.g.config.noise_dim) z = t.constant(p.z);
  return generator_forward(t, p.g, z, t.constant(p.y));
}

// D on real and fake windows as one batch, split back into halves.
inline std::pair<Var, Var> judge(Tape& t, Pipeline& p, Var fake) {
  Var x = concat({t.constant(p.real), fake}, 0);
  Var yc = t.constant(p.y_center);
  Var out = discriminator_forward(t, p.d, x, concat({yc, yc}, 0));
  return {slice(out, 0, 0, p.B), slice(out, 0, p.B, p.B)};
}

}  // namespace detail

inline GradProblem layer_problem(const std::string& kind, std::uint64_t config) {
  using namespace detail;
  Rng rng = Rng(4242, 11).substream(config).substream(std::hash<std::string>{}(kind) & 0xffff);
  GradProblem gp;
  gp.name = kind;
  if (kind == "dense") {
    const Activation acts[] = {Activation::kNone, Activation::kTanh, Activation::kSigmoid};
    auto l = std::make_shared<DenseLayer>(make_dense("l", pick(rng, 1, 5), pick(rng, 1, 5), acts[config % 3], rng));
    l->b.value = rng_uniform(rng, l->b.value.shape(), -0.5, 0.5);
    const Tensor x = rng_uniform(rng, {pick(rng, 1, 4), l->in_width()}, -1.0, 1.0);
    const Tensor r = rng_uniform(rng, {x.dim(0), l->out_width()}, -1.0, 1.0);
    gp.params = l->params();
    gp.f = [l, x, r](Tape& t) { return weighted_sum(t, dense_forward(t, *l, t.constant(x)), r); };
    gp.owner = l;
  } else if (kind == "bilstm") {
    const std::size_t in = pick(rng, 1, 3), H = pick(rng, 1, 3);
    auto l = std::make_shared<RecurrentParams>(make_bilstm("r", in, H, rng));
    randomize(l->params(), rng, 0.5);
    const Tensor x = rng_uniform(rng, {4, in}, -1.0, 1.0);
    const Tensor r = rng_uniform(rng, {4, 2 * H}, -1.0, 1.0);
    gp.params = l->params();
    gp.f = [l, x, r](Tape& t) { return weighted_sum(t, bilstm_forward(t, *l, t.constant(x)), r); };
    gp.owner = l;
  } else if (kind == "conv_block") {
    struct Block {
      Conv2dLayer conv;
      BatchNorm bn;
    };
    const std::size_t N = pick(rng, 2, 3), C = pick(rng, 1, 2), O = pick(rng, 1, 2);
    const std::size_t H = pick(rng, 2, 4), Wd = pick(rng, 2, 4);
    auto b = std::make_shared<Block>();
    b->conv = make_conv("c", C, O, 5, rng);
    b->conv.bias.value = rng_uniform(rng, {O}, -0.1, 0.1);
    b->bn = make_batchnorm("bn", O);
    b->bn.gamma.value = rng_uniform(rng, {O}, 0.5, 1.5);
    b->bn.beta.value = rng_uniform(rng, {O}, -0.5, 0.5);
    b->bn.epsilon = 1e-5;
    const Tensor x = rng_uniform(rng, {N, C, H, Wd}, -1.0, 1.0);
    const Tensor r = rng_uniform(rng, {N, O, H, Wd}, -1.0, 1.0);
    gp.params = {&b->conv.kernels, &b->conv.bias, &b->bn.gamma, &b->bn.beta};
    gp.f = [b, x, r](Tape& t) { return weighted_sum(t, conv_block_forward(t, b->conv, b->bn, t.constant(x)), r); };
    gp.owner = b;
  } else if (kind == "batchnorm") {
    // Input as a Param too, so the gradient through the batch statistics is checked.
    struct Norm {
      BatchNorm bn;
      Param x;
    };
    const std::size_t B = pick(rng, 2, 6), F = pick(rng, 1, 4);
    auto n = std::make_shared<Norm>();
    n->bn = make_batchnorm("bn", F);
    n->bn.gamma.value = rng_uniform(rng, {F}, 0.5, 1.5);
    n->bn.beta.value = rng_uniform(rng, {F}, -0.5, 0.5);
    n->bn.epsilon = 1e-5;
    n->x = Param("x", rng_uniform(rng, {B, F}, -2.0, 2.0));
    const Tensor r = rng_uniform(rng, {B, F}, -1.0, 1.0);
    gp.params = {&n->bn.gamma, &n->bn.beta, &n->x};
    gp.f = [n, r](Tape& t) { return weighted_sum(t, batchnorm_forward(t, n->bn, t.param(n->x)), r); };
    gp.owner = n;
  } else if (kind == "generator" || kind == "generator_noise_free") {
    auto p = make_pipeline(rng, HeadKind::kBinary, kind == "generator" ? 2 : 0);
    randomize(p->g.params(), rng, 0.5);
    const Tensor r = rng_uniform(rng, {p->B, p->W, p->A}, -1.0, 1.0);
    gp.params = p->g.params();
    gp.f = [p, r](Tape& t) { return weighted_sum(t, fake_of(t, *p), r); };
    gp.owner = p;
  } else if (kind == "discriminator_binary" || kind == "discriminator_pc") {
    const HeadKind head = kind == "discriminator_pc" ? HeadKind::kPhoneme : HeadKind::kBinary;
    auto p = make_pipeline(rng, head, 2);
    const Tensor r = rng_uniform(rng, {p->B, head == HeadKind::kPhoneme ? p->P : 1}, -1.0, 1.0);
    gp.params = p->d.params();
    gp.f = [p, r](Tape& t) {
      Var yc = t.constant(p->y_center);
      return weighted_sum(t, discriminator_forward(t, p->d, t.constant(p->real), yc), r);
    };
    gp.owner = p;
  } else {
    throw std::invalid_argument("unknown layer kind " + kind);
  }
  return gp;
}

// Every loss checked against all generator and discriminator parameters.
inline GradProblem loss_problem(const std::string& kind, std::uint64_t config) {
  using namespace detail;
  Rng rng = Rng(4242, 12).substream(config).substream(std::hash<std::string>{}(kind) & 0xffff);
  GradProblem gp;
  gp.name = kind;
  const bool pc = kind.starts_with("pc_");
  auto p = make_pipeline(rng, pc ? HeadKind::kPhoneme : HeadKind::kBinary, 2);
  gp.owner = p;
  LossConfig cfg;
  cfg.adv_weight = rng.uniform(0.5, 2.0);
  cfg.recon_weight = rng.uniform(0.5, 2.0);
  if (kind == "mse_l2" || kind == "mse_l1") {
    const ReconNorm norm = kind == "mse_l1" ? ReconNorm::kL1 : ReconNorm::kL2;
    gp.params = p->g.params();
    gp.f = [p, norm](Tape& t) { return loss_mse(fake_of(t, *p), t.constant(p->real), norm); };
    return gp;
  }
  gp.params = p->all_params();
  if (kind == "discriminator") {
    gp.f = [p](Tape& t) {
      auto [r, f] = judge(t, *p, fake_of(t, *p));
      return loss_discriminator(r, f);
    };
  } else if (kind == "generator_saturating" || kind == "generator_non_saturating") {
    cfg.g_adv_form = kind == "generator_saturating" ? AdvForm::kSaturating : AdvForm::kNonSaturating;
    cfg.recon_norm = config % 2 ? ReconNorm::kL1 : ReconNorm::kL2;
    gp.f = [p, cfg](Tape& t) {
      Var fake = fake_of(t, *p);
      auto [r, f] = judge(t, *p, fake);
      return loss_generator_mtl(fake, t.constant(p->real), f, cfg);
    };
  } else if (kind == "pc_discriminator") {
    gp.f = [p](Tape& t) {
      auto [r, f] = judge(t, *p, fake_of(t, *p));
      return loss_pc_discriminator(r, f, t.constant(p->labels));
    };
  } else if (kind == "pc_generator") {
    gp.f = [p, cfg](Tape& t) {
      Var fake = fake_of(t, *p);
      auto [r, f] = judge(t, *p, fake);
      return loss_pc_generator(fake, t.constant(p->real), f, t.constant(p->labels), cfg);
    };
  } else {
    throw std::invalid_argument("unknown loss kind " + kind);
  }
  return gp;
}

}  // namespace gmtl::test

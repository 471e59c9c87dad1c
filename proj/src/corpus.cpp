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

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gmtl/data.hpp"
#include "gmtl/errors.hpp"

namespace gmtl {

void CorpusConfig::validate() const {
  if (phonemes < 1) throw ConfigError("corpus.phonemes must be >= 1");
  if (mcc_dims < 1) throw ConfigError("corpus.mcc_dims must be >= 1");
  if (utterances < 1) throw ConfigError("corpus.utterances must be >= 1");
  if (min_frames < 1 || max_frames < min_frames) throw ConfigError("corpus frame range must satisfy 1 <= min <= max");
  if (min_phone_frames < 1 || max_phone_frames < min_phone_frames) {
    throw ConfigError("corpus phone duration range must satisfy 1 <= min <= max");
  }
  if (!(sigma >= 0.0)) throw ConfigError("corpus.sigma must be >= 0");
  if (!(delta_scale >= 0.0)) throw ConfigError("corpus.delta_scale must be >= 0");
  if (!(train_fraction > 0.0 && valid_fraction >= 0.0 && train_fraction + valid_fraction <= 1.0)) {
    throw ConfigError("corpus split fractions must satisfy train > 0, valid >= 0, train + valid <= 1");
  }
}

KeyValues CorpusConfig::to_kv() const {
  return {
      {"corpus.phonemes", std::to_string(phonemes)},
      {"corpus.mcc_dims", std::to_string(mcc_dims)},
      {"corpus.utterances", std::to_string(utterances)},
      {"corpus.min_frames", std::to_string(min_frames)},
      {"corpus.max_frames", std::to_string(max_frames)},
      {"corpus.min_phone_frames", std::to_string(min_phone_frames)},
      {"corpus.max_phone_frames", std::to_string(max_phone_frames)},
      {"corpus.sigma", format_double(sigma)},
      {"corpus.delta_scale", format_double(delta_scale)},
      {"corpus.train_fraction", format_double(train_fraction)},
      {"corpus.valid_fraction", format_double(valid_fraction)},
      {"corpus.seed", std::to_string(seed)},
  };
}

CorpusConfig CorpusConfig::from_kv(const KeyValues& kv) {
  CorpusConfig c;
  for (const auto& [k, v] : kv) {
    if (k.rfind("corpus.", 0) != 0) continue;
    if (k == "corpus.phonemes") c.phonemes = parse_u64(k, v);
    else if (k == "corpus.mcc_dims") c.mcc_dims = parse_u64(k, v);
    else if (k == "corpus.utterances") c.utterances = parse_u64(k, v);
    else if (k == "corpus.min_frames") c.min_frames = parse_u64(k, v);
    else if (k == "corpus.max_frames") c.max_frames = parse_u64(k, v);
    else if (k == "corpus.min_phone_frames") c.min_phone_frames = parse_u64(k, v);
    else if (k == "corpus.max_phone_frames") c.max_phone_frames = parse_u64(k, v);
    else if (k == "corpus.sigma") c.sigma = parse_double(k, v);
    else if (k == "corpus.delta_scale") c.delta_scale = parse_double(k, v);
    else if (k == "corpus.train_fraction") c.train_fraction = parse_double(k, v);
    else if (k == "corpus.valid_fraction") c.valid_fraction = parse_double(k, v);
    else if (k == "corpus.seed") c.seed = parse_u64(k, v);
    else throw ConfigError("unknown key '" + k + "'");
  }
  c.validate();
  return c;
}

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "valid") return Split::kValid;
  if (s == "test") return Split::kTest;
  throw ConfigError("unknown split '" + s + "' (expected train, valid or test)");
}

std::size_t Dataset::split_begin(Split s) const {
  const std::size_t n = utterances.size();
  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * config.train_fraction + 1e-9));
  const auto n_valid = static_cast<std::size_t>(std::floor(static_cast<double>(n) * config.valid_fraction + 1e-9));
  switch (s) {
    case Split::kTrain: return 0;
    case Split::kValid: return std::min(n, n_train);
    case Split::kTest: return std::min(n, n_train + n_valid);
  }
  return 0;
}

std::size_t Dataset::split_end(Split s) const {
  switch (s) {
    case Split::kTrain: return split_begin(Split::kValid);
    case Split::kValid: return split_begin(Split::kTest);
    case Split::kTest: return utterances.size();
  }
  return 0;
}

Split Dataset::split_of(std::size_t index) const {
  if (index < split_end(Split::kTrain)) return Split::kTrain;
  if (index < split_end(Split::kValid)) return Split::kValid;
  return Split::kTest;
}

std::vector<std::size_t> Dataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = split_begin(s); i < split_end(s); ++i) out.push_back(i);
  return out;
}

GroundTruth generate_ground_truth(const CorpusConfig& cfg) {
  cfg.validate();
  Rng rng = Rng(cfg.seed, Stream::kCorpus).substream(0);
  const std::size_t P = cfg.phonemes, M = cfg.mcc_dims, A = cfg.acoustic_dim();
  GroundTruth gt;
  gt.mu = Tensor({P, A}, 0.0);
  gt.delta = Tensor({P, M}, 0.0);
  gt.voiced.assign(P, 0);
  gt.sigma = cfg.sigma;
  for (std::size_t p = 0; p < P; ++p) gt.voiced[p] = rng.bernoulli(0.75) ? 1 : 0;
  // Keep both voicing classes present whenever there is room for them.
  if (std::find(gt.voiced.begin(), gt.voiced.end(), 1) == gt.voiced.end()) gt.voiced[0] = 1;
  if (P >= 2 && std::find(gt.voiced.begin(), gt.voiced.end(), 0) == gt.voiced.end()) gt.voiced[P - 1] = 0;
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t d = 0; d < M; ++d) gt.mu.at(p, d) = rng.uniform(-1.0, 1.0);
    gt.mu.at(p, cfg.bap_index()) = rng.uniform(0.1, 0.9);
    const double f0_offset = std::log(200.0) + rng.uniform(-0.15, 0.15);
    gt.mu.at(p, cfg.lf0_index()) = gt.voiced[p] ? f0_offset : 0.0;
    gt.mu.at(p, cfg.vuv_index()) = gt.voiced[p] ? 1.0 : 0.0;
    for (std::size_t d = 0; d < M; ++d) gt.delta.at(p, d) = cfg.delta_scale * rng.uniform(0.5, 1.0);
  }
  return gt;
}

namespace {

double log_f0(const GroundTruth& gt, std::size_t p, double utt_pos, double prosody) {
  if (!gt.voiced[p]) return 0.0;
  const std::size_t lf0 = gt.mcc_dims() + 1;
  return gt.mu.at(p, lf0) + gt.f0_sine_amplitude * std::sin(2.0 * std::numbers::pi * utt_pos) -
         gt.f0_prosody_drop * prosody;
}

Utterance generate_utterance(const CorpusConfig& cfg, const GroundTruth& gt, Rng rng) {
  const std::size_t P = cfg.phonemes, M = cfg.mcc_dims, L = cfg.ling_dim(), A = cfg.acoustic_dim();
  const std::size_t T = cfg.min_frames + rng.below(cfg.max_frames - cfg.min_frames + 1);
  Utterance u;
  u.ling = Tensor({T, L}, 0.0);
  u.acoustic = Tensor({T, A}, 0.0);
  u.labels.assign(T, 0);
  std::size_t t = 0;
  while (t < T) {
    const auto p = static_cast<std::size_t>(rng.below(P));
    std::size_t dur = cfg.min_phone_frames + rng.below(cfg.max_phone_frames - cfg.min_phone_frames + 1);
    dur = std::min(dur, T - t);
    const double s = rng.bernoulli(0.5) ? 1.0 : -1.0;
    const bool boundary = rng.bernoulli(0.15);
    const double prosody = (t + dur == T || boundary) ? 1.0 : 0.0;
    for (std::size_t k = 0; k < dur; ++k, ++t) {
      const double phone_pos = dur > 1 ? static_cast<double>(k) / static_cast<double>(dur - 1) : 0.0;
      const double utt_pos = T > 1 ? static_cast<double>(t) / static_cast<double>(T - 1) : 0.0;
      u.labels[t] = static_cast<std::uint32_t>(p);
      u.ling.at(t, p) = 1.0;
      u.ling.at(t, P) = phone_pos;
      u.ling.at(t, P + 1) = utt_pos;
      u.ling.at(t, P + 2) = prosody;
      for (std::size_t d = 0; d < M; ++d) {
        u.acoustic.at(t, d) = gt.mu.at(p, d) + s * gt.delta.at(p, d) + cfg.sigma * rng.normal();
      }
      u.acoustic.at(t, cfg.bap_index()) = gt.mu.at(p, cfg.bap_index()) + cfg.sigma * rng.normal();
      u.acoustic.at(t, cfg.lf0_index()) = log_f0(gt, p, utt_pos, prosody);
      u.acoustic.at(t, cfg.vuv_index()) = gt.voiced[p] ? 1.0 : 0.0;
    }
  }
  return u;
}

}  // namespace

std::pair<Dataset, GroundTruth> generate_corpus(const CorpusConfig& cfg) {
  GroundTruth gt = generate_ground_truth(cfg);
  Dataset ds;
  ds.config = cfg;
  const Rng base(cfg.seed, Stream::kCorpus);
  ds.utterances.reserve(cfg.utterances);
  for (std::size_t i = 0; i < cfg.utterances; ++i) {
    ds.utterances.push_back(generate_utterance(cfg, gt, base.substream(1 + i)));
  }
  return {std::move(ds), std::move(gt)};
}

Tensor conditional_mean(const GroundTruth& gt, const Tensor& ling) {
  const std::size_t P = gt.phonemes(), M = gt.mcc_dims(), A = M + 3;
  if (ling.rank() != 2 || ling.dim(1) != P + 3) {
    throw ShapeError("conditional_mean: ling " + shape_str(ling.shape()) + " does not match " + std::to_string(P + 3) +
                     " features");
  }
  const std::size_t T = ling.dim(0);
  Tensor out({T, A}, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    std::size_t p = 0;
    for (std::size_t k = 1; k < P; ++k)
      if (ling.at(t, k) > ling.at(t, p)) p = k;
    for (std::size_t d = 0; d <= M; ++d) out.at(t, d) = gt.mu.at(p, d);
    out.at(t, M + 1) = log_f0(gt, p, ling.at(t, P + 1), ling.at(t, P + 2));
    out.at(t, M + 2) = gt.voiced[p] ? 1.0 : 0.0;
  }
  return out;
}

GvOracle natural_gv_oracle(const GroundTruth& gt, const std::vector<double>& w) {
  const std::size_t P = gt.phonemes(), M = gt.mcc_dims();
  if (w.size() != P) throw ShapeError("natural_gv_oracle: marginal has " + std::to_string(w.size()) + " entries, expected " + std::to_string(P));
  GvOracle o{Tensor({M}, 0.0), Tensor({M}, 0.0)};
  for (std::size_t d = 0; d < M; ++d) {
    double m1 = 0.0, m2 = 0.0, dd = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
      const double mu = gt.mu.at(p, d);
      m1 += w[p] * mu;
      m2 += w[p] * mu * mu;
      dd += w[p] * gt.delta.at(p, d) * gt.delta.at(p, d);
    }
    const double var_mu = std::max(0.0, m2 - m1 * m1);
    o.gv_condmean[d] = var_mu;
    o.gv_natural[d] = var_mu + dd + gt.sigma * gt.sigma;
  }
  return o;
}

std::vector<double> uniform_marginal(std::size_t phonemes) {
  return std::vector<double>(phonemes, 1.0 / static_cast<double>(phonemes));
}

std::vector<double> empirical_marginal(const Dataset& ds, Split s) {
  std::vector<double> w(ds.config.phonemes, 0.0);
  double total = 0.0;
  for (std::size_t i : ds.indices(s)) {
    for (auto l : ds.utterances[i].labels) {
      w.at(l) += 1.0;
      total += 1.0;
    }
  }
  if (total > 0.0)
    for (auto& v : w) v /= total;
  return w;
}

}  // namespace gmtl

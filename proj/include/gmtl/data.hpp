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

// Synthetic acoustic-model corpus with a closed-form generative ground truth.
//
// Each utterance is a random phoneme sequence. Every phoneme instance draws a
// hidden mode s in {-1, +1} that never appears in the linguistic features:
//
//   mcc[d]  = mu[p, d] + s * delta[p, d] + N(0, sigma^2)     d < M
//   bap     = mu[p, M] + N(0, sigma^2)
//   log-F0  = mu[p, M+1] + 0.1 sin(2 pi u) - 0.05 * prosody  (voiced only, else 0)
//   vuv     = voiced[p]
//
// where u is the position in the utterance. The MSE-optimal predictor is the
// conditional mean, which drops the s * delta term entirely.
//
// Linguistic layout per frame: [one-hot phoneme (P) | position in phoneme |
// position in utterance | prosody-boundary flag].
// Acoustic layout per frame:   [M mcc | bap | log-F0 | vuv].

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gmtl/io.hpp"
#include "gmtl/rng.hpp"
#include "gmtl/tensor.hpp"

namespace gmtl {

struct CorpusConfig {
  std::size_t phonemes = 8;
  std::size_t mcc_dims = 8;
  std::size_t utterances = 200;
  std::size_t min_frames = 60;
  std::size_t max_frames = 120;
  std::size_t min_phone_frames = 5;
  std::size_t max_phone_frames = 15;
  double sigma = 0.1;
  double delta_scale = 0.5;
  double train_fraction = 0.8;
  double valid_fraction = 0.1;
  std::uint64_t seed = 20180101;

  std::size_t ling_dim() const { return phonemes + 3; }
  std::size_t acoustic_dim() const { return mcc_dims + 3; }
  std::size_t bap_index() const { return mcc_dims; }
  std::size_t lf0_index() const { return mcc_dims + 1; }
  std::size_t vuv_index() const { return mcc_dims + 2; }

  void validate() const;
  /// corpus.* key=value entries.
  KeyValues to_kv() const;
  /// Applies corpus.* keys; other keys are left to the caller. Unknown corpus.* keys throw.
  static CorpusConfig from_kv(const KeyValues& kv);
};

struct Utterance {
  Tensor ling;                        // [T, L]
  Tensor acoustic;                    // [T, A]
  std::vector<std::uint32_t> labels;  // [T]

  std::size_t frames() const { return labels.size(); }
};

struct GroundTruth {
  Tensor mu;                         // [P, A]
  Tensor delta;                      // [P, M]
  std::vector<std::uint8_t> voiced;  // [P]
  double sigma = 0.0;
  double f0_sine_amplitude = 0.1;
  double f0_prosody_drop = 0.05;

  std::size_t phonemes() const { return mu.dim(0); }
  std::size_t mcc_dims() const { return delta.dim(1); }
};

enum class Split { kTrain, kValid, kTest };

const char* split_name(Split s);
Split parse_split(const std::string& s);

struct Dataset {
  CorpusConfig config;
  std::vector<Utterance> utterances;
  KeyValues extra;  // non-corpus metadata carried in the embedded text block

  std::size_t split_begin(Split s) const;
  std::size_t split_end(Split s) const;
  Split split_of(std::size_t index) const;
  std::vector<std::size_t> indices(Split s) const;
};

/// Utterances are laid out train, then valid, then test; counts follow the
/// configured fractions (test takes the remainder).
std::pair<Dataset, GroundTruth> generate_corpus(const CorpusConfig& cfg);

/// Ground-truth tables alone (the first draws of the corpus stream).
GroundTruth generate_ground_truth(const CorpusConfig& cfg);

/// E[acoustic | ling] for every frame of ling [T, L]: the MSE-optimal predictor.
Tensor conditional_mean(const GroundTruth& gt, const Tensor& ling);

struct GvOracle {
  Tensor gv_natural;   // [M]
  Tensor gv_condmean;  // [M]
};

/// Per MCC dim d, with p ~ marginal:
///   gv_natural  = Var_p(mu[p,d]) + E_p[delta[p,d]^2] + sigma^2
///   gv_condmean = Var_p(mu[p,d])
GvOracle natural_gv_oracle(const GroundTruth& gt, const std::vector<double>& phoneme_marginal);

std::vector<double> uniform_marginal(std::size_t phonemes);
/// Frame-level phoneme frequencies over one split.
std::vector<double> empirical_marginal(const Dataset& ds, Split s);

// GSPD file format.
inline constexpr std::uint32_t kDatasetFormatVersion = 1;

std::vector<std::uint8_t> encode_dataset(const Dataset& ds);
Dataset decode_dataset(const std::vector<std::uint8_t>& bytes);
void write_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

struct WindowRef {
  std::size_t utterance = 0;
  std::size_t start = 0;
};

std::size_t window_stride(std::size_t window);

/// All windows of one split at stride window/2 (at least 1), in utterance order.
/// Throws ShapeError when the window exceeds the shortest utterance.
std::vector<WindowRef> enumerate_windows(const Dataset& ds, Split s, std::size_t window);

struct Batch {
  Tensor ling;                        // [B, W, L]
  Tensor acoustic;                    // [B, W, A]
  Tensor center_ling;                 // [B, L]
  std::vector<std::uint32_t> labels;  // [B] center-frame phoneme
  std::vector<WindowRef> windows;
};

Batch gather_batch(const Dataset& ds, std::span<const WindowRef> windows, std::size_t window);

/// Endless shuffled stream of window batches. Each epoch is a fresh
/// permutation drawn from rng.substream(epoch); batch k covers stream
/// positions [k*B, (k+1)*B), crossing epoch boundaries when needed.
class BatchStream {
 public:
  BatchStream(const Dataset& ds, Split split, std::size_t batch_size, std::size_t window, Rng rng);

  Batch batch(std::uint64_t index) const;
  Batch next() { return batch(next_index_++); }

  std::size_t windows_per_epoch() const { return windows_.size(); }
  const std::vector<WindowRef>& windows() const { return windows_; }

 private:
  const std::vector<std::size_t>& epoch_order(std::uint64_t epoch) const;

  const Dataset* ds_;
  std::size_t batch_size_;
  std::size_t window_;
  Rng rng_;
  std::vector<WindowRef> windows_;
  std::uint64_t next_index_ = 0;
  mutable std::uint64_t cached_epoch_ = ~std::uint64_t{0};
  mutable std::vector<std::size_t> cached_order_;
};

}  // namespace gmtl

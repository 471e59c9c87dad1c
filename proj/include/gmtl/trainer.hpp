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

// Alternating generator / discriminator training, checkpoints and synthesis.
//
// Randomness is keyed on the step index rather than drawn from a running
// stream, so a run resumed from a checkpoint at step k replays steps k+1..n
// exactly:
//   G batch at step s          BatchStream(train, Rng(seed, BatchG)).batch(s)
//   D batch at step s, pass j  BatchStream(train, Rng(seed, BatchD)).batch(s * d_steps + j)
//   noise at step s            Rng(seed, Noise).substream(s).substream(0 for G, 1 + j for D pass j)

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gmtl/config.hpp"
#include "gmtl/data.hpp"
#include "gmtl/models.hpp"

namespace gmtl {

struct DataDims {
  std::size_t cond_dim = 0;
  std::size_t acoustic_dim = 0;
  std::size_t num_classes = 0;
  std::size_t mcc_dims = 0;

  static DataDims of(const Dataset& ds);
  bool operator==(const DataDims&) const = default;
};

struct TrainState {
  TrainConfig config;
  DataDims dims;
  Generator g;
  std::optional<Discriminator> d;
  AdamState adam_g;
  std::optional<AdamState> adam_d;
  Tensor norm_mean;  // [A]
  Tensor norm_std;   // [A]
  std::uint64_t step = 0;
};

/// Fresh parameters from Rng(seed, InitG) / Rng(seed, InitD) and
/// normalization statistics from the training split.
TrainState init_state(const TrainConfig& cfg, const Dataset& ds);

/// Per-dimension mean and population std over every training-split frame
/// (std below 1e-12 is replaced by 1).
std::pair<Tensor, Tensor> acoustic_stats(const Dataset& ds);

// GMTL checkpoint format.
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

/// Named tensors in file order.
std::vector<std::pair<std::string, const Tensor*>> checkpoint_tensors(const TrainState& s);
std::vector<std::uint8_t> encode_checkpoint(const TrainState& s);
TrainState decode_checkpoint(const std::vector<std::uint8_t>& bytes);
void save_checkpoint(const TrainState& s, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);

struct StepRecord {
  std::uint64_t step = 0;
  double mse = 0.0;
  double adv = 0.0;     // unweighted adversarial term of the generator loss
  double d_loss = 0.0;  // discriminator loss of the last D pass
  double d_real = 0.0;  // real-sample part of d_loss
  double wall_ms = 0.0;
  bool nan = false;
};

std::string log_csv_header();
std::string format_log_row(const StepRecord& r);

class Trainer {
 public:
  Trainer(const Dataset& ds, TrainState state);

  /// d_steps discriminator updates then one generator update. Throws
  /// NumericError on a non-finite loss, output or gradient.
  StepRecord step();

  /// Normalized-space MSE of chunked synthesis over the validation split.
  double validation_mse() const;

  const TrainState& state() const { return state_; }
  TrainState& state() { return state_; }

 private:
  Tensor normalize(const Tensor& acoustic) const;
  void discriminator_pass(std::uint64_t s, std::size_t j, StepRecord& rec);
  void generator_pass(std::uint64_t s, StepRecord& rec);

  const Dataset* ds_;
  TrainState state_;
  BatchStream g_batches_;
  std::optional<BatchStream> d_batches_;
};

/// Acoustic frames [T, A] for one utterance in original units. The generator
/// runs on consecutive window-length chunks (the last one aligned to the end)
/// with per-frame noise from Rng(seed, SynthNoise).substream(noise_id).
Tensor synthesize(const TrainState& s, const Tensor& ling, std::uint64_t seed, std::uint64_t noise_id = 0);

struct TrainOutcome {
  TrainState state;
  std::vector<StepRecord> log;
  bool nan_abort = false;
  std::string abort_reason;
};

/// Runs until cfg.steps, writing <out>/checkpoint.gmtl (every valid_every
/// steps and at the end), <out>/log.csv and <out>/valid.csv. With resume the
/// run continues from the existing checkpoint; the log is cut back to the
/// checkpoint step first. On a non-finite value the run stops, the previous
/// checkpoint is left in place and the log ends with a nan=1 row.
TrainOutcome run_training(const TrainConfig& cfg, const Dataset& ds, const std::filesystem::path& out, bool resume);

/// Synthesizes every utterance of one split into a dataset that carries the
/// source linguistic features and labels, with variant and source.split set.
Dataset synthesize_split(const TrainState& s, const Dataset& ds, Split split, std::uint64_t seed);

}  // namespace gmtl

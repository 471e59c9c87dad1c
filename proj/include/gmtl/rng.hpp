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

#pragma once

#include <cstdint>
#include <vector>

#include "gmtl/tensor.hpp"

namespace gmtl {

/// Well-known substream ids. Draws from different streams never interleave.
enum class Stream : std::uint64_t {
  kCorpus = 1,
  kInitGenerator = 2,
  kInitDiscriminator = 3,
  kNoise = 4,
  kBatchGenerator = 5,
  kBatchDiscriminator = 6,
  kSynthNoise = 7,
};

/// Counter-based generator: the n-th draw is a pure function of (key, n),
/// where the key mixes the seed and a stream id. Output is the SplitMix64
/// finalizer applied to key + n * golden-ratio increment.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);
  Rng(std::uint64_t seed, Stream stream) : Rng(seed, static_cast<std::uint64_t>(stream)) {}

  /// Independent child stream keyed on (this key, id).
  Rng substream(std::uint64_t id) const;

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on [lo, hi); throws DomainError unless lo < hi.
  double uniform(double lo, double hi);
  /// Standard normal by Box-Muller (portable, unlike std::normal_distribution).
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }
  void set_counter(std::uint64_t c) noexcept { counter_ = c; }

 private:
  Rng(std::uint64_t seed, std::uint64_t key, bool);

  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

/// i.i.d. uniform samples on [lo, hi).
Tensor rng_uniform(Rng& rng, const Shape& shape, double lo, double hi);

/// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> permutation(Rng& rng, std::size_t n);

}  // namespace gmtl

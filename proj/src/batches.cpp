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
#include <cstring>

#include "gmtl/data.hpp"
#include "gmtl/errors.hpp"

namespace gmtl {

std::size_t window_stride(std::size_t window) { return std::max<std::size_t>(1, window / 2); }

std::vector<WindowRef> enumerate_windows(const Dataset& ds, Split s, std::size_t window) {
  if (window == 0) throw ShapeError("window must be >= 1");
  const std::size_t stride = window_stride(window);
  std::vector<WindowRef> out;
  for (std::size_t i : ds.indices(s)) {
    const std::size_t T = ds.utterances[i].frames();
    if (window > T) {
      throw ShapeError("window " + std::to_string(window) + " exceeds utterance " + std::to_string(i) + " with " +
                       std::to_string(T) + " frames");
    }
    for (std::size_t start = 0; start + window <= T; start += stride) out.push_back({i, start});
  }
  return out;
}

Batch gather_batch(const Dataset& ds, std::span<const WindowRef> windows, std::size_t window) {
  if (windows.empty()) throw ShapeError("gather_batch: empty window list");
  const Utterance& first = ds.utterances.at(windows[0].utterance);
  const std::size_t B = windows.size(), L = first.ling.dim(1), A = first.acoustic.dim(1);
  Batch b;
  b.ling = Tensor({B, window, L});
  b.acoustic = Tensor({B, window, A});
  b.center_ling = Tensor({B, L});
  b.labels.resize(B);
  b.windows.assign(windows.begin(), windows.end());
  double* ling = b.ling.data().data();
  double* ac = b.acoustic.data().data();
  for (std::size_t k = 0; k < B; ++k) {
    const WindowRef& w = windows[k];
    const Utterance& u = ds.utterances.at(w.utterance);
    if (w.start + window > u.frames()) throw ShapeError("gather_batch: window runs past utterance end");
    std::memcpy(ling + k * window * L, u.ling.data().data() + w.start * L, window * L * sizeof(double));
    std::memcpy(ac + k * window * A, u.acoustic.data().data() + w.start * A, window * A * sizeof(double));
    const std::size_t c = w.start + window / 2;
    std::memcpy(b.center_ling.data().data() + k * L, u.ling.data().data() + c * L, L * sizeof(double));
    b.labels[k] = u.labels[c];
  }
  return b;
}

BatchStream::BatchStream(const Dataset& ds, Split split, std::size_t batch_size, std::size_t window, Rng rng)
    : ds_(&ds), batch_size_(batch_size), window_(window), rng_(rng), windows_(enumerate_windows(ds, split, window)) {
  if (batch_size == 0) throw ShapeError("batch size must be >= 1");
  if (windows_.empty()) throw ShapeError(std::string("split '") + split_name(split) + "' has no windows");
}

const std::vector<std::size_t>& BatchStream::epoch_order(std::uint64_t epoch) const {
  if (epoch != cached_epoch_) {
    Rng r = rng_.substream(epoch);
    cached_order_ = permutation(r, windows_.size());
    cached_epoch_ = epoch;
  }
  return cached_order_;
}

Batch BatchStream::batch(std::uint64_t index) const {
  const std::size_t n = windows_.size();
  std::vector<WindowRef> picks;
  picks.reserve(batch_size_);
  for (std::size_t k = 0; k < batch_size_; ++k) {
    const std::uint64_t pos = index * batch_size_ + k;
    picks.push_back(windows_[epoch_order(pos / n)[pos % n]]);
  }
  return gather_batch(*ds_, picks, window_);
}

}  // namespace gmtl

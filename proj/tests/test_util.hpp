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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

#include "gmtl/autodiff.hpp"
#include "gmtl/gradcheck.hpp"
#include "gmtl/rng.hpp"
#include "gmtl/tensor.hpp"
#include "gradient_cases.hpp"

namespace gmtl::test {

inline Tensor random_tensor(Rng& rng, const Shape& shape, double lo = -1.0, double hi = 1.0) {
  return rng_uniform(rng, shape, lo, hi);
}

// Uniform values with |v| in [lo, hi] and a random sign.
inline Tensor away_from_zero(Rng& rng, const Shape& shape, double lo, double hi) {
  Tensor t = rng_uniform(rng, shape, lo, hi);
  for (double& v : t.storage()) {
    if (rng.bernoulli(0.5)) v = -v;
  }
  return t;
}

inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

inline void require_gradients(const LossBuilder& f, std::span<Param* const> params) {
  const GradCheckReport r = check_gradients(f, params, kGradH, kGradTol, kGradFloor);
  INFO("max relative error " << r.max_rel_error << " over " << r.checked << " elements");
  if (!r.failures.empty()) {
    const auto& e = r.failures.front();
    INFO("first failure " << e.param << "[" << e.index << "]: autodiff " << e.autodiff << " numeric " << e.numeric);
    CHECK(r.passed);
  } else {
    CHECK(r.passed);
  }
  CHECK(r.checked > 0);
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.shape() == b.shape());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("gmtl_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace gmtl::test

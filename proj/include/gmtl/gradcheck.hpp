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

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gmtl/autodiff.hpp"

namespace gmtl {

/// Builds a scalar loss on a fresh tape from the current param values.
using LossBuilder = std::function<Var(Tape&)>;

struct GradCheckFailure {
  std::string param;
  std::size_t index = 0;
  double autodiff = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  bool passed = true;
  std::vector<GradCheckFailure> failures;  // capped at 16 entries
};

/// Relative error |a - n| / max(|a|, |n|, floor). The floor keeps the ratio
/// meaningful where both gradients vanish.
double relative_error(double autodiff, double numeric, double floor = 1e-6);

/// Compares backward() against (f(θ+h) - f(θ-h)) / 2h for every element of
/// every param. Param grads are zeroed before and left holding the autodiff
/// gradient afterwards.
GradCheckReport check_gradients(const LossBuilder& f, std::span<Param* const> params,
                                double h = 1e-5, double tol = 1e-6, double floor = 1e-6);

}  // namespace gmtl

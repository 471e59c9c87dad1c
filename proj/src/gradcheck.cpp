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

#include "gmtl/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace gmtl {

double relative_error(double autodiff, double numeric, double floor) {
  const double denom = std::max({std::fabs(autodiff), std::fabs(numeric), floor});
  return std::fabs(autodiff - numeric) / denom;
}

GradCheckReport check_gradients(const LossBuilder& f, std::span<Param* const> params,
                                double h, double tol, double floor) {
  for (Param* p : params) p->zero_grad();
  {
    Tape tape;
    Var loss = f(tape);
    tape.backward(loss);
  }
  auto eval = [&] {
    Tape tape;
    return f(tape).value().item();
  };

  GradCheckReport report;
  for (Param* p : params) {
    auto& theta = p->value.storage();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double saved = theta[i];
      theta[i] = saved + h;
      const double up = eval();
      theta[i] = saved - h;
      const double down = eval();
      theta[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = p->grad[i];
      const double err = relative_error(analytic, numeric, floor);
      report.max_rel_error = std::max(report.max_rel_error, err);
      ++report.checked;
      if (!(err <= tol)) {
        report.passed = false;
        if (report.failures.size() < 16) report.failures.push_back({p->name, i, analytic, numeric, err});
      }
    }
  }
  return report;
}

}  // namespace gmtl

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

// Raw loops behind the autodiff ops. Internal header.

#pragma once

#include <cstddef>
#include <vector>

#include "gmtl/tensor.hpp"

namespace gmtl {

struct Broadcast {
  enum class Mode { kSame, kAScalar, kBScalar, kASuffix, kBSuffix, kGeneral };
  Mode mode = Mode::kSame;
  Shape out;
  std::size_t out_size = 1, a_size = 1, b_size = 1;
  std::vector<std::size_t> a_strides, b_strides;  // per out dim, 0 where broadcast
};

Broadcast make_broadcast(const Shape& a, const Shape& b);

/// Calls f(out_index, a_index, b_index) for every output element in row-major order.
template <class F>
void for_each_broadcast(const Broadcast& bc, F&& f) {
  const std::size_t n = bc.out_size;
  switch (bc.mode) {
    case Broadcast::Mode::kSame:
      for (std::size_t o = 0; o < n; ++o) f(o, o, o);
      return;
    case Broadcast::Mode::kBScalar:
      for (std::size_t o = 0; o < n; ++o) f(o, o, std::size_t{0});
      return;
    case Broadcast::Mode::kAScalar:
      for (std::size_t o = 0; o < n; ++o) f(o, std::size_t{0}, o);
      return;
    case Broadcast::Mode::kBSuffix: {
      const std::size_t nb = bc.b_size;
      for (std::size_t base = 0; base < n; base += nb)
        for (std::size_t j = 0; j < nb; ++j) f(base + j, base + j, j);
      return;
    }
    case Broadcast::Mode::kASuffix: {
      const std::size_t na = bc.a_size;
      for (std::size_t base = 0; base < n; base += na)
        for (std::size_t i = 0; i < na; ++i) f(base + i, i, base + i);
      return;
    }
    case Broadcast::Mode::kGeneral: {
      const std::size_t r = bc.out.size();
      std::vector<std::size_t> idx(r, 0);
      std::size_t ia = 0, ib = 0;
      const std::size_t last = bc.out[r - 1];
      const std::size_t la = bc.a_strides[r - 1], lb = bc.b_strides[r - 1];
      for (std::size_t o = 0; o < n; o += last) {
        for (std::size_t k = 0; k < last; ++k) f(o + k, ia + k * la, ib + k * lb);
        // advance all but the last dim
        for (std::size_t d = r - 1; d-- > 0;) {
          ia += bc.a_strides[d];
          ib += bc.b_strides[d];
          if (++idx[d] < bc.out[d]) break;
          ia -= bc.a_strides[d] * bc.out[d];
          ib -= bc.b_strides[d] * bc.out[d];
          idx[d] = 0;
        }
      }
      return;
    }
  }
}

// C[m,n] += A[m,k] * B[k,n]
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c);
// C[k,n] += A[m,k]^T * B[m,n]
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c);
// C[m,k] += A[m,n] * B[k,n]^T
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);

void transpose_into(const double* src, std::size_t rows, std::size_t cols, double* dst);

// One sample: cols[(c*KH+kh)*KW+kw][h*W+w] = x[c][h+kh-KH/2][w+kw-KW/2], zero outside.
void im2col(const double* x, std::size_t C, std::size_t H, std::size_t W, std::size_t KH, std::size_t KW,
            double* cols);
// Adjoint of im2col: scatters cols back into x with accumulation.
void col2im_add(const double* cols, std::size_t C, std::size_t H, std::size_t W, std::size_t KH, std::size_t KW,
                double* x);

}  // namespace gmtl

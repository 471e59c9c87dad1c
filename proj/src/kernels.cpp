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

#include "gmtl/kernels.hpp"

#include <algorithm>

namespace gmtl {

Broadcast make_broadcast(const Shape& a, const Shape& b) {
  Broadcast bc;
  const std::size_t r = std::max(a.size(), b.size());
  bc.out.resize(r);
  for (std::size_t i = 0; i < r; ++i) {
    std::size_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
    std::size_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
    bc.out[i] = std::max(da, db);
  }
  bc.out_size = shape_size(bc.out);
  bc.a_size = shape_size(a);
  bc.b_size = shape_size(b);

  auto strip = [](const Shape& s) {
    std::size_t k = 0;
    while (k < s.size() && s[k] == 1) ++k;
    return Shape(s.begin() + static_cast<std::ptrdiff_t>(k), s.end());
  };
  auto is_suffix = [&](const Shape& s) {
    Shape t = strip(s);
    if (t.size() > r) return false;
    return std::equal(t.begin(), t.end(), bc.out.end() - static_cast<std::ptrdiff_t>(t.size()));
  };

  if (bc.a_size == bc.out_size && bc.b_size == bc.out_size) {
    bc.mode = Broadcast::Mode::kSame;
  } else if (bc.a_size == bc.out_size && bc.b_size == 1) {
    bc.mode = Broadcast::Mode::kBScalar;
  } else if (bc.b_size == bc.out_size && bc.a_size == 1) {
    bc.mode = Broadcast::Mode::kAScalar;
  } else if (bc.a_size == bc.out_size && is_suffix(b)) {
    bc.mode = Broadcast::Mode::kBSuffix;
  } else if (bc.b_size == bc.out_size && is_suffix(a)) {
    bc.mode = Broadcast::Mode::kASuffix;
  } else {
    bc.mode = Broadcast::Mode::kGeneral;
  }
  if (r == 0) {
    bc.mode = Broadcast::Mode::kSame;
    return bc;
  }

  bc.a_strides.assign(r, 0);
  bc.b_strides.assign(r, 0);
  auto fill = [&](const Shape& s, std::vector<std::size_t>& st) {
    std::size_t stride = 1;
    for (std::size_t k = s.size(); k-- > 0;) {
      std::size_t d = k + (r - s.size());
      st[d] = s[k] == 1 ? 0 : stride;
      stride *= s[k];
    }
  };
  fill(a, bc.a_strides);
  fill(b, bc.b_strides);
  return bc;
}

// Both kernels update four output rows per pass so each loaded B element is
// reused four times. Every C element still sums over p in increasing order.
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    double* __restrict c0 = c + i * n;
    double* __restrict c1 = c0 + n;
    double* __restrict c2 = c1 + n;
    double* __restrict c3 = c2 + n;
    const double* a0 = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double v0 = a0[p], v1 = a0[k + p], v2 = a0[2 * k + p], v3 = a0[3 * k + p];
      const double* __restrict bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double bv = bp[j];
        c0[j] += v0 * bv;
        c1[j] += v1 * bv;
        c2[j] += v2 * bv;
        c3[j] += v3 * bv;
      }
    }
  }
  for (; i < m; ++i) {
    double* __restrict ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* __restrict bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* __restrict bi = b + i * n;
    std::size_t p = 0;
    for (; p + 4 <= k; p += 4) {
      const double v0 = ai[p], v1 = ai[p + 1], v2 = ai[p + 2], v3 = ai[p + 3];
      double* __restrict c0 = c + p * n;
      double* __restrict c1 = c0 + n;
      double* __restrict c2 = c1 + n;
      double* __restrict c3 = c2 + n;
      for (std::size_t j = 0; j < n; ++j) {
        const double bv = bi[j];
        c0[j] += v0 * bv;
        c1[j] += v1 * bv;
        c2[j] += v2 * bv;
        c3[j] += v3 * bv;
      }
    }
    for (; p < k; ++p) {
      const double av = ai[p];
      double* __restrict cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  std::vector<double> bt(n * k);
  transpose_into(b, k, n, bt.data());
  gemm_nn(m, n, k, a, bt.data(), c);
}

void transpose_into(const double* src, std::size_t rows, std::size_t cols, double* dst) {
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) dst[j * rows + i] = src[i * cols + j];
}

void im2col(const double* x, std::size_t C, std::size_t H, std::size_t W, std::size_t KH, std::size_t KW,
            double* cols) {
  const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(KH / 2), pw = static_cast<std::ptrdiff_t>(KW / 2);
  const auto Hs = static_cast<std::ptrdiff_t>(H), Ws = static_cast<std::ptrdiff_t>(W);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t kh = 0; kh < KH; ++kh)
      for (std::size_t kw = 0; kw < KW; ++kw) {
        double* row = cols + ((c * KH + kh) * KW + kw) * H * W;
        const std::ptrdiff_t dh = static_cast<std::ptrdiff_t>(kh) - ph, dw = static_cast<std::ptrdiff_t>(kw) - pw;
        for (std::ptrdiff_t h = 0; h < Hs; ++h) {
          double* dst = row + h * Ws;
          const std::ptrdiff_t hh = h + dh;
          if (hh < 0 || hh >= Hs) {
            std::fill_n(dst, W, 0.0);
            continue;
          }
          const double* src = x + (static_cast<std::ptrdiff_t>(c) * Hs + hh) * Ws;
          for (std::ptrdiff_t w = 0; w < Ws; ++w) {
            const std::ptrdiff_t ww = w + dw;
            dst[w] = (ww < 0 || ww >= Ws) ? 0.0 : src[ww];
          }
        }
      }
}

void col2im_add(const double* cols, std::size_t C, std::size_t H, std::size_t W, std::size_t KH, std::size_t KW,
                double* x) {
  const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(KH / 2), pw = static_cast<std::ptrdiff_t>(KW / 2);
  const auto Hs = static_cast<std::ptrdiff_t>(H), Ws = static_cast<std::ptrdiff_t>(W);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t kh = 0; kh < KH; ++kh)
      for (std::size_t kw = 0; kw < KW; ++kw) {
        const double* row = cols + ((c * KH + kh) * KW + kw) * H * W;
        const std::ptrdiff_t dh = static_cast<std::ptrdiff_t>(kh) - ph, dw = static_cast<std::ptrdiff_t>(kw) - pw;
        for (std::ptrdiff_t h = 0; h < Hs; ++h) {
          const std::ptrdiff_t hh = h + dh;
          if (hh < 0 || hh >= Hs) continue;
          const double* src = row + h * Ws;
          double* dst = x + (static_cast<std::ptrdiff_t>(c) * Hs + hh) * Ws;
          const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -dw), hi = std::min(Ws, Ws - dw);
          for (std::ptrdiff_t w = lo; w < hi; ++w) dst[w + dw] += src[w];
        }
      }
}

}  // namespace gmtl

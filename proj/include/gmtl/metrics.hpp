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

// Objective acoustic metrics: mel-cepstral distortion, F0 RMSE, V/UV error
// and global variance.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "gmtl/tensor.hpp"

namespace gmtl {

/// Mean over frames of (10 / ln 10) * sqrt(2 * sum_{d=1}^{M-1} (ref_d - hyp_d)^2).
/// Column 0 is excluded.
double mcd(const Tensor& ref_mcc, const Tensor& hyp_mcc);

/// Per-frame distortion terms used by mcd (same constant, same exclusion).
std::vector<double> mcd_frames(const Tensor& ref_mcc, const Tensor& hyp_mcc);

struct F0Error {
  double rmse_hz = 0.0;
  std::size_t voiced_frames = 0;
};

/// RMSE of exp(log-F0) over frames voiced in both streams (vuv >= 0.5).
/// Throws DomainError when no frame is voiced in both.
F0Error f0_rmse(std::span<const double> ref_lf0, std::span<const double> ref_vuv, std::span<const double> hyp_lf0,
                std::span<const double> hyp_vuv);

/// Percentage of frames whose thresholded flags (>= 0.5) disagree.
double vuv_error_rate(std::span<const double> ref_vuv, std::span<const double> hyp_vuv);

/// Per-utterance population variance of each column, averaged over utterances.
/// Every utterance needs at least 2 frames.
Tensor global_variance(std::span<const Tensor> utterances);

/// |gv_ref - gv_hyp| elementwise.
Tensor gv_distance(const Tensor& gv_ref, const Tensor& gv_hyp);

struct MetricsReport {
  double mcd_db = 0.0;
  double f0_rmse_hz = 0.0;
  double vuv_error_pct = 0.0;
  Tensor gv_ref;
  Tensor gv_hyp;
  Tensor gv_distance;
  std::size_t utterances = 0;
  std::size_t frames_evaluated = 0;
  std::size_t voiced_frames_evaluated = 0;

  double gv_distance_mean() const;
  double gv_hyp_mean() const;
};

/// Aggregates every metric over aligned utterances. Frames are [T, M + 3]
/// acoustic matrices ([M mcc | bap | log-F0 | vuv]). MCD, F0 RMSE and V/UV
/// are pooled over frames; GV is averaged over utterances.
MetricsReport evaluate(std::span<const Tensor> ref_frames, std::span<const Tensor> hyp_frames,
                       std::size_t mcc_dims);

/// Flat key=value text.
std::string format_report(const MetricsReport& r);
/// CSV with columns dim,gv_ref,gv_hyp,distance.
std::string format_gv_csv(const Tensor& gv_ref, const Tensor& gv_hyp);

/// Leading mcc_dims columns of an acoustic matrix.
Tensor mcc_columns(const Tensor& acoustic, std::size_t mcc_dims);
std::vector<double> column(const Tensor& m, std::size_t c);

}  // namespace gmtl

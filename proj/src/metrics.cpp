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

#include "gmtl/metrics.hpp"

#include <cmath>
#include <numbers>

#include "gmtl/errors.hpp"
#include "gmtl/io.hpp"

namespace gmtl {

namespace {

const double kMcdConst = 10.0 / std::numbers::ln10;

bool flag(double v) { return v >= 0.5; }

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ShapeError(std::string(what) + ": length mismatch " + std::to_string(a) + " vs " + std::to_string(b));
  if (a == 0) throw DomainError(std::string(what) + ": empty input");
}

}  // namespace

std::vector<double> mcd_frames(const Tensor& ref, const Tensor& hyp) {
  if (ref.rank() != 2 || ref.shape() != hyp.shape()) {
    throw ShapeError("mcd: shape mismatch " + shape_str(ref.shape()) + " and " + shape_str(hyp.shape()));
  }
  const std::size_t T = ref.dim(0), M = ref.dim(1);
  std::vector<double> out(T);
  for (std::size_t t = 0; t < T; ++t) {
    double s = 0.0;
    for (std::size_t d = 1; d < M; ++d) {
      const double e = ref.at(t, d) - hyp.at(t, d);
      s += e * e;
    }
    out[t] = kMcdConst * std::sqrt(2.0 * s);
  }
  return out;
}

double mcd(const Tensor& ref, const Tensor& hyp) {
  const auto frames = mcd_frames(ref, hyp);
  double s = 0.0;
  for (double v : frames) s += v;
  return s / static_cast<double>(frames.size());
}

F0Error f0_rmse(std::span<const double> ref_lf0, std::span<const double> ref_vuv, std::span<const double> hyp_lf0,
                std::span<const double> hyp_vuv) {
  check_lengths(ref_lf0.size(), ref_vuv.size(), "f0_rmse");
  check_lengths(ref_lf0.size(), hyp_lf0.size(), "f0_rmse");
  check_lengths(ref_lf0.size(), hyp_vuv.size(), "f0_rmse");
  F0Error r;
  double s = 0.0;
  for (std::size_t t = 0; t < ref_lf0.size(); ++t) {
    if (!flag(ref_vuv[t]) || !flag(hyp_vuv[t])) continue;
    const double e = std::exp(ref_lf0[t]) - std::exp(hyp_lf0[t]);
    s += e * e;
    ++r.voiced_frames;
  }
  if (r.voiced_frames == 0) throw DomainError("f0_rmse: empty support (no frame voiced in both streams)");
  r.rmse_hz = std::sqrt(s / static_cast<double>(r.voiced_frames));
  return r;
}

double vuv_error_rate(std::span<const double> ref_vuv, std::span<const double> hyp_vuv) {
  check_lengths(ref_vuv.size(), hyp_vuv.size(), "vuv_error_rate");
  std::size_t wrong = 0;
  for (std::size_t t = 0; t < ref_vuv.size(); ++t) wrong += flag(ref_vuv[t]) != flag(hyp_vuv[t]);
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(ref_vuv.size());
}

Tensor global_variance(std::span<const Tensor> utts) {
  if (utts.empty()) throw DomainError("global_variance: no utterances");
  const std::size_t M = utts[0].dim(1);
  Tensor gv({M}, 0.0);
  for (std::size_t i = 0; i < utts.size(); ++i) {
    const Tensor& u = utts[i];
    if (u.rank() != 2 || u.dim(1) != M) throw ShapeError("global_variance: utterance " + std::to_string(i) + " has shape " + shape_str(u.shape()));
    const std::size_t T = u.dim(0);
    if (T < 2) throw DomainError("global_variance: utterance " + std::to_string(i) + " has fewer than 2 frames");
    for (std::size_t d = 0; d < M; ++d) {
      double mean = 0.0;
      for (std::size_t t = 0; t < T; ++t) mean += u.at(t, d);
      mean /= static_cast<double>(T);
      double var = 0.0;
      for (std::size_t t = 0; t < T; ++t) var += (u.at(t, d) - mean) * (u.at(t, d) - mean);
      gv[d] += var / static_cast<double>(T);
    }
  }
  for (auto& v : gv.data()) v /= static_cast<double>(utts.size());
  return gv;
}

Tensor gv_distance(const Tensor& a, const Tensor& b) {
  if (a.rank() != 1 || a.shape() != b.shape()) {
    throw ShapeError("gv_distance: length mismatch " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::fabs(a[i] - b[i]);
  return out;
}

double MetricsReport::gv_distance_mean() const {
  double s = 0.0;
  for (double v : gv_distance.data()) s += v;
  return s / static_cast<double>(gv_distance.size());
}

double MetricsReport::gv_hyp_mean() const {
  double s = 0.0;
  for (double v : gv_hyp.data()) s += v;
  return s / static_cast<double>(gv_hyp.size());
}

Tensor mcc_columns(const Tensor& m, std::size_t mcc_dims) {
  if (m.rank() != 2 || m.dim(1) < mcc_dims) throw ShapeError("mcc_columns: matrix " + shape_str(m.shape()) + " too narrow");
  const std::size_t T = m.dim(0);
  Tensor out({T, mcc_dims});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t d = 0; d < mcc_dims; ++d) out.at(t, d) = m.at(t, d);
  return out;
}

std::vector<double> column(const Tensor& m, std::size_t c) {
  std::vector<double> out(m.dim(0));
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = m.at(t, c);
  return out;
}

MetricsReport evaluate(std::span<const Tensor> ref, std::span<const Tensor> hyp, std::size_t M) {
  if (ref.size() != hyp.size()) {
    throw ShapeError("evaluate: " + std::to_string(ref.size()) + " reference vs " + std::to_string(hyp.size()) +
                     " hypothesis utterances");
  }
  if (ref.empty()) throw DomainError("evaluate: no utterances");
  const std::size_t A = M + 3;
  MetricsReport r;
  r.utterances = ref.size();
  std::vector<Tensor> ref_mcc, hyp_mcc;
  std::vector<double> rl, rv, hl, hv;
  double mcd_sum = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    if (ref[i].rank() != 2 || ref[i].dim(1) != A || ref[i].shape() != hyp[i].shape()) {
      throw ShapeError("evaluate: utterance " + std::to_string(i) + " misaligned: reference " + shape_str(ref[i].shape()) +
                       ", hypothesis " + shape_str(hyp[i].shape()));
    }
    ref_mcc.push_back(mcc_columns(ref[i], M));
    hyp_mcc.push_back(mcc_columns(hyp[i], M));
    for (double v : mcd_frames(ref_mcc.back(), hyp_mcc.back())) mcd_sum += v;
    const std::size_t T = ref[i].dim(0);
    r.frames_evaluated += T;
    for (std::size_t t = 0; t < T; ++t) {
      rl.push_back(ref[i].at(t, M + 1));
      rv.push_back(ref[i].at(t, M + 2));
      hl.push_back(hyp[i].at(t, M + 1));
      hv.push_back(hyp[i].at(t, M + 2));
    }
  }
  r.mcd_db = mcd_sum / static_cast<double>(r.frames_evaluated);
  const F0Error f0 = f0_rmse(rl, rv, hl, hv);
  r.f0_rmse_hz = f0.rmse_hz;
  r.voiced_frames_evaluated = f0.voiced_frames;
  r.vuv_error_pct = vuv_error_rate(rv, hv);
  r.gv_ref = global_variance(ref_mcc);
  r.gv_hyp = global_variance(hyp_mcc);
  r.gv_distance = gv_distance(r.gv_ref, r.gv_hyp);
  return r;
}

std::string format_report(const MetricsReport& r) {
  KeyValues kv{
      {"mcd_db", format_double(r.mcd_db)},
      {"f0_rmse_hz", format_double(r.f0_rmse_hz)},
      {"vuv_error_pct", format_double(r.vuv_error_pct)},
      {"gv_distance_mean", format_double(r.gv_distance_mean())},
      {"utterances", std::to_string(r.utterances)},
      {"frames_evaluated", std::to_string(r.frames_evaluated)},
      {"voiced_frames_evaluated", std::to_string(r.voiced_frames_evaluated)},
  };
  for (std::size_t d = 0; d < r.gv_distance.size(); ++d) {
    kv["gv_ref." + std::to_string(d)] = format_double(r.gv_ref[d]);
    kv["gv_hyp." + std::to_string(d)] = format_double(r.gv_hyp[d]);
    kv["gv_distance." + std::to_string(d)] = format_double(r.gv_distance[d]);
  }
  return format_key_values(kv);
}

std::string format_gv_csv(const Tensor& gv_ref, const Tensor& gv_hyp) {
  const Tensor dist = gv_distance(gv_ref, gv_hyp);
  std::string out = "dim,gv_ref,gv_hyp,distance\n";
  for (std::size_t d = 0; d < dist.size(); ++d) {
    out += std::to_string(d) + "," + format_double(gv_ref[d]) + "," + format_double(gv_hyp[d]) + "," +
           format_double(dist[d]) + "\n";
  }
  return out;
}

}  // namespace gmtl

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

#include <cmath>
#include <set>

#include "gmtl/data.hpp"
#include "gmtl/errors.hpp"
#include "oracles/frozen.hpp"
#include "oracles/gv_simulation.hpp"
#include "test_util.hpp"

namespace gmtl {
namespace {

bool same_dataset(const Dataset& a, const Dataset& b) {
  if (a.utterances.size() != b.utterances.size() || a.config.to_kv() != b.config.to_kv()) return false;
  for (std::size_t i = 0; i < a.utterances.size(); ++i) {
    const Utterance &u = a.utterances[i], &v = b.utterances[i];
    if (!u.ling.identical(v.ling) || !u.acoustic.identical(v.acoustic) || u.labels != v.labels) return false;
  }
  return true;
}

FormatError::Kind decode_error(const std::vector<std::uint8_t>& bytes, std::string* what = nullptr) {
  try {
    decode_dataset(bytes);
  } catch (const FormatError& e) {
    if (what) *what = e.what();
    return e.kind();
  }
  FAIL("expected FormatError");
  return FormatError::Kind::kIo;
}

CorpusConfig small_config() {
  CorpusConfig c;
  c.utterances = 20;
  c.seed = 99;
  return c;
}

TEST_CASE("corpus generation is deterministic") {
  const CorpusConfig c = small_config();
  const auto [a, ga] = generate_corpus(c);
  const auto [b, gb] = generate_corpus(c);
  CHECK(same_dataset(a, b));
  CHECK(ga.mu.identical(gb.mu));
  CHECK(ga.delta.identical(gb.delta));
  CorpusConfig other = c;
  other.seed = 100;
  CHECK_FALSE(same_dataset(a, generate_corpus(other).first));
}

TEST_CASE("every generated frame satisfies the corpus invariants") {
  CorpusConfig c;
  c.seed = 7;
  const auto [ds, gt] = generate_corpus(c);
  const std::size_t P = c.phonemes;
  REQUIRE(ds.utterances.size() == c.utterances);
  std::size_t unvoiced = 0, voiced = 0;
  for (const Utterance& u : ds.utterances) {
    const std::size_t T = u.frames();
    REQUIRE(T >= c.min_frames);
    REQUIRE(T <= c.max_frames);
    REQUIRE(u.ling.shape() == Shape{T, c.ling_dim()});
    REQUIRE(u.acoustic.shape() == Shape{T, c.acoustic_dim()});
    for (std::size_t t = 0; t < T; ++t) {
      double row = 0.0;
      for (std::size_t p = 0; p < P; ++p) {
        const double v = u.ling.at(t, p);
        REQUIRE((v == 0.0 || v == 1.0));
        row += v;
      }
      REQUIRE(row == 1.0);
      REQUIRE(u.ling.at(t, u.labels[t]) == 1.0);
      for (std::size_t k = P; k < P + 2; ++k) {
        REQUIRE(u.ling.at(t, k) >= 0.0);
        REQUIRE(u.ling.at(t, k) <= 1.0);
      }
      const double prosody = u.ling.at(t, P + 2);
      REQUIRE((prosody == 0.0 || prosody == 1.0));
      const double vuv = u.acoustic.at(t, c.vuv_index());
      REQUIRE((vuv == 0.0 || vuv == 1.0));
      REQUIRE(vuv == static_cast<double>(gt.voiced[u.labels[t]]));
      if (vuv == 0.0) {
        REQUIRE(u.acoustic.at(t, c.lf0_index()) == 0.0);
        ++unvoiced;
      } else {
        REQUIRE(u.acoustic.at(t, c.lf0_index()) > 4.0);
        ++voiced;
      }
      REQUIRE(u.acoustic.all_finite());
    }
    CHECK(u.ling.at(0, P + 1) == 0.0);
    CHECK(u.ling.at(T - 1, P + 1) == 1.0);
  }
  CHECK(unvoiced > 0);
  CHECK(voiced > 0);
}

TEST_CASE("splits are disjoint and follow the configured proportions") {
  CorpusConfig c = small_config();
  c.utterances = 200;
  const Dataset ds = generate_corpus(c).first;
  const auto tr = ds.indices(Split::kTrain), va = ds.indices(Split::kValid), te = ds.indices(Split::kTest);
  CHECK(tr.size() == 160);
  CHECK(va.size() == 20);
  CHECK(te.size() == 20);
  std::set<std::size_t> all(tr.begin(), tr.end());
  all.insert(va.begin(), va.end());
  all.insert(te.begin(), te.end());
  CHECK(all.size() == 200);
  CHECK(ds.split_of(159) == Split::kTrain);
  CHECK(ds.split_of(160) == Split::kValid);
  CHECK(ds.split_of(199) == Split::kTest);
  CHECK(parse_split("valid") == Split::kValid);
  CHECK(std::string(split_name(Split::kTest)) == "test");
  CHECK_THROWS_AS(parse_split("dev"), ConfigError);
}

TEST_CASE("a noiseless unimodal corpus equals the conditional mean exactly") {
  CorpusConfig c = small_config();
  c.sigma = 0.0;
  c.delta_scale = 0.0;
  const auto [ds, gt] = generate_corpus(c);
  for (const Utterance& u : ds.utterances) {
    for (std::size_t t = 0; t < u.frames(); ++t)
      for (std::size_t d = 0; d < c.mcc_dims; ++d) REQUIRE(u.acoustic.at(t, d) == gt.mu.at(u.labels[t], d));
    CHECK(conditional_mean(gt, u.ling).identical(u.acoustic));
  }
}

TEST_CASE("gv oracle examples") {
  SUBCASE("single phoneme with unit mode offset") {
    GroundTruth gt;
    gt.mu = Tensor({1, 5}, 0.0);
    gt.delta = Tensor({1, 2}, 1.0);
    gt.voiced = {1};
    gt.sigma = 0.0;
    const GvOracle o = natural_gv_oracle(gt, uniform_marginal(1));
    for (std::size_t d = 0; d < 2; ++d) {
      CHECK(o.gv_natural[d] == 1.0);
      CHECK(o.gv_condmean[d] == 0.0);
    }
  }
  SUBCASE("noise-only gap") {
    CorpusConfig c;
    c.delta_scale = 0.0;
    c.sigma = 0.3;
    const GroundTruth gt = generate_ground_truth(c);
    for (const auto& w : {uniform_marginal(c.phonemes), std::vector<double>{0.3, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1}}) {
      const GvOracle o = natural_gv_oracle(gt, w);
      for (std::size_t d = 0; d < c.mcc_dims; ++d) CHECK(o.gv_natural[d] - o.gv_condmean[d] == doctest::Approx(0.09).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(natural_gv_oracle(generate_ground_truth(CorpusConfig{}), uniform_marginal(3)), ShapeError);
}

TEST_CASE("gv oracle agrees with a Monte-Carlo simulation") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CorpusConfig c;
    c.seed = seed;
    Rng rng(seed, Stream::kNoise);
    c.phonemes = test::pick(rng, 2, 10);
    c.mcc_dims = test::pick(rng, 1, 6);
    c.sigma = rng.uniform(0.05, 0.5);
    c.delta_scale = rng.uniform(0.1, 1.0);
    const GroundTruth gt = generate_ground_truth(c);
    std::vector<double> w(c.phonemes);
    double total = 0.0;
    for (double& v : w) total += (v = rng.uniform(0.2, 1.0));
    for (double& v : w) v /= total;
    std::vector<std::vector<double>> mu(c.phonemes), delta(c.phonemes);
    for (std::size_t p = 0; p < c.phonemes; ++p)
      for (std::size_t d = 0; d < c.mcc_dims; ++d) {
        mu[p].push_back(gt.mu.at(p, d));
        delta[p].push_back(gt.delta.at(p, d));
      }
    const auto sim = oracle::simulate_gv(mu, delta, c.sigma, w, 100000, static_cast<unsigned>(seed));
    const GvOracle o = natural_gv_oracle(gt, w);
    for (std::size_t d = 0; d < c.mcc_dims; ++d) {
      CAPTURE(seed);
      CAPTURE(d);
      CHECK(std::fabs(sim.natural[d] - o.gv_natural[d]) <= 0.05 * o.gv_natural[d]);
      CHECK(std::fabs(sim.condmean[d] - o.gv_condmean[d]) <= 0.05 * o.gv_condmean[d]);
    }
  }
}

TEST_CASE("conditional-mean outputs fall short of natural gv by the hidden-mode and noise variance") {
  CorpusConfig c;
  c.utterances = 300;
  c.seed = 11;
  const auto [ds, gt] = generate_corpus(c);
  const std::size_t M = c.mcc_dims;
  std::vector<double> s1(M, 0.0), s2(M, 0.0), r1(M, 0.0), r2(M, 0.0), dd(M, 0.0);
  double n = 0.0;
  for (std::size_t i : ds.indices(Split::kTrain)) {
    const Utterance& u = ds.utterances[i];
    const Tensor cm = conditional_mean(gt, u.ling);
    for (std::size_t t = 0; t < u.frames(); ++t) {
      n += 1.0;
      for (std::size_t d = 0; d < M; ++d) {
        s1[d] += cm.at(t, d);
        s2[d] += cm.at(t, d) * cm.at(t, d);
        r1[d] += u.acoustic.at(t, d);
        r2[d] += u.acoustic.at(t, d) * u.acoustic.at(t, d);
        dd[d] += gt.delta.at(u.labels[t], d) * gt.delta.at(u.labels[t], d);
      }
    }
  }
  const GvOracle o = natural_gv_oracle(gt, empirical_marginal(ds, Split::kTrain));
  for (std::size_t d = 0; d < M; ++d) {
    CAPTURE(d);
    const double gv_cm = s2[d] / n - (s1[d] / n) * (s1[d] / n);
    const double gv_real = r2[d] / n - (r1[d] / n) * (r1[d] / n);
    const double expected_gap = dd[d] / n + c.sigma * c.sigma;
    CHECK(std::fabs((o.gv_natural[d] - gv_cm) - expected_gap) <= 0.10 * expected_gap);
    CHECK(std::fabs((gv_real - gv_cm) - expected_gap) <= 0.10 * expected_gap);
    CHECK(gv_cm == doctest::Approx(o.gv_condmean[d]).epsilon(1e-9));
  }
}

TEST_CASE("conditional mean is the MSE optimum on the hidden-mode dims") {
  CorpusConfig c;
  c.utterances = 100;
  c.seed = 12;
  const auto [ds, gt] = generate_corpus(c);
  double err = 0.0, n = 0.0, dd = 0.0;
  for (const Utterance& u : ds.utterances) {
    const Tensor cm = conditional_mean(gt, u.ling);
    for (std::size_t t = 0; t < u.frames(); ++t)
      for (std::size_t d = 0; d < c.mcc_dims; ++d) {
        err += std::pow(cm.at(t, d) - u.acoustic.at(t, d), 2);
        dd += gt.delta.at(u.labels[t], d) * gt.delta.at(u.labels[t], d);
        n += 1.0;
      }
  }
  const double expected = c.sigma * c.sigma + dd / n;
  CHECK(err / n == doctest::Approx(expected).epsilon(0.05));
  CHECK_THROWS_AS(conditional_mean(gt, Tensor({3, 4}, 0.0)), ShapeError);
}

TEST_CASE("dataset file round trip") {
  const test::TempDir dir("data");
  Dataset ds = generate_corpus(small_config()).first;
  ds.extra["note.kind"] = "unit";
  write_dataset(ds, dir / "c.gspd");
  const Dataset back = read_dataset(dir / "c.gspd");
  CHECK(same_dataset(ds, back));
  CHECK(back.extra == ds.extra);
  CHECK(encode_dataset(back) == encode_dataset(ds));
}

TEST_CASE("dataset file guards") {
  const Dataset ds = generate_corpus(small_config()).first;
  const std::vector<std::uint8_t> good = encode_dataset(ds);

  SUBCASE("corrupted magic") {
    auto bad = good;
    bad[1] = 'X';
    CHECK(decode_error(bad) == FormatError::Kind::kVersionMismatch);
  }
  SUBCASE("unknown version") {
    auto bad = good;
    bad[4] = 9;
    CHECK(decode_error(bad) == FormatError::Kind::kVersionMismatch);
  }
  SUBCASE("truncated inside an utterance matrix") {
    for (std::size_t k : {0u, 3u, 17u}) {
      Dataset head = ds;
      head.utterances.resize(k);
      // Start of utterance k: its header, then part of the ling matrix.
      const std::size_t start = encode_dataset(head).size() - 4;
      std::vector<std::uint8_t> cut(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(start + 12 + 100));
      std::string what;
      CHECK(decode_error(cut, &what) == FormatError::Kind::kTruncated);
      CHECK(what.find("utterance " + std::to_string(k)) != std::string::npos);
    }
  }
  SUBCASE("flipped payload byte") {
    auto bad = good;
    bad[bad.size() / 2] ^= 0x10;
    CHECK(decode_error(bad) == FormatError::Kind::kChecksum);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_dataset("/nonexistent/dir/x.gspd"), FormatError);
  }
}

Dataset toy_dataset(const std::vector<std::size_t>& lengths) {
  Dataset ds;
  ds.config.train_fraction = 1.0;
  ds.config.valid_fraction = 0.0;
  double v = 0.0;
  for (std::size_t T : lengths) {
    Utterance u;
    u.ling = Tensor({T, 2});
    u.acoustic = Tensor({T, 3});
    for (double& x : u.ling.storage()) x = (v += 1.0);
    for (double& x : u.acoustic.storage()) x = (v += 1.0);
    for (std::size_t t = 0; t < T; ++t) u.labels.push_back(static_cast<std::uint32_t>(t % 5));
    ds.utterances.push_back(std::move(u));
  }
  return ds;
}

TEST_CASE("window count matches the counting formula") {
  const Dataset ds = toy_dataset({20, 13, 9});
  CHECK(enumerate_windows(ds, Split::kTrain, 9).size() == oracle::kWindowsToyW9);
  CHECK(enumerate_windows(ds, Split::kTrain, 4).size() == oracle::kWindowsToyW4);
  CHECK(enumerate_windows(ds, Split::kTrain, 1).size() == oracle::kWindowsToyW1);
  CHECK(window_stride(9) == 4);
  CHECK(window_stride(1) == 1);
  CHECK_THROWS_AS(enumerate_windows(ds, Split::kTrain, 10), ShapeError);
  CHECK_THROWS_AS(enumerate_windows(ds, Split::kTrain, 0), ShapeError);
}

TEST_CASE("batches are contiguous slices labelled by the center frame") {
  const Dataset ds = toy_dataset({20, 13, 9, 31});
  const std::size_t W = 5;
  BatchStream s(ds, Split::kTrain, 4, W, Rng(3, Stream::kBatchGenerator));
  for (int i = 0; i < 10; ++i) {
    const Batch b = s.next();
    REQUIRE(b.ling.shape() == Shape{4, W, 2});
    REQUIRE(b.acoustic.shape() == Shape{4, W, 3});
    for (std::size_t k = 0; k < 4; ++k) {
      const WindowRef& w = b.windows[k];
      const Utterance& u = ds.utterances[w.utterance];
      for (std::size_t j = 0; j < W; ++j) {
        for (std::size_t l = 0; l < 2; ++l) REQUIRE(b.ling[(k * W + j) * 2 + l] == u.ling.at(w.start + j, l));
        for (std::size_t a = 0; a < 3; ++a) REQUIRE(b.acoustic[(k * W + j) * 3 + a] == u.acoustic.at(w.start + j, a));
      }
      CHECK(b.labels[k] == u.labels[w.start + W / 2]);
      for (std::size_t l = 0; l < 2; ++l) CHECK(b.center_ling.at(k, l) == u.ling.at(w.start + W / 2, l));
    }
  }
}

TEST_CASE("batch order is seeded and each epoch visits every window once") {
  const Dataset ds = toy_dataset({20, 13, 9, 31});
  const std::size_t W = 3;
  BatchStream a(ds, Split::kTrain, 1, W, Rng(8, Stream::kBatchGenerator));
  BatchStream b(ds, Split::kTrain, 1, W, Rng(8, Stream::kBatchGenerator));
  const std::size_t n = a.windows_per_epoch();
  auto key = [](const WindowRef& w) { return std::make_pair(w.utterance, w.start); };
  std::vector<std::pair<std::size_t, std::size_t>> e0, e1;
  for (std::size_t i = 0; i < 2 * n; ++i) {
    const Batch x = a.next(), y = b.next();
    REQUIRE(x.ling.identical(y.ling));
    (i < n ? e0 : e1).push_back(key(x.windows[0]));
  }
  CHECK(std::set(e0.begin(), e0.end()).size() == n);
  CHECK(std::set(e1.begin(), e1.end()).size() == n);
  CHECK(e0 != e1);
  CHECK(a.batch(5).ling.identical(b.batch(5).ling));
  BatchStream c(ds, Split::kTrain, 1, W, Rng(9, Stream::kBatchGenerator));
  std::vector<std::pair<std::size_t, std::size_t>> other;
  for (std::size_t i = 0; i < n; ++i) other.push_back(key(c.next().windows[0]));
  CHECK(other != e0);
  CHECK_THROWS_AS(BatchStream(ds, Split::kTrain, 0, W, Rng(1)), ShapeError);
  CHECK_THROWS_AS(BatchStream(ds, Split::kTrain, 2, 10, Rng(1)), ShapeError);
}

TEST_CASE("corpus config key=value round trip and validation") {
  CorpusConfig c;
  c.sigma = 0.125;
  c.phonemes = 5;
  CHECK(CorpusConfig::from_kv(c.to_kv()).to_kv() == c.to_kv());
  KeyValues kv = c.to_kv();
  kv["model.other"] = "ignored";
  CHECK(CorpusConfig::from_kv(kv).phonemes == 5);
  kv["corpus.bogus"] = "1";
  CHECK_THROWS_AS(CorpusConfig::from_kv(kv), ConfigError);
  CorpusConfig bad;
  bad.phonemes = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = CorpusConfig{};
  bad.sigma = -0.1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = CorpusConfig{};
  bad.min_frames = 50;
  bad.max_frames = 40;
  CHECK_THROWS_AS(generate_corpus(bad), ConfigError);
}

}  // namespace
}  // namespace gmtl

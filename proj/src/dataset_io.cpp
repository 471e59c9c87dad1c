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

#include <cstring>

#include "gmtl/data.hpp"
#include "gmtl/errors.hpp"

namespace gmtl {

namespace {

constexpr char kMagic[4] = {'G', 'S', 'P', 'D'};

void check_utterance(const Utterance& u, std::size_t index) {
  const std::size_t T = u.frames();
  if (T == 0 || u.ling.rank() != 2 || u.acoustic.rank() != 2 || u.ling.dim(0) != T || u.acoustic.dim(0) != T) {
    throw ShapeError("utterance " + std::to_string(index) + ": inconsistent frame counts");
  }
}

}  // namespace

std::vector<std::uint8_t> encode_dataset(const Dataset& ds) {
  KeyValues kv = ds.extra;
  for (auto& [k, v] : ds.config.to_kv()) kv[k] = v;
  ByteWriter w;
  w.bytes(std::string_view(kMagic, 4));
  w.u32(kDatasetFormatVersion);
  w.text(format_key_values(kv));
  w.u32(static_cast<std::uint32_t>(ds.utterances.size()));
  for (std::size_t i = 0; i < ds.utterances.size(); ++i) {
    const Utterance& u = ds.utterances[i];
    check_utterance(u, i);
    w.u32(static_cast<std::uint32_t>(u.frames()));
    w.u32(static_cast<std::uint32_t>(u.ling.dim(1)));
    w.u32(static_cast<std::uint32_t>(u.acoustic.dim(1)));
    for (double v : u.ling.data()) w.f64(v);
    for (double v : u.acoustic.data()) w.f64(v);
    for (auto l : u.labels) w.u32(l);
  }
  auto& buf = w.buffer();
  const std::uint32_t crc = crc32(buf.data() + 8, buf.size() - 8);
  w.u32(crc);
  return std::move(buf);
}

Dataset decode_dataset(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes.data(), bytes.size());
  r.set_context("header");
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError(FormatError::Kind::kVersionMismatch, "not a GSPD dataset (bad magic)");
  }
  r.bytes(4);
  const std::uint32_t version = r.u32();
  if (version != kDatasetFormatVersion) {
    throw FormatError(FormatError::Kind::kVersionMismatch, "unsupported GSPD version " + std::to_string(version) +
                                                               " (expected " +
                                                               std::to_string(kDatasetFormatVersion) + ")");
  }
  r.set_context("config block");
  const std::string text = r.text();
  KeyValues kv;
  try {
    kv = parse_key_values(text);
  } catch (const ConfigError& e) {
    throw FormatError(FormatError::Kind::kMalformed, std::string("embedded config: ") + e.what());
  }
  Dataset ds;
  for (auto& [k, v] : kv)
    if (k.rfind("corpus.", 0) != 0) ds.extra.emplace(k, v);
  try {
    ds.config = CorpusConfig::from_kv(kv);
  } catch (const ConfigError& e) {
    throw FormatError(FormatError::Kind::kMalformed, std::string("embedded config: ") + e.what());
  }
  r.set_context("utterance count");
  const std::uint32_t count = r.u32();
  ds.utterances.reserve(std::min<std::size_t>(count, r.remaining() / 12));
  for (std::uint32_t i = 0; i < count; ++i) {
    r.set_context("utterance " + std::to_string(i));
    const std::size_t T = r.u32(), L = r.u32(), A = r.u32();
    if (T == 0 || L == 0 || A == 0) {
      throw FormatError(FormatError::Kind::kMalformed, "utterance " + std::to_string(i) + ": zero dimension");
    }
    const std::size_t need = T * (L + A) * 8 + T * 4;
    if (need > r.remaining()) {
      throw FormatError(FormatError::Kind::kTruncated, "truncated file in utterance " + std::to_string(i));
    }
    Utterance u;
    u.ling = Tensor({T, L});
    u.acoustic = Tensor({T, A});
    r.f64_array(u.ling.data().data(), T * L);
    r.f64_array(u.acoustic.data().data(), T * A);
    u.labels.resize(T);
    for (auto& l : u.labels) l = r.u32();
    ds.utterances.push_back(std::move(u));
  }
  r.set_context("checksum trailer");
  const std::size_t payload_end = r.position();
  const std::uint32_t stored = r.u32();
  if (r.remaining() != 0) throw FormatError(FormatError::Kind::kMalformed, "trailing bytes after checksum");
  if (crc32(bytes.data() + 8, payload_end - 8) != stored) {
    throw FormatError(FormatError::Kind::kChecksum, "GSPD checksum mismatch");
  }
  return ds;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) { write_file(path, encode_dataset(ds)); }

Dataset read_dataset(const std::filesystem::path& path) { return decode_dataset(read_file(path)); }

}  // namespace gmtl

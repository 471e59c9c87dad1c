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

// Little-endian binary encoding, CRC-32 and key=value text helpers shared by
// the dataset and checkpoint formats.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace gmtl {

std::uint32_t crc32(const std::uint8_t* data, std::size_t size);

class ByteWriter {
 public:
  void u32(std::uint32_t v);
  void f64(double v);
  void bytes(std::string_view s);
  /// u32 length prefix then the bytes.
  void text(std::string_view s);

  std::vector<std::uint8_t>& buffer() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

/// Cursor over a byte buffer. Reads past the end throw FormatError(kTruncated)
/// carrying the current context string.
class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::uint32_t u32();
  double f64();
  std::string bytes(std::size_t n);
  std::string text();
  void f64_array(double* out, std::size_t n);

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return size_ - pos_; }
  void set_context(std::string ctx) { context_ = std::move(ctx); }

 private:
  void need(std::size_t n);

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string context_;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

using KeyValues = std::map<std::string, std::string>;

/// Parses "key=value" lines; blank lines and lines starting with '#' are skipped.
KeyValues parse_key_values(std::string_view text);
std::string format_key_values(const KeyValues& kv);

/// Shortest decimal text that round-trips a double exactly.
std::string format_double(double v);

double parse_double(const std::string& key, const std::string& value);
std::uint64_t parse_u64(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);

}  // namespace gmtl

// Copyright 2026 The mfccvoc Authors. All Rights Reserved.
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

// Little-endian byte packing shared by every on-disk format.

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "mfccvoc/errors.hpp"

namespace mfccvoc::io {

class ByteWriter {
 public:
  void put_bytes(std::string_view bytes) { buffer_.append(bytes); }

  void put_u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) buffer_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }

  void put_u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buffer_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }

  void put_u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buffer_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }

  void put_i16(std::int16_t v) { put_u16(static_cast<std::uint16_t>(v)); }

  void put_f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put_u32(bits);
  }

  void put_f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put_u64(bits);
  }

  const std::string& bytes() const { return buffer_; }
  std::string take() { return std::move(buffer_); }

 private:
  std::string buffer_;
};

// Reads from a borrowed buffer. Every accessor names what it was reading so
// truncation errors point at the offending field.
class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }
  bool at_end() const { return pos_ == data_.size(); }

  std::string_view get_bytes(std::size_t n, std::string_view what) {
    require(n, what);
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  void skip(std::size_t n, std::string_view what) { get_bytes(n, what); }

  std::uint16_t get_u16(std::string_view what) {
    auto b = get_bytes(2, what);
    return static_cast<std::uint16_t>(byte(b, 0) | (byte(b, 1) << 8));
  }

  std::uint32_t get_u32(std::string_view what) {
    auto b = get_bytes(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | byte(b, i);
    return v;
  }

  std::uint64_t get_u64(std::string_view what) {
    auto b = get_bytes(8, what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | byte(b, i);
    return v;
  }

  std::int16_t get_i16(std::string_view what) { return static_cast<std::int16_t>(get_u16(what)); }

  float get_f32(std::string_view what) {
    std::uint32_t bits = get_u32(what);
    float v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }

  double get_f64(std::string_view what) {
    std::uint64_t bits = get_u64(what);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }

 private:
  static std::uint32_t byte(std::string_view b, int i) {
    return static_cast<std::uint8_t>(b[static_cast<std::size_t>(i)]);
  }

  void require(std::size_t n, std::string_view what) const {
    if (remaining() < n) {
      throw FormatError("truncated input while reading " + std::string(what) + " (need " +
                        std::to_string(n) + " bytes, have " + std::to_string(remaining()) + ")");
    }
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

// Whole-file helpers. write_file_atomic writes to a sibling temporary and
// renames it over the destination.
std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, std::string_view bytes);

}  // namespace mfccvoc::io

// Copyright 2026 The EAsT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EAST_SRC_BINARY_IO_H_
#define EAST_SRC_BINARY_IO_H_

// Little-endian encoding helpers shared by the container and checkpoint
// formats.

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "east/errors.h"

namespace east::internal {

class ByteWriter {
 public:
  void Bytes(std::string_view raw) { out_.insert(out_.end(), raw.begin(), raw.end()); }
  void U8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void U32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void U64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void F32(float v) { U32(std::bit_cast<std::uint32_t>(v)); }
  void F64(double v) { U64(std::bit_cast<std::uint64_t>(v)); }

  const std::string& buffer() const { return out_; }
  std::string Release() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::uint64_t offset() const { return offset_; }
  bool AtEnd() const { return offset_ == data_.size(); }

  std::string_view Bytes(std::size_t n, const char* what) {
    Need(n, what);
    std::string_view view = data_.substr(offset_, n);
    offset_ += n;
    return view;
  }
  std::uint8_t U8(const char* what) {
    Need(1, what);
    return static_cast<std::uint8_t>(data_[offset_++]);
  }
  std::uint32_t U32(const char* what) {
    Need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[offset_ + i])) << (8 * i);
    }
    offset_ += 4;
    return v;
  }
  std::uint64_t U64(const char* what) {
    Need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[offset_ + i])) << (8 * i);
    }
    offset_ += 8;
    return v;
  }
  float F32(const char* what) { return std::bit_cast<float>(U32(what)); }
  double F64(const char* what) { return std::bit_cast<double>(U64(what)); }

  // Throws FormatError unless at least n more bytes are available.
  void Need(std::uint64_t n, const char* what) const {
    if (data_.size() - offset_ < n) {
      throw FormatError(offset_, std::string("truncated input while reading ") + what);
    }
  }

 private:
  std::string_view data_;
  std::uint64_t offset_ = 0;
};

std::string ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, std::string_view bytes);

}  // namespace east::internal

#endif  // EAST_SRC_BINARY_IO_H_

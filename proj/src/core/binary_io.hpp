// Copyright 2026 The IRNet Authors. All Rights Reserved.
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

// Little-endian record encoding shared by checkpoints and the patch cache.

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "irnet/error.hpp"
#include "irnet/tensor.hpp"

namespace irnet::detail {

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) {
      throw Error(ErrorCode::kIo, "cannot open " + path.string() +
                                      " for writing");
    }
  }

  void bytes(const void* data, size_t len) {
    out_.write(static_cast<const char*>(data),
               static_cast<std::streamsize>(len));
  }

  void u32(uint32_t v) {
    const std::array<unsigned char, 4> b = {
        static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
        static_cast<unsigned char>(v >> 16),
        static_cast<unsigned char>(v >> 24)};
    bytes(b.data(), b.size());
  }

  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }

  void floats(std::span<const float> values) {
    for (float f : values) {
      uint32_t bits = 0;
      std::memcpy(&bits, &f, sizeof bits);
      u32(bits);
    }
  }

  /// name, rank, dims, raw values.
  void tensor_record(const std::string& name,
                     const std::vector<int64_t>& dims, const Tensor& t) {
    str(name);
    u32(static_cast<uint32_t>(dims.size()));
    for (int64_t d : dims) u32(static_cast<uint32_t>(d));
    floats(t.data());
  }

  void finish() {
    out_.flush();
    if (!out_) throw Error(ErrorCode::kIo, "write failed for " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
    buffer_.assign(std::istreambuf_iterator<char>(in),
                   std::istreambuf_iterator<char>());
  }

  bool at_end() const { return pos_ == buffer_.size(); }
  const std::filesystem::path& path() const { return path_; }

  void bytes(void* dst, size_t len) {
    if (buffer_.size() - pos_ < len) {
      throw Error(ErrorCode::kFormat, path_.string() + ": truncated file");
    }
    std::memcpy(dst, buffer_.data() + pos_, len);
    pos_ += len;
  }

  uint32_t u32() {
    std::array<unsigned char, 4> b{};
    bytes(b.data(), b.size());
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) |
           (static_cast<uint32_t>(b[3]) << 24);
  }

  std::string str(size_t max_len = 1u << 20) {
    const uint32_t len = u32();
    if (len > max_len) {
      throw Error(ErrorCode::kFormat,
                  path_.string() + ": implausible string length");
    }
    std::string s(len, '\0');
    bytes(s.data(), len);
    return s;
  }

  void floats(std::span<float> out) {
    for (float& f : out) {
      const uint32_t bits = u32();
      std::memcpy(&f, &bits, sizeof f);
    }
  }

  struct Record {
    std::string name;
    std::vector<int64_t> dims;
  };

  /// Reads the header of a tensor record; the caller then reads values.
  Record record_header() {
    Record r;
    r.name = str(4096);
    const uint32_t rank = u32();
    if (rank == 0 || rank > 4) {
      throw Error(ErrorCode::kFormat, path_.string() + ": record '" + r.name +
                                          "' has invalid rank " +
                                          std::to_string(rank));
    }
    for (uint32_t i = 0; i < rank; ++i) r.dims.push_back(u32());
    return r;
  }

 private:
  std::filesystem::path path_;
  std::vector<char> buffer_;
  size_t pos_ = 0;
};

inline Shape shape_from_dims(const std::vector<int64_t>& dims) {
  // Rank-1 records are biases stored as (k,1,1,1); other ranks are
  // left-padded with ones.
  if (dims.size() == 1) return {dims[0], 1, 1, 1};
  Shape s{1, 1, 1, 1};
  int64_t* fields[4] = {&s.n, &s.c, &s.h, &s.w};
  const size_t offset = 4 - dims.size();
  for (size_t i = 0; i < dims.size(); ++i) *fields[offset + i] = dims[i];
  return s;
}

}  // namespace irnet::detail

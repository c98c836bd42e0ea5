// Copyright 2026 The lgrln Authors
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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lgrln/tensor.hpp"

namespace lgrln {

// "LGRT" tensor blobs:
//
//   bytes 0..3  magic 'L' 'G' 'R' 'T'
//   byte  4     version (1)
//   byte  5     dtype (1 = f32, 2 = f64, 3 = u8)
//   byte  6     rank
//   byte  7     reserved, written as 0
//   then rank little-endian u32 extents, then the row-major payload in
//   little-endian element order.

enum class DType : std::uint8_t { kF32 = 1, kF64 = 2, kU8 = 3 };

inline constexpr std::uint8_t kLgrtVersion = 1;

struct Blob {
  DType dtype = DType::kF64;
  Tensor tensor;
};

std::vector<std::uint8_t> encode_lgrt(const Tensor& tensor, DType dtype);
Blob decode_lgrt(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>");

void write_lgrt(const std::filesystem::path& path, const Tensor& tensor, DType dtype);
Blob read_lgrt(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace lgrln

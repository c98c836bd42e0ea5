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

#include "lgrln/lgrt.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "lgrln/error.hpp"

namespace lgrln {

namespace {

constexpr std::uint8_t kMagic[4] = {0x4C, 0x47, 0x52, 0x54};
constexpr std::size_t kHeaderBytes = 8;

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

template <typename U>
U get_le(const std::uint8_t* p) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(p[i]) << (8 * i);
  return value;
}

std::size_t element_bytes(DType dtype) {
  switch (dtype) {
    case DType::kF32: return 4;
    case DType::kF64: return 8;
    case DType::kU8: return 1;
  }
  return 0;
}

}  // namespace

std::vector<std::uint8_t> encode_lgrt(const Tensor& tensor, DType dtype) {
  if (tensor.rank() > 255) throw DimensionError("LGRT rank limited to 255");
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + 4 * tensor.rank() + element_bytes(dtype) * tensor.numel());
  for (std::uint8_t b : kMagic) out.push_back(b);
  out.push_back(kLgrtVersion);
  out.push_back(static_cast<std::uint8_t>(dtype));
  out.push_back(static_cast<std::uint8_t>(tensor.rank()));
  out.push_back(0);
  for (std::size_t extent : tensor.shape()) {
    if (extent > 0xFFFFFFFFu) throw DimensionError("LGRT extent exceeds u32");
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(extent));
  }
  for (double v : tensor.data()) {
    switch (dtype) {
      case DType::kF32:
        put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        break;
      case DType::kF64:
        put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
        break;
      case DType::kU8:
        if (!(v >= 0.0 && v <= 255.0) || std::floor(v) != v) {
          throw ContractError("value " + std::to_string(v) + " is not representable as u8");
        }
        out.push_back(static_cast<std::uint8_t>(v));
        break;
    }
  }
  return out;
}

Blob decode_lgrt(std::span<const std::uint8_t> bytes, const std::string& origin) {
  auto fail = [&](const std::string& why) { return LoadError(origin + ": " + why); };
  if (bytes.size() < kHeaderBytes) throw fail("truncated LGRT header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw fail("bad LGRT magic");
  if (bytes[4] != kLgrtVersion) throw fail("unsupported LGRT version " + std::to_string(bytes[4]));
  const std::uint8_t code = bytes[5];
  if (code < 1 || code > 3) throw fail("unknown LGRT dtype " + std::to_string(code));
  const DType dtype = static_cast<DType>(code);
  const std::size_t rank = bytes[6];
  std::size_t offset = kHeaderBytes;
  if (bytes.size() < offset + 4 * rank) throw fail("truncated LGRT extents");
  Shape shape(rank);
  for (std::size_t i = 0; i < rank; ++i, offset += 4) {
    shape[i] = get_le<std::uint32_t>(bytes.data() + offset);
  }
  const std::size_t n = shape_numel(shape);
  const std::size_t width = element_bytes(dtype);
  if (bytes.size() != offset + n * width) {
    throw fail("payload holds " + std::to_string(bytes.size() - offset) + " bytes, expected " +
               std::to_string(n * width) + " for shape " + shape_string(shape));
  }
  std::vector<double> values(n);
  const std::uint8_t* p = bytes.data() + offset;
  for (std::size_t i = 0; i < n; ++i, p += width) {
    switch (dtype) {
      case DType::kF32: values[i] = std::bit_cast<float>(get_le<std::uint32_t>(p)); break;
      case DType::kF64: values[i] = std::bit_cast<double>(get_le<std::uint64_t>(p)); break;
      case DType::kU8: values[i] = *p; break;
    }
  }
  return Blob{dtype, Tensor(std::move(shape), std::move(values))};
}

void write_lgrt(const std::filesystem::path& path, const Tensor& tensor, DType dtype) {
  write_file_atomic(path, encode_lgrt(tensor, dtype));
}

Blob read_lgrt(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(path.string() + ": cannot open blob");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_lgrt(bytes, path.string());
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(tmp.string() + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(tmp.string() + ": write failed");
  }
  std::filesystem::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span<const std::uint8_t>(
                              reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace lgrln

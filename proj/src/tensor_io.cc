/* Copyright 2026 The ProxyForge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "proxyforge/tensor_io.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "proxyforge/error.h"

namespace proxyforge {
namespace {

constexpr uint8_t kMagic[4] = {'T', 'N', 'S', 'R'};
constexpr uint8_t kVersion = 0x01;

static_assert(std::endian::native == std::endian::little,
              "payload encoding assumes a little-endian host");

void PutU32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t GetU32(std::span<const uint8_t> bytes, std::size_t at) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[at + i]) << (8 * i);
  return v;
}

void Need(std::span<const uint8_t> bytes, std::size_t at, std::size_t n) {
  Require(at + n <= bytes.size(), ErrorCode::kFormat,
          "truncated tensor record");
}

}  // namespace

std::vector<uint8_t> EncodeTensor(const Tensor& tensor) {
  std::vector<uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(kVersion);
  out.push_back(static_cast<uint8_t>(tensor.dtype()));
  out.push_back(static_cast<uint8_t>(tensor.rank()));
  for (uint32_t d : tensor.dims()) PutU32(out, d);
  if (tensor.dtype() == DType::kFloat32) {
    auto f = tensor.floats();
    const std::size_t at = out.size();
    out.resize(at + f.size() * sizeof(float));
    std::memcpy(out.data() + at, f.data(), f.size() * sizeof(float));
  } else {
    auto b = tensor.bytes();
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

Tensor DecodeTensor(std::span<const uint8_t> bytes, std::size_t* offset) {
  std::size_t at = *offset;
  Need(bytes, at, 7);
  Require(std::memcmp(bytes.data() + at, kMagic, 4) == 0, ErrorCode::kFormat,
          "bad tensor magic");
  Require(bytes[at + 4] == kVersion, ErrorCode::kFormat,
          "unsupported tensor version " + std::to_string(bytes[at + 4]));
  const uint8_t dtype = bytes[at + 5];
  Require(dtype == 0x00 || dtype == 0x01, ErrorCode::kFormat,
          "unknown tensor dtype " + std::to_string(dtype));
  const uint8_t rank = bytes[at + 6];
  at += 7;
  Need(bytes, at, 4u * rank);
  std::vector<uint32_t> dims(rank);
  std::size_t count = 1;
  for (uint8_t i = 0; i < rank; ++i) {
    dims[i] = GetU32(bytes, at);
    Require(dims[i] > 0, ErrorCode::kFormat, "tensor has a zero extent");
    count *= dims[i];
    at += 4;
  }
  Tensor out;
  if (dtype == 0x00) {
    Need(bytes, at, count * sizeof(float));
    std::vector<float> values(count);
    std::memcpy(values.data(), bytes.data() + at, count * sizeof(float));
    at += count * sizeof(float);
    out = Tensor::Float32(std::move(dims), std::move(values));
  } else {
    Need(bytes, at, count);
    std::vector<uint8_t> values(bytes.begin() + at, bytes.begin() + at + count);
    at += count;
    out = Tensor::Uint8(std::move(dims), std::move(values));
  }
  *offset = at;
  return out;
}

Tensor DecodeTensor(std::span<const uint8_t> bytes) {
  std::size_t offset = 0;
  Tensor t = DecodeTensor(bytes, &offset);
  Require(offset == bytes.size(), ErrorCode::kFormat,
          "trailing bytes after tensor record");
  return t;
}

std::vector<uint8_t> ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  Require(in.good(), ErrorCode::kIo, "cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  Require(!in.bad(), ErrorCode::kIo, "read failed: " + path.string());
  return bytes;
}

void WriteFileBytes(const std::filesystem::path& path,
                    std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(out.good(), ErrorCode::kIo, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  Require(out.good(), ErrorCode::kIo, "write failed: " + path.string());
}

void WriteTensorFile(const std::filesystem::path& path, const Tensor& tensor) {
  WriteFileBytes(path, EncodeTensor(tensor));
}

Tensor ReadTensorFile(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  try {
    return DecodeTensor(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace proxyforge

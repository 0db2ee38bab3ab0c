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

#ifndef PROXYFORGE_TENSOR_IO_H_
#define PROXYFORGE_TENSOR_IO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "proxyforge/tensor.h"

namespace proxyforge {

// ".ten" layout: "TNSR", version 0x01, dtype byte (0x00 float32, 0x01
// uint8), rank byte, rank x u32 LE extents, then the row-major payload in
// little-endian order.
std::vector<uint8_t> EncodeTensor(const Tensor& tensor);

// Decodes one record starting at *offset and advances it past the record.
Tensor DecodeTensor(std::span<const uint8_t> bytes, std::size_t* offset);
Tensor DecodeTensor(std::span<const uint8_t> bytes);

void WriteTensorFile(const std::filesystem::path& path, const Tensor& tensor);
Tensor ReadTensorFile(const std::filesystem::path& path);

std::vector<uint8_t> ReadFileBytes(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path,
                    std::span<const uint8_t> bytes);

}  // namespace proxyforge

#endif  // PROXYFORGE_TENSOR_IO_H_

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

#ifndef PROXYFORGE_IMAGE_H_
#define PROXYFORGE_IMAGE_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace proxyforge {

// 8-bit RGB image, interleaved H x W x 3.
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> pixels;

  // HWC floats scaled to [-0.5, 0.5].
  std::vector<float> ToNetworkInput() const;

  bool operator==(const RgbImage& other) const = default;
};

// Binary PPM (P6, maxval 255).
std::vector<uint8_t> EncodePpm(const RgbImage& image);
RgbImage DecodePpm(std::span<const uint8_t> bytes);
void WritePpm(const std::filesystem::path& path, const RgbImage& image);
RgbImage ReadPpm(const std::filesystem::path& path);
// (height, width) from the header only.
std::pair<int, int> ReadPpmSize(const std::filesystem::path& path);

}  // namespace proxyforge

#endif  // PROXYFORGE_IMAGE_H_

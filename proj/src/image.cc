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

#include "proxyforge/image.h"

#include <cctype>
#include <fstream>
#include <string>

#include "proxyforge/error.h"
#include "proxyforge/tensor_io.h"

namespace proxyforge {
namespace {

// Reads one whitespace-separated header token, skipping '#' comments.
std::string HeaderToken(std::span<const uint8_t> bytes, std::size_t* pos) {
  while (*pos < bytes.size()) {
    const char c = static_cast<char>(bytes[*pos]);
    if (c == '#') {
      while (*pos < bytes.size() && bytes[*pos] != '\n') ++*pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++*pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (*pos < bytes.size() &&
         !std::isspace(static_cast<unsigned char>(bytes[*pos]))) {
    tok.push_back(static_cast<char>(bytes[(*pos)++]));
  }
  return tok;
}

int HeaderInt(std::span<const uint8_t> bytes, std::size_t* pos,
              const char* what) {
  const std::string tok = HeaderToken(bytes, pos);
  Require(!tok.empty() && tok.size() <= 9 &&
              tok.find_first_not_of("0123456789") == std::string::npos,
          ErrorCode::kFormat, std::string("bad PPM ") + what);
  return std::stoi(tok);
}

struct PpmHeader {
  int width, height;
  std::size_t data_offset;
};

PpmHeader ParseHeader(std::span<const uint8_t> bytes) {
  std::size_t pos = 0;
  Require(HeaderToken(bytes, &pos) == "P6", ErrorCode::kFormat,
          "not a binary PPM (P6)");
  PpmHeader h;
  h.width = HeaderInt(bytes, &pos, "width");
  h.height = HeaderInt(bytes, &pos, "height");
  const int maxval = HeaderInt(bytes, &pos, "maxval");
  Require(h.width > 0 && h.height > 0, ErrorCode::kFormat,
          "PPM extents must be positive");
  Require(maxval == 255, ErrorCode::kFormat, "PPM maxval must be 255");
  Require(pos < bytes.size(), ErrorCode::kFormat, "truncated PPM header");
  h.data_offset = pos + 1;  // single whitespace after maxval
  return h;
}

}  // namespace

std::vector<float> RgbImage::ToNetworkInput() const {
  std::vector<float> out(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    out[i] = static_cast<float>(pixels[i]) / 255.0f - 0.5f;
  }
  return out;
}

std::vector<uint8_t> EncodePpm(const RgbImage& image) {
  Require(image.height > 0 && image.width > 0 &&
              image.pixels.size() ==
                  static_cast<std::size_t>(image.height) * image.width * 3,
          ErrorCode::kInvalidArgument, "image buffer does not match extents");
  const std::string header = "P6\n" + std::to_string(image.width) + " " +
                             std::to_string(image.height) + "\n255\n";
  std::vector<uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

RgbImage DecodePpm(std::span<const uint8_t> bytes) {
  const PpmHeader h = ParseHeader(bytes);
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height * 3;
  Require(bytes.size() - std::min(bytes.size(), h.data_offset) == n,
          ErrorCode::kFormat, "PPM payload size does not match header");
  RgbImage img;
  img.width = h.width;
  img.height = h.height;
  img.pixels.assign(bytes.begin() + h.data_offset, bytes.end());
  return img;
}

void WritePpm(const std::filesystem::path& path, const RgbImage& image) {
  WriteFileBytes(path, EncodePpm(image));
}

RgbImage ReadPpm(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  try {
    return DecodePpm(bytes);
  } catch (const Error& e) {
    Fail(e.code(), path.string() + ": " + e.what());
  }
}

std::pair<int, int> ReadPpmSize(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), ErrorCode::kIo,
          "cannot open " + path.string());
  std::vector<uint8_t> head(256);
  in.read(reinterpret_cast<char*>(head.data()), head.size());
  head.resize(static_cast<std::size_t>(in.gcount()));
  const PpmHeader h = ParseHeader(head);
  return {h.height, h.width};
}

}  // namespace proxyforge

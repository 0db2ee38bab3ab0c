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

#include "proxyforge/tensor.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "proxyforge/error.h"

namespace proxyforge {
namespace {

std::size_t Product(const std::vector<uint32_t>& dims) {
  std::size_t n = 1;
  for (uint32_t d : dims) n *= d;
  return n;
}

void CheckDims(const std::vector<uint32_t>& dims, std::size_t size) {
  Require(!dims.empty(), ErrorCode::kInvalidArgument,
          "tensor rank must be at least 1");
  Require(dims.size() <= 255, ErrorCode::kInvalidArgument,
          "tensor rank exceeds 255");
  for (uint32_t d : dims) {
    Require(d > 0, ErrorCode::kInvalidArgument,
            "tensor extents must be positive");
  }
  Require(Product(dims) == size, ErrorCode::kInvalidArgument,
          "tensor payload has " + std::to_string(size) +
              " values, extents require " + std::to_string(Product(dims)));
}

void CheckMapShape(const Tensor& tensor, std::size_t rank, const char* what) {
  Require(tensor.rank() == rank, ErrorCode::kFormat,
          std::string(what) + " tensor must have rank " +
              std::to_string(rank) + ", got " +
              std::to_string(tensor.rank()));
}

void CheckExtents(int height, int width, std::size_t size, std::size_t per,
                  const char* what) {
  Require(height > 0 && width > 0, ErrorCode::kInvalidArgument,
          std::string(what) + " extents must be positive");
  Require(static_cast<std::size_t>(height) * width * per == size,
          ErrorCode::kInvalidArgument,
          std::string(what) + " value count does not match its extents");
}

}  // namespace

Tensor Tensor::Float32(std::vector<uint32_t> dims, std::vector<float> values) {
  CheckDims(dims, values.size());
  for (float v : values) {
    Require(std::isfinite(v), ErrorCode::kInvalidArgument,
            "float32 tensor contains a non-finite value");
  }
  Tensor t;
  t.dtype_ = DType::kFloat32;
  t.dims_ = std::move(dims);
  t.data_ = std::move(values);
  return t;
}

Tensor Tensor::Uint8(std::vector<uint32_t> dims, std::vector<uint8_t> values) {
  CheckDims(dims, values.size());
  Tensor t;
  t.dtype_ = DType::kUint8;
  t.dims_ = std::move(dims);
  t.data_ = std::move(values);
  return t;
}

std::size_t Tensor::size() const {
  return dims_.empty() ? 0 : Product(dims_);
}

std::span<const float> Tensor::floats() const {
  const auto* v = std::get_if<std::vector<float>>(&data_);
  Require(v != nullptr && dtype_ == DType::kFloat32, ErrorCode::kFormat,
          "expected a float32 tensor");
  return *v;
}

std::span<const uint8_t> Tensor::bytes() const {
  const auto* v = std::get_if<std::vector<uint8_t>>(&data_);
  Require(v != nullptr, ErrorCode::kFormat, "expected a uint8 tensor");
  return *v;
}

ScoreMap::ScoreMap(int height, int width, int classes,
                   std::vector<float> values)
    : height_(height),
      width_(width),
      classes_(classes),
      values_(std::move(values)) {
  Require(classes > 0 && classes < kIgnoreLabel, ErrorCode::kInvalidArgument,
          "scoremap class count must be in [1, 254]");
  CheckExtents(height, width, values_.size(), classes, "scoremap");
  for (std::size_t j = 0; j < pixels(); ++j) {
    double sum = 0.0;
    for (int l = 0; l < classes_; ++l) {
      const float v = values_[j * classes_ + l];
      Require(v >= 0.0f && v <= 1.0f, ErrorCode::kValidation,
              "scoremap value outside [0, 1] at pixel " + std::to_string(j));
      sum += v;
    }
    Require(std::abs(sum - 1.0) <= kScoreSumTolerance, ErrorCode::kValidation,
            "scoremap channels at pixel " + std::to_string(j) +
                " sum to " + std::to_string(sum));
  }
}

ScoreMap ScoreMap::FromTensor(const Tensor& tensor) {
  CheckMapShape(tensor, 3, "scoremap");
  const auto& d = tensor.dims();
  auto f = tensor.floats();
  return ScoreMap(d[0], d[1], d[2], std::vector<float>(f.begin(), f.end()));
}

Tensor ScoreMap::ToTensor() const {
  return Tensor::Float32({static_cast<uint32_t>(height_),
                          static_cast<uint32_t>(width_),
                          static_cast<uint32_t>(classes_)},
                         values_);
}

ConfidenceMap::ConfidenceMap(int height, int width, std::vector<float> values)
    : height_(height), width_(width), values_(std::move(values)) {
  CheckExtents(height, width, values_.size(), 1, "confidence map");
  for (float v : values_) {
    Require(v >= 0.0f && v <= 1.0f, ErrorCode::kValidation,
            "confidence value outside [0, 1]");
  }
}

ConfidenceMap ConfidenceMap::FromTensor(const Tensor& tensor) {
  CheckMapShape(tensor, 2, "confidence map");
  auto f = tensor.floats();
  return ConfidenceMap(tensor.dims()[0], tensor.dims()[1],
                       std::vector<float>(f.begin(), f.end()));
}

Tensor ConfidenceMap::ToTensor() const {
  return Tensor::Float32(
      {static_cast<uint32_t>(height_), static_cast<uint32_t>(width_)},
      values_);
}

LabelMap::LabelMap(int height, int width, std::vector<uint8_t> values)
    : height_(height), width_(width), values_(std::move(values)) {
  CheckExtents(height, width, values_.size(), 1, "label map");
}

LabelMap LabelMap::FromTensor(const Tensor& tensor) {
  CheckMapShape(tensor, 2, "label map");
  auto b = tensor.bytes();
  return LabelMap(tensor.dims()[0], tensor.dims()[1],
                  std::vector<uint8_t>(b.begin(), b.end()));
}

Tensor LabelMap::ToTensor() const {
  return Tensor::Uint8(
      {static_cast<uint32_t>(height_), static_cast<uint32_t>(width_)},
      values_);
}

void LabelMap::CheckClasses(int classes) const {
  for (std::size_t j = 0; j < values_.size(); ++j) {
    const uint8_t v = values_[j];
    Require(v < classes || v == kIgnoreLabel, ErrorCode::kValidation,
            "label " + std::to_string(v) + " at pixel " + std::to_string(j) +
                " is outside [0, " + std::to_string(classes) + ")");
  }
}

std::size_t LabelMap::CountLabeled() const {
  return static_cast<std::size_t>(
      std::count_if(values_.begin(), values_.end(),
                    [](uint8_t v) { return v != kIgnoreLabel; }));
}

DiscriminatorMap::DiscriminatorMap(int height, int width,
                                   std::vector<float> values)
    : height_(height), width_(width), values_(std::move(values)) {
  CheckExtents(height, width, values_.size(), 1, "discriminator map");
  for (float v : values_) {
    Require(v > 0.0f && v < 1.0f, ErrorCode::kValidation,
            "discriminator value outside (0, 1)");
  }
}

DiscriminatorMap DiscriminatorMap::FromTensor(const Tensor& tensor) {
  CheckMapShape(tensor, 2, "discriminator map");
  auto f = tensor.floats();
  return DiscriminatorMap(tensor.dims()[0], tensor.dims()[1],
                          std::vector<float>(f.begin(), f.end()));
}

Tensor DiscriminatorMap::ToTensor() const {
  return Tensor::Float32(
      {static_cast<uint32_t>(height_), static_cast<uint32_t>(width_)},
      values_);
}

LabelMap ArgmaxChannel(const ScoreMap& scores) {
  std::vector<uint8_t> out(scores.pixels());
  for (std::size_t j = 0; j < out.size(); ++j) {
    auto px = scores.pixel(j);
    // max_element returns the first maximum: lowest index wins ties.
    out[j] = static_cast<uint8_t>(std::max_element(px.begin(), px.end()) -
                                  px.begin());
  }
  return LabelMap(scores.height(), scores.width(), std::move(out));
}

ConfidenceMap MaxChannel(const ScoreMap& scores) {
  std::vector<float> out(scores.pixels());
  for (std::size_t j = 0; j < out.size(); ++j) {
    auto px = scores.pixel(j);
    out[j] = *std::max_element(px.begin(), px.end());
  }
  return ConfidenceMap(scores.height(), scores.width(), std::move(out));
}

Tensor BilinearResize(const Tensor& src, int height, int width) {
  Require(src.rank() == 2, ErrorCode::kInvalidArgument,
          "bilinear resize expects a rank-2 tensor");
  Require(height > 0 && width > 0, ErrorCode::kInvalidArgument,
          "bilinear resize target extents must be positive");
  const int h = static_cast<int>(src.dims()[0]);
  const int w = static_cast<int>(src.dims()[1]);
  auto in = src.floats();
  if (h == height && w == width) return src;

  const double sy = height > 1 ? static_cast<double>(h - 1) / (height - 1) : 0;
  const double sx = width > 1 ? static_cast<double>(w - 1) / (width - 1) : 0;
  std::vector<float> out(static_cast<std::size_t>(height) * width);
  for (int y = 0; y < height; ++y) {
    const double fy = y * sy;
    const int y0 = std::min(static_cast<int>(fy), h - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = x * sx;
      const int x0 = std::min(static_cast<int>(fx), w - 1);
      const int x1 = std::min(x0 + 1, w - 1);
      const double wx = fx - x0;
      const double a = in[y0 * w + x0];
      const double b = in[y0 * w + x1];
      const double c = in[y1 * w + x0];
      const double d = in[y1 * w + x1];
      const double top = a + (b - a) * wx;
      const double bottom = c + (d - c) * wx;
      const double v = top + (bottom - top) * wy;
      const double lo = std::min(std::min(a, b), std::min(c, d));
      const double hi = std::max(std::max(a, b), std::max(c, d));
      out[static_cast<std::size_t>(y) * width + x] =
          static_cast<float>(std::clamp(v, lo, hi));
    }
  }
  return Tensor::Float32(
      {static_cast<uint32_t>(height), static_cast<uint32_t>(width)},
      std::move(out));
}

}  // namespace proxyforge

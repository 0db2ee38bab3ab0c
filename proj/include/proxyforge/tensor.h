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

#ifndef PROXYFORGE_TENSOR_H_
#define PROXYFORGE_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace proxyforge {

enum class DType : uint8_t { kFloat32 = 0x00, kUint8 = 0x01 };

// Dense row-major array of float32 or uint8 values. Extents are positive and
// float payloads are finite; both are checked by the factories.
class Tensor {
 public:
  Tensor() = default;

  static Tensor Float32(std::vector<uint32_t> dims, std::vector<float> values);
  static Tensor Uint8(std::vector<uint32_t> dims, std::vector<uint8_t> values);

  DType dtype() const { return dtype_; }
  const std::vector<uint32_t>& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t size() const;

  // Throws kFormat if the dtype does not match.
  std::span<const float> floats() const;
  std::span<const uint8_t> bytes() const;

  bool operator==(const Tensor& other) const = default;

 private:
  DType dtype_ = DType::kFloat32;
  std::vector<uint32_t> dims_;
  std::variant<std::vector<float>, std::vector<uint8_t>> data_;
};

inline constexpr uint8_t kIgnoreLabel = 255;
inline constexpr double kScoreSumTolerance = 1e-4;

// Per-pixel class probabilities, stored H x W x L (channel fastest).
class ScoreMap {
 public:
  ScoreMap(int height, int width, int classes, std::vector<float> values);
  static ScoreMap FromTensor(const Tensor& tensor);
  Tensor ToTensor() const;

  int height() const { return height_; }
  int width() const { return width_; }
  int classes() const { return classes_; }
  std::size_t pixels() const {
    return static_cast<std::size_t>(height_) * width_;
  }
  std::span<const float> values() const { return values_; }
  std::span<const float> pixel(std::size_t j) const {
    return std::span<const float>(values_).subspan(j * classes_, classes_);
  }
  float at(std::size_t j, int l) const { return values_[j * classes_ + l]; }

 private:
  int height_;
  int width_;
  int classes_;
  std::vector<float> values_;
};

// H x W map with every value in [0, 1].
class ConfidenceMap {
 public:
  ConfidenceMap(int height, int width, std::vector<float> values);
  static ConfidenceMap FromTensor(const Tensor& tensor);
  Tensor ToTensor() const;

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t pixels() const {
    return static_cast<std::size_t>(height_) * width_;
  }
  std::span<const float> values() const { return values_; }
  float operator[](std::size_t j) const { return values_[j]; }

  bool operator==(const ConfidenceMap& other) const = default;

 private:
  int height_;
  int width_;
  std::vector<float> values_;
};

// H x W categorical map; 255 marks ignored pixels.
class LabelMap {
 public:
  LabelMap(int height, int width, std::vector<uint8_t> values);
  static LabelMap FromTensor(const Tensor& tensor);
  Tensor ToTensor() const;

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t pixels() const {
    return static_cast<std::size_t>(height_) * width_;
  }
  std::span<const uint8_t> values() const { return values_; }
  uint8_t operator[](std::size_t j) const { return values_[j]; }

  // Throws kValidation if any value is outside {0..classes-1} u {255}.
  void CheckClasses(int classes) const;
  std::size_t CountLabeled() const;

  bool operator==(const LabelMap& other) const = default;

 private:
  int height_;
  int width_;
  std::vector<uint8_t> values_;
};

// Native-resolution discriminator output; sigmoid values strictly in (0, 1).
class DiscriminatorMap {
 public:
  DiscriminatorMap(int height, int width, std::vector<float> values);
  static DiscriminatorMap FromTensor(const Tensor& tensor);
  Tensor ToTensor() const;

  int height() const { return height_; }
  int width() const { return width_; }
  std::span<const float> values() const { return values_; }

 private:
  int height_;
  int width_;
  std::vector<float> values_;
};

LabelMap ArgmaxChannel(const ScoreMap& scores);
ConfidenceMap MaxChannel(const ScoreMap& scores);

// Corner-aligned bilinear interpolation of a rank-2 float tensor to
// height x width. Output values stay within [min(src), max(src)].
Tensor BilinearResize(const Tensor& src, int height, int width);

}  // namespace proxyforge

#endif  // PROXYFORGE_TENSOR_H_

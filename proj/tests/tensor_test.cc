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

#include <cmath>
#include <cstring>
#include <limits>

#include <gtest/gtest.h>

#include "proxyforge/error.h"
#include "proxyforge/image.h"
#include "proxyforge/rng.h"
#include "proxyforge/tensor_io.h"
#include "support.h"

namespace proxyforge {
namespace {

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

TEST(TensorIoTest, KnownByteLayout) {
  const Tensor t = Tensor::Uint8({2, 3}, {1, 2, 3, 4, 5, 255});
  const std::vector<uint8_t> expected = {'T', 'N', 'S', 'R', 0x01, 0x01, 0x02,
                                         2,   0,   0,   0,   3,    0,    0,
                                         0,   1,   2,   3,   4,    5,    255};
  EXPECT_EQ(EncodeTensor(t), expected);
}

TEST(TensorIoTest, FloatPayloadIsLittleEndian) {
  const auto bytes = EncodeTensor(Tensor::Float32({1}, {1.0f}));
  ASSERT_EQ(bytes.size(), 4u + 3u + 4u + 4u);
  // 1.0f = 0x3f800000.
  EXPECT_EQ(bytes[11], 0x00);
  EXPECT_EQ(bytes[12], 0x00);
  EXPECT_EQ(bytes[13], 0x80);
  EXPECT_EQ(bytes[14], 0x3f);
}

TEST(TensorIoTest, RandomRoundTripsAreExact) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int rank = rng.UniformInt(1, 4);
    std::vector<uint32_t> dims;
    std::size_t n = 1;
    for (int i = 0; i < rank; ++i) {
      dims.push_back(static_cast<uint32_t>(rng.UniformInt(1, 5)));
      n *= dims.back();
    }
    Tensor t;
    if (rng.Bernoulli(0.5)) {
      std::vector<float> v(n);
      for (auto& x : v) x = static_cast<float>(rng.Normal() * 1e3);
      t = Tensor::Float32(dims, v);
    } else {
      std::vector<uint8_t> v(n);
      for (auto& x : v) x = static_cast<uint8_t>(rng.UniformInt(0, 255));
      t = Tensor::Uint8(dims, v);
    }
    const auto bytes = EncodeTensor(t);
    EXPECT_EQ(DecodeTensor(bytes), t);
    EXPECT_EQ(EncodeTensor(DecodeTensor(bytes)), bytes);
  }
}

TEST(TensorIoTest, ConcatenatedRecordsDecodeInSequence) {
  const Tensor a = Tensor::Uint8({2}, {7, 8});
  const Tensor b = Tensor::Float32({1, 1}, {-2.5f});
  auto bytes = EncodeTensor(a);
  const auto tail = EncodeTensor(b);
  bytes.insert(bytes.end(), tail.begin(), tail.end());
  std::size_t offset = 0;
  EXPECT_EQ(DecodeTensor(bytes, &offset), a);
  EXPECT_EQ(DecodeTensor(bytes, &offset), b);
  EXPECT_EQ(offset, bytes.size());
  EXPECT_EQ(CodeOf([&] { DecodeTensor(bytes); }), ErrorCode::kFormat);
}

TEST(TensorIoTest, MalformedInputsAreFormatErrors) {
  const auto good = EncodeTensor(Tensor::Uint8({2, 2}, {1, 2, 3, 4}));
  auto bad_magic = good;
  bad_magic[0] = 'X';
  auto bad_version = good;
  bad_version[4] = 0x02;
  auto bad_dtype = good;
  bad_dtype[5] = 0x07;
  auto truncated = good;
  truncated.pop_back();
  auto zero_extent = good;
  zero_extent[7] = 0;
  for (const auto* b : {&bad_magic, &bad_version, &bad_dtype, &truncated, &zero_extent}) {
    EXPECT_EQ(CodeOf([&] { DecodeTensor(*b); }), ErrorCode::kFormat);
  }
}

TEST(TensorIoTest, FileRoundTrip) {
  testing::TempDir dir("tensor_io");
  const Tensor t = Tensor::Float32({2, 2}, {0.f, 1.f, -1.f, 3.5f});
  WriteTensorFile(dir / "a.ten", t);
  EXPECT_EQ(ReadTensorFile(dir / "a.ten"), t);
  EXPECT_EQ(CodeOf([&] { ReadTensorFile(dir / "missing.ten"); }), ErrorCode::kIo);
}

TEST(TensorTest, FactoriesValidate) {
  EXPECT_THROW(Tensor::Float32({2, 2}, {1, 2, 3}), Error);
  EXPECT_THROW(Tensor::Uint8({0}, {}), Error);
  EXPECT_THROW(Tensor::Float32({1}, {std::numeric_limits<float>::quiet_NaN()}), Error);
  EXPECT_EQ(CodeOf([] { Tensor::Uint8({1}, {0}).floats(); }), ErrorCode::kFormat);
}

TEST(ScoreMapTest, RowsMustSumToOne) {
  EXPECT_NO_THROW(ScoreMap(1, 1, 2, {0.25f, 0.75f}));
  EXPECT_NO_THROW(ScoreMap(1, 1, 2, {0.25f, 0.75005f}));
  EXPECT_THROW(ScoreMap(1, 1, 2, {0.25f, 0.7f}), Error);
  EXPECT_THROW(ScoreMap(1, 1, 2, {-0.25f, 1.25f}), Error);
}

TEST(ScoreMapTest, TensorRoundTrip) {
  Rng rng(2);
  const ScoreMap s = testing::RandomScoreMap(rng, 3, 4, 5, false);
  const ScoreMap back = ScoreMap::FromTensor(DecodeTensor(EncodeTensor(s.ToTensor())));
  EXPECT_EQ(back.ToTensor(), s.ToTensor());
}

TEST(LabelMapTest, CheckClassesAllowsIgnore) {
  const LabelMap m(1, 3, {0, 2, 255});
  EXPECT_NO_THROW(m.CheckClasses(3));
  EXPECT_EQ(CodeOf([&] { m.CheckClasses(2); }), ErrorCode::kValidation);
  EXPECT_EQ(m.CountLabeled(), 2u);
}

TEST(ConfidenceMapTest, RangeIsChecked) {
  EXPECT_NO_THROW(ConfidenceMap(1, 2, {0.f, 1.f}));
  EXPECT_THROW(ConfidenceMap(1, 2, {0.f, 1.01f}), Error);
}

TEST(DiscriminatorMapTest, OpenIntervalIsChecked) {
  EXPECT_NO_THROW(DiscriminatorMap(1, 1, {0.5f}));
  EXPECT_THROW(DiscriminatorMap(1, 1, {1.0f}), Error);
  EXPECT_THROW(DiscriminatorMap(1, 1, {0.0f}), Error);
}

TEST(ArgmaxTest, LowestIndexWinsTies) {
  const ScoreMap s(1, 2, 3, {0.4f, 0.4f, 0.2f, 0.1f, 0.2f, 0.7f});
  const LabelMap a = ArgmaxChannel(s);
  EXPECT_EQ(a[0], 0);
  EXPECT_EQ(a[1], 2);
  EXPECT_FLOAT_EQ(MaxChannel(s)[1], 0.7f);
}

TEST(BilinearResizeTest, CornersAreKept) {
  const Tensor src = Tensor::Float32({2, 2}, {0.f, 1.f, 2.f, 3.f});
  const Tensor out = BilinearResize(src, 3, 5);
  const auto v = out.floats();
  EXPECT_FLOAT_EQ(v[0], 0.f);
  EXPECT_FLOAT_EQ(v[4], 1.f);
  EXPECT_FLOAT_EQ(v[10], 2.f);
  EXPECT_FLOAT_EQ(v[14], 3.f);
  // Center: mean of all four.
  EXPECT_FLOAT_EQ(v[7], 1.5f);
}

TEST(BilinearResizeTest, StaysWithinSourceRange) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor src = testing::RandomSigmoidMap(rng, rng.UniformInt(1, 6),
                                                 rng.UniformInt(1, 6), false);
    const auto in = src.floats();
    const float lo = *std::min_element(in.begin(), in.end());
    const float hi = *std::max_element(in.begin(), in.end());
    const Tensor out = BilinearResize(src, rng.UniformInt(1, 20), rng.UniformInt(1, 20));
    for (float v : out.floats()) {
      EXPECT_GE(v, lo);
      EXPECT_LE(v, hi);
    }
  }
}

TEST(PpmTest, RoundTripAndComments) {
  RgbImage img{2, 3, {}};
  for (int i = 0; i < 18; ++i) img.pixels.push_back(static_cast<uint8_t>(i * 13));
  EXPECT_EQ(DecodePpm(EncodePpm(img)), img);

  std::string text = "P6\n# comment\n3 2\n255\n";
  std::vector<uint8_t> bytes(text.begin(), text.end());
  bytes.insert(bytes.end(), img.pixels.begin(), img.pixels.end());
  EXPECT_EQ(DecodePpm(bytes), img);

  bytes[1] = '5';
  EXPECT_EQ(CodeOf([&] { DecodePpm(bytes); }), ErrorCode::kFormat);
}

TEST(PpmTest, NetworkInputScaling) {
  const RgbImage img{1, 1, {0, 255, 51}};
  const auto f = img.ToNetworkInput();
  EXPECT_FLOAT_EQ(f[0], -0.5f);
  EXPECT_FLOAT_EQ(f[1], 0.5f);
  EXPECT_NEAR(f[2], -0.3f, 1e-6);
}

}  // namespace
}  // namespace proxyforge

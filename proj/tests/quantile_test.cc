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

#include "proxyforge/quantile.h"

#include <algorithm>
#include <cmath>
#include <functional>

#include <gtest/gtest.h>

#include "proxyforge/error.h"
#include "proxyforge/rng.h"

namespace proxyforge {
namespace {

std::vector<float> Uniforms(Rng& rng, std::size_t n) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.Uniform());
  return v;
}

// Independent oracle: full descending sort, (k+1)-th largest.
double SortedThreshold(std::vector<float> v, double p) {
  std::sort(v.begin(), v.end(), std::greater<float>());
  const auto k = static_cast<std::size_t>(std::floor(p * v.size() + 1e-9));
  return k >= v.size() ? -INFINITY : v[k];
}

std::size_t CountAbove(std::span<const float> v, double t) {
  return std::count_if(v.begin(), v.end(), [t](float x) { return x > t; });
}

TEST(SelectedCountTest, FloorWithDecimalSlack) {
  EXPECT_EQ(SelectedCount(0.29, 100), 29u);
  EXPECT_EQ(SelectedCount(0.6, 10), 6u);
  EXPECT_EQ(SelectedCount(0.8, 7), 5u);
  EXPECT_EQ(SelectedCount(0.0, 7), 0u);
  EXPECT_EQ(SelectedCount(1.0, 7), 7u);
}

TEST(TopFractionTest, ExactMatchesSortOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<float> v = Uniforms(rng, rng.UniformInt(1, 60));
    if (rng.Bernoulli(0.3)) {
      for (auto& x : v) x = std::round(x * 4) / 4;  // heavy ties
    }
    const double p = rng.Uniform(0.01, 1.0);
    EXPECT_EQ(TopFractionThreshold(v, p), SortedThreshold(v, p));
  }
}

TEST(TopFractionTest, DistinctValuesSelectExactlyK) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<float> v = Uniforms(rng, rng.UniformInt(1, 500));
    const double p = rng.Uniform(0.0, 0.999);
    const double t = TopFractionThreshold(v, p);
    EXPECT_EQ(CountAbove(v, t), SelectedCount(p, v.size()));
  }
}

TEST(TopFractionTest, FullSelectionPassesAll) {
  const std::vector<float> v = {0.2f, 0.0f};
  EXPECT_EQ(TopFractionThreshold(v, 1.0), kPassAll);
  EXPECT_EQ(CountAbove(v, kPassAll), 2u);
}

TEST(TopFractionTest, EmptyCollection) {
  EXPECT_THROW(TopFractionThreshold(std::span<const float>(), 0.5), Error);
  EXPECT_EQ(TopFractionThreshold(std::span<const float>(), 1.0), kPassAll);
}

TEST(HistogramTest, RejectsValuesOutsideUnitInterval) {
  Histogram h;
  EXPECT_THROW(h.Add(-0.01f), Error);
  EXPECT_THROW(h.Add(1.5f), Error);
  EXPECT_THROW(h.Add(std::nanf("")), Error);
  h.Add(1.0f);
  EXPECT_EQ(h.counts()[kHistogramBins - 1], 1u);
}

TEST(HistogramTest, ThresholdWithinOneBinOfExact) {
  Rng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const std::vector<float> v = Uniforms(rng, 5000);
    Histogram h;
    for (float x : v) h.Add(x);
    for (double p : {0.1, 0.3, 0.6, 0.8, 0.95}) {
      const double exact = SortedThreshold(v, p);
      const double approx = TopFractionThreshold(h, p);
      EXPECT_LE(std::abs(approx - exact), 0x1.0p-16);
      EXPECT_GE(approx, exact);
    }
  }
}

TEST(HistogramTest, SeparatedValuesSelectExactlyK) {
  // One value per bin: the upper edge of the bin selects the top k exactly.
  std::vector<float> v;
  for (int b = 0; b < 1000; ++b) {
    v.push_back(static_cast<float>((b * 37 % 1000 + 0.5) / 1000.0));
  }
  Histogram h;
  for (float x : v) h.Add(x);
  for (double p : {0.05, 0.3, 0.6, 0.8}) {
    EXPECT_EQ(CountAbove(v, TopFractionThreshold(h, p)), SelectedCount(p, v.size()));
  }
}

TEST(HistogramTest, MergeIsAssociativeAndCommutative) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    Histogram a, b, c;
    for (Histogram* h : {&a, &b, &c}) {
      for (float x : Uniforms(rng, rng.UniformInt(0, 50))) h->Add(x);
    }
    Histogram left = a, right = b, swapped = c;
    left.Merge(b);
    left.Merge(c);
    right.Merge(c);
    Histogram right_total = a;
    right_total.Merge(right);
    swapped.Merge(b);
    swapped.Merge(a);
    EXPECT_EQ(left, right_total);
    EXPECT_EQ(left, swapped);
  }
}

TEST(HistogramTest, SerializeRoundTrip) {
  Rng rng(5);
  Histogram h;
  for (float x : Uniforms(rng, 1000)) h.Add(x);
  const auto bytes = h.Serialize();
  EXPECT_EQ(Histogram::Deserialize(bytes), h);

  auto corrupt = bytes;
  corrupt.back() ^= 1;  // counts no longer sum to total
  EXPECT_THROW(Histogram::Deserialize(corrupt), Error);
  EXPECT_EQ(Histogram::Deserialize(Histogram().Serialize()), Histogram());
}

TEST(ValuePoolTest, ModesAgreeOnSeparatedData) {
  Rng rng(6);
  const std::vector<float> v = Uniforms(rng, 3000);
  ValuePool exact(QuantileMode::kExact), hist(QuantileMode::kHistogram);
  for (float x : v) {
    exact.Add(x);
    hist.Add(x);
  }
  EXPECT_TRUE(exact.has_exact());
  EXPECT_FALSE(hist.has_exact());
  for (double p : {0.3, 0.6, 0.8}) {
    EXPECT_LE(std::abs(TopFractionThreshold(exact, p) - TopFractionThreshold(hist, p)),
              0x1.0p-16);
  }
}

TEST(ValuePoolTest, MergeOrderDoesNotMatter) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ValuePool> parts;
    for (int i = 0; i < 4; ++i) {
      ValuePool p(QuantileMode::kExact);
      for (float x : Uniforms(rng, rng.UniformInt(0, 30))) p.Add(x);
      parts.push_back(p);
    }
    ValuePool fwd(QuantileMode::kExact), rev(QuantileMode::kExact);
    for (int i = 0; i < 4; ++i) fwd.Merge(parts[i]);
    for (int i = 3; i >= 0; --i) rev.Merge(parts[i]);
    if (fwd.empty()) continue;
    const double p = rng.Uniform(0.05, 1.0);
    EXPECT_EQ(TopFractionThreshold(fwd, p), TopFractionThreshold(rev, p));
    EXPECT_EQ(fwd.histogram(), rev.histogram());
  }
}

TEST(ValuePoolTest, MergingAHistogramPoolDropsExactValues) {
  ValuePool exact(QuantileMode::kExact), hist(QuantileMode::kHistogram);
  exact.Add(0.5f);
  hist.Add(0.25f);
  exact.Merge(hist);
  EXPECT_FALSE(exact.has_exact());
  EXPECT_EQ(exact.size(), 2u);
}

TEST(MinMaxNormalizeTest, MapsToUnitRange) {
  const ConfidenceMap m = MinMaxNormalize(Tensor::Float32({1, 3}, {2.f, 4.f, 3.f}));
  EXPECT_FLOAT_EQ(m[0], 0.f);
  EXPECT_FLOAT_EQ(m[1], 1.f);
  EXPECT_FLOAT_EQ(m[2], 0.5f);
  const ConfidenceMap flat = MinMaxNormalize(Tensor::Float32({2, 1}, {7.f, 7.f}));
  EXPECT_FLOAT_EQ(flat[0], 0.5f);
}

TEST(FuseAdversarialTest, AveragesAndChecksSize) {
  const ConfidenceMap a(1, 2, {0.f, 1.f}), b(1, 2, {1.f, 1.f});
  const ConfidenceMap f = FuseAdversarial(a, b);
  EXPECT_FLOAT_EQ(f[0], 0.5f);
  EXPECT_FLOAT_EQ(f[1], 1.f);
  EXPECT_THROW(FuseAdversarial(a, ConfidenceMap(2, 1, {0.f, 0.f})), Error);
}

TEST(ClassThresholdsTest, FullEmptyAndFloorCases) {
  ClassPools pools(3, QuantileMode::kExact);
  pools.pool(0).Add(0.9f);
  pools.pool(0).Add(0.5f);
  pools.pool(2).Add(0.0f);
  const auto t2 = ClassThresholds(pools, 1.0);
  // Full selection keeps every member strictly above the threshold.
  EXPECT_LT(t2[0], 0.5);
  EXPECT_GT(t2[0], 0.5 * (1 - 1e-5));
  EXPECT_EQ(t2[1], kPassNone);
  EXPECT_EQ(t2[2], kThresholdFloor);
  EXPECT_DOUBLE_EQ(ClassThresholds(pools, 0.5)[0], 0.5);
}

TEST(PoolAccumulateTest, FiltersByAdversarialThreshold) {
  ClassPools pools(2, QuantileMode::kExact);
  PoolAccumulate(pools, ConfidenceMap(1, 3, {0.9f, 0.8f, 0.7f}),
                 LabelMap(1, 3, {0, 1, 1}), ConfidenceMap(1, 3, {0.6f, 0.2f, 0.9f}),
                 0.5);
  EXPECT_EQ(pools.pool(0).size(), 1u);
  EXPECT_EQ(pools.pool(1).size(), 1u);
  EXPECT_FLOAT_EQ(pools.pool(1).exact_values()[0], 0.7f);
  EXPECT_THROW(PoolAccumulate(pools, ConfidenceMap(1, 1, {0.5f}), LabelMap(1, 1, {255}),
                              ConfidenceMap(1, 1, {0.5f}), 0.0),
               Error);
}

}  // namespace
}  // namespace proxyforge

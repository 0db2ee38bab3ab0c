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

#ifndef PROXYFORGE_QUANTILE_H_
#define PROXYFORGE_QUANTILE_H_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "proxyforge/tensor.h"

namespace proxyforge {

inline constexpr int kHistogramBins = 65536;
// Pools at or below this many values keep them for exact selection.
inline constexpr std::size_t kExactModeLimit = std::size_t{1} << 24;
// Lower bound applied to every finite class threshold.
inline constexpr double kThresholdFloor = 0x1.0p-20;

inline constexpr double kPassAll = -std::numeric_limits<double>::infinity();
inline constexpr double kPassNone = std::numeric_limits<double>::infinity();

// Fixed-width histogram over [0, 1] with exact min/max tracking.
class Histogram {
 public:
  Histogram();

  // Throws kInvalidArgument for values outside [0, 1] (including NaN).
  void Add(float value);
  void Merge(const Histogram& other);

  static int BinOf(float value);
  static double BinLowerEdge(int bin) {
    return static_cast<double>(bin) / kHistogramBins;
  }

  uint64_t total() const { return total_; }
  // Exact extremes; +inf / -inf while empty.
  float min() const { return min_; }
  float max() const { return max_; }
  std::span<const uint64_t> counts() const { return counts_; }

  // Two concatenated ".ten" records: a uint8 rank-1 header (magic "HIST",
  // bin count, total, min, max) followed by the counts as a uint8 rank-1
  // tensor of little-endian u64 values.
  std::vector<uint8_t> Serialize() const;
  static Histogram Deserialize(std::span<const uint8_t> bytes);

  bool operator==(const Histogram& other) const = default;

 private:
  std::vector<uint64_t> counts_;
  uint64_t total_ = 0;
  float min_;
  float max_;
};

enum class QuantileMode {
  kAuto,       // exact up to kExactModeLimit values, histogram beyond
  kExact,      // always keep every value
  kHistogram,  // never keep values
};

// A multiset of [0, 1] values supporting top-fraction selection in either
// exact or histogram mode. Mergeable; merge order does not affect results.
class ValuePool {
 public:
  explicit ValuePool(QuantileMode mode = QuantileMode::kAuto) : mode_(mode) {}

  void Add(float value);
  void Merge(const ValuePool& other);

  QuantileMode mode() const { return mode_; }
  uint64_t size() const { return histogram_.total(); }
  bool empty() const { return size() == 0; }
  float min() const { return histogram_.min(); }
  const Histogram& histogram() const { return histogram_; }
  bool has_exact() const { return exact_enabled_; }
  std::span<const float> exact_values() const { return exact_; }

 private:
  void MaybeDropExact();

  QuantileMode mode_;
  Histogram histogram_;
  bool exact_enabled_ = mode_ != QuantileMode::kHistogram;
  std::vector<float> exact_;
};

// k = floor(p * total); a 1e-9 slack absorbs decimal fractions such as
// 0.29 * 100 that land just below an integer in binary.
std::size_t SelectedCount(double fraction, std::size_t total);

// Threshold t such that the top floor(p*K) values are those with v > t.
// Returns kPassAll when floor(p*K) >= K. Exact mode returns the (k+1)-th
// largest value. Histogram mode returns the upper edge of the bin holding
// that value, so the count passing v > t equals k whenever bins separate
// the values, and |t - exact| <= 2^-16.
// Throws kEmptyData for an empty collection with p < 1.
double TopFractionThreshold(std::span<const float> values, double fraction);
double TopFractionThreshold(const Histogram& histogram, double fraction);
// Uses exact values when the pool still holds them.
double TopFractionThreshold(const ValuePool& pool, double fraction);

// (x - min) / (max - min) element-wise; 0.5 everywhere for a constant map.
// src must be a finite rank-2 float tensor.
ConfidenceMap MinMaxNormalize(const Tensor& src);

// Element-wise mean of two equally sized maps.
ConfidenceMap FuseAdversarial(const ConfidenceMap& d1, const ConfidenceMap& d2);

// One confidence pool per predicted class.
class ClassPools {
 public:
  ClassPools(int classes, QuantileMode mode = QuantileMode::kAuto);

  int classes() const { return static_cast<int>(pools_.size()); }
  ValuePool& pool(int label) { return pools_.at(label); }
  const ValuePool& pool(int label) const { return pools_.at(label); }
  uint64_t total() const;
  void Merge(const ClassPools& other);

 private:
  std::vector<ValuePool> pools_;
};

// Adds confidence[j] to pools[predicted[j]] for every pixel with
// adversarial[j] > t1. Throws kValidation on ignored or out-of-range
// predictions and kInvalidArgument on size mismatch.
void PoolAccumulate(ClassPools& pools, const ConfidenceMap& confidence,
                    const LabelMap& predicted,
                    const ConfidenceMap& adversarial, double t1);

// Per-class thresholds at fraction p2. Finite values are >= 2^-20. A full
// selection (floor(p2*K) == K) yields min(pool) * (1 - 2^-20) so every
// member passes; an empty pool yields kPassNone and logs a warning.
std::vector<double> ClassThresholds(const ClassPools& pools, double p2);

}  // namespace proxyforge

#endif  // PROXYFORGE_QUANTILE_H_

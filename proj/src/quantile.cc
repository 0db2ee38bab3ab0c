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
#include <cstring>
#include <functional>
#include <string>

#include "proxyforge/error.h"
#include "proxyforge/logging.h"
#include "proxyforge/tensor_io.h"

namespace proxyforge {
namespace {

constexpr uint8_t kHistogramMagic[4] = {'H', 'I', 'S', 'T'};
constexpr std::size_t kHistogramHeaderSize = 4 + 4 + 8 + 4 + 4;

template <typename V>
void PutLe(std::vector<uint8_t>& out, V value) {
  uint8_t raw[sizeof(V)];
  std::memcpy(raw, &value, sizeof(V));
  out.insert(out.end(), raw, raw + sizeof(V));
}

template <typename V>
V GetLe(std::span<const uint8_t> bytes, std::size_t at) {
  V value;
  std::memcpy(&value, bytes.data() + at, sizeof(V));
  return value;
}

}  // namespace

Histogram::Histogram()
    : counts_(kHistogramBins, 0),
      min_(std::numeric_limits<float>::infinity()),
      max_(-std::numeric_limits<float>::infinity()) {}

int Histogram::BinOf(float value) {
  const int bin = static_cast<int>(static_cast<double>(value) * kHistogramBins);
  return std::min(bin, kHistogramBins - 1);
}

void Histogram::Add(float value) {
  Require(value >= 0.0f && value <= 1.0f, ErrorCode::kInvalidArgument,
          "histogram value outside [0, 1]: " + std::to_string(value));
  ++counts_[BinOf(value)];
  ++total_;
  min_ = std::min(min_, value);
  max_ = std::max(max_, value);
}

void Histogram::Merge(const Histogram& other) {
  for (int b = 0; b < kHistogramBins; ++b) counts_[b] += other.counts_[b];
  total_ += other.total_;
  min_ = std::min(min_, other.min_);
  max_ = std::max(max_, other.max_);
}

std::vector<uint8_t> Histogram::Serialize() const {
  std::vector<uint8_t> header(std::begin(kHistogramMagic),
                              std::end(kHistogramMagic));
  PutLe<uint32_t>(header, kHistogramBins);
  PutLe<uint64_t>(header, total_);
  PutLe<float>(header, min_);
  PutLe<float>(header, max_);
  std::vector<uint8_t> counts;
  counts.reserve(counts_.size() * 8);
  for (uint64_t c : counts_) PutLe<uint64_t>(counts, c);

  auto out = EncodeTensor(
      Tensor::Uint8({static_cast<uint32_t>(header.size())}, header));
  const auto body = EncodeTensor(
      Tensor::Uint8({static_cast<uint32_t>(counts.size())}, counts));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Histogram Histogram::Deserialize(std::span<const uint8_t> bytes) {
  std::size_t offset = 0;
  const Tensor header = DecodeTensor(bytes, &offset);
  const Tensor body = DecodeTensor(bytes, &offset);
  Require(offset == bytes.size(), ErrorCode::kFormat,
          "trailing bytes after histogram records");
  Require(header.dtype() == DType::kUint8 && header.rank() == 1 &&
              header.size() == kHistogramHeaderSize,
          ErrorCode::kFormat, "malformed histogram header record");
  auto h = header.bytes();
  Require(std::memcmp(h.data(), kHistogramMagic, 4) == 0, ErrorCode::kFormat,
          "bad histogram magic");
  Require(GetLe<uint32_t>(h, 4) == kHistogramBins, ErrorCode::kFormat,
          "histogram bin count mismatch");
  Require(body.dtype() == DType::kUint8 && body.rank() == 1 &&
              body.size() == kHistogramBins * 8u,
          ErrorCode::kFormat, "malformed histogram counts record");

  Histogram out;
  out.total_ = GetLe<uint64_t>(h, 8);
  out.min_ = GetLe<float>(h, 16);
  out.max_ = GetLe<float>(h, 20);
  auto c = body.bytes();
  uint64_t sum = 0;
  for (int b = 0; b < kHistogramBins; ++b) {
    out.counts_[b] = GetLe<uint64_t>(c, 8u * b);
    sum += out.counts_[b];
  }
  Require(sum == out.total_, ErrorCode::kFormat,
          "histogram counts do not sum to the stored total");
  return out;
}

void ValuePool::Add(float value) {
  histogram_.Add(value);
  if (exact_enabled_) {
    exact_.push_back(value);
    MaybeDropExact();
  }
}

void ValuePool::Merge(const ValuePool& other) {
  histogram_.Merge(other.histogram_);
  if (exact_enabled_ && other.exact_enabled_) {
    exact_.insert(exact_.end(), other.exact_.begin(), other.exact_.end());
    MaybeDropExact();
  } else if (exact_enabled_) {
    exact_enabled_ = false;
    exact_.clear();
    exact_.shrink_to_fit();
  }
}

void ValuePool::MaybeDropExact() {
  if (mode_ == QuantileMode::kAuto && exact_.size() > kExactModeLimit) {
    exact_enabled_ = false;
    exact_.clear();
    exact_.shrink_to_fit();
  }
}

std::size_t SelectedCount(double fraction, std::size_t total) {
  const double k = std::floor(fraction * static_cast<double>(total) + 1e-9);
  if (k <= 0.0) return 0;
  return std::min(total, static_cast<std::size_t>(k));
}

double TopFractionThreshold(std::span<const float> values, double fraction) {
  const std::size_t total = values.size();
  const std::size_t k = SelectedCount(fraction, total);
  if (k >= total) {
    Require(total > 0 || fraction >= 1.0, ErrorCode::kEmptyData,
            "threshold of an empty collection");
    return kPassAll;
  }
  std::vector<float> work(values.begin(), values.end());
  std::nth_element(work.begin(), work.begin() + k, work.end(),
                   std::greater<float>());
  return work[k];
}

double TopFractionThreshold(const Histogram& histogram, double fraction) {
  const std::size_t total = histogram.total();
  const std::size_t k = SelectedCount(fraction, total);
  if (k >= total) {
    Require(total > 0 || fraction >= 1.0, ErrorCode::kEmptyData,
            "threshold of an empty collection");
    return kPassAll;
  }
  auto counts = histogram.counts();
  uint64_t above = 0;
  for (int b = kHistogramBins - 1; b >= 0; --b) {
    above += counts[b];
    if (above > k) return Histogram::BinLowerEdge(b + 1);
  }
  return Histogram::BinLowerEdge(0);  // unreachable: above reaches total
}

double TopFractionThreshold(const ValuePool& pool, double fraction) {
  return pool.has_exact() ? TopFractionThreshold(pool.exact_values(), fraction)
                          : TopFractionThreshold(pool.histogram(), fraction);
}

ConfidenceMap MinMaxNormalize(const Tensor& src) {
  Require(src.rank() == 2, ErrorCode::kInvalidArgument,
          "min-max normalization expects a rank-2 tensor");
  auto in = src.floats();
  const auto [lo_it, hi_it] = std::minmax_element(in.begin(), in.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<float> out(in.size(), 0.5f);
  if (hi > lo) {
    const double range = hi - lo;
    for (std::size_t i = 0; i < in.size(); ++i) {
      out[i] = static_cast<float>((in[i] - lo) / range);
    }
  }
  return ConfidenceMap(static_cast<int>(src.dims()[0]),
                       static_cast<int>(src.dims()[1]), std::move(out));
}

ConfidenceMap FuseAdversarial(const ConfidenceMap& d1,
                              const ConfidenceMap& d2) {
  Require(d1.height() == d2.height() && d1.width() == d2.width(),
          ErrorCode::kInvalidArgument,
          "adversarial maps differ in size: " + std::to_string(d1.height()) +
              "x" + std::to_string(d1.width()) + " vs " +
              std::to_string(d2.height()) + "x" + std::to_string(d2.width()));
  std::vector<float> out(d1.pixels());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = (d1[j] + d2[j]) / 2.0f;
  return ConfidenceMap(d1.height(), d1.width(), std::move(out));
}

ClassPools::ClassPools(int classes, QuantileMode mode) {
  Require(classes > 0, ErrorCode::kInvalidArgument,
          "class pools need at least one class");
  pools_.assign(classes, ValuePool(mode));
}

uint64_t ClassPools::total() const {
  uint64_t n = 0;
  for (const auto& p : pools_) n += p.size();
  return n;
}

void ClassPools::Merge(const ClassPools& other) {
  Require(other.classes() == classes(), ErrorCode::kInvalidArgument,
          "cannot merge class pools of different class counts");
  for (int l = 0; l < classes(); ++l) pools_[l].Merge(other.pools_[l]);
}

void PoolAccumulate(ClassPools& pools, const ConfidenceMap& confidence,
                    const LabelMap& predicted,
                    const ConfidenceMap& adversarial, double t1) {
  Require(confidence.height() == predicted.height() &&
              confidence.width() == predicted.width() &&
              adversarial.height() == predicted.height() &&
              adversarial.width() == predicted.width(),
          ErrorCode::kInvalidArgument, "pool inputs differ in size");
  const std::size_t n = predicted.pixels();
  for (std::size_t j = 0; j < n; ++j) {
    const uint8_t label = predicted[j];
    Require(label != kIgnoreLabel, ErrorCode::kValidation,
            "predicted label map contains the ignore value at pixel " +
                std::to_string(j));
    Require(label < pools.classes(), ErrorCode::kValidation,
            "predicted label " + std::to_string(label) + " out of range");
    if (adversarial[j] > t1) pools.pool(label).Add(confidence[j]);
  }
}

std::vector<double> ClassThresholds(const ClassPools& pools, double p2) {
  std::vector<double> t2(pools.classes());
  for (int l = 0; l < pools.classes(); ++l) {
    const ValuePool& pool = pools.pool(l);
    if (pool.empty()) {
      spdlog::warn("class {} has an empty refocused pool; it yields no proxies",
                   l);
      t2[l] = kPassNone;
      continue;
    }
    const std::size_t k = SelectedCount(p2, pool.size());
    double t;
    if (k >= pool.size()) {
      t = static_cast<double>(pool.min()) * (1.0 - kThresholdFloor);
    } else {
      t = TopFractionThreshold(pool, p2);
    }
    t2[l] = std::max(t, kThresholdFloor);
  }
  return t2;
}

}  // namespace proxyforge

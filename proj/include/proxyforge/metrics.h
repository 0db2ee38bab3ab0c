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

#ifndef PROXYFORGE_METRICS_H_
#define PROXYFORGE_METRICS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "proxyforge/tensor.h"

namespace proxyforge {

// L x L pixel counts, rows = ground truth, columns = prediction.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int classes);

  // Skips gt == 255. Predictions of 255 are skipped when
  // allow_ignored_prediction is set (proxy evaluation) and rejected
  // otherwise.
  void Update(const LabelMap& gt, const LabelMap& pred,
              bool allow_ignored_prediction = false);
  void Merge(const ConfusionMatrix& other);

  int classes() const { return classes_; }
  uint64_t at(int gt, int pred) const { return counts_[gt * classes_ + pred]; }
  void Add(int gt, int pred, uint64_t count) {
    counts_[gt * classes_ + pred] += count;
  }
  uint64_t total() const;

  bool operator==(const ConfusionMatrix& other) const = default;

 private:
  int classes_;
  std::vector<uint64_t> counts_;
};

struct IouResult {
  // nullopt for classes with an empty union; those are left out of mean.
  std::vector<std::optional<double>> per_class;
  double mean = 0.0;
};

// Throws kEmptyData when every class has an empty union.
IouResult ComputeIou(const ConfusionMatrix& cm);

// Proxy quality against held-out ground truth. Accumulates over images.
class ProxyQuality {
 public:
  explicit ProxyQuality(int classes);

  void Update(const LabelMap& gt, const LabelMap& proxy);
  void Merge(const ProxyQuality& other);

  // |proxy != 255| / pixels.
  double coverage() const;
  // Correct / labeled-with-valid-gt; nullopt when nothing is labeled.
  std::optional<double> precision() const;
  // Per gt class: labeled pixels of that class / pixels of that class.
  std::vector<std::optional<double>> per_class_coverage() const;

  uint64_t pixels() const { return pixels_; }
  uint64_t labeled() const { return labeled_; }

 private:
  int classes_;
  uint64_t pixels_ = 0;
  uint64_t labeled_ = 0;
  uint64_t labeled_with_gt_ = 0;
  uint64_t correct_ = 0;
  std::vector<uint64_t> gt_count_;
  std::vector<uint64_t> gt_labeled_;
};

// Default class names of the synthetic benchmark, then "class<i>".
std::vector<std::string> DefaultClassNames(int classes);

// Aligned text table: one header row of class names plus mIoU, one row of
// per-class IoU percentages.
std::string FormatIouTable(const IouResult& result,
                           const std::vector<std::string>& class_names,
                           const std::string& row_label);
// key=value lines: miou=..., iou.<name>=... ("nan" for excluded classes).
std::string FormatIouKeyValues(const IouResult& result,
                               const std::vector<std::string>& class_names);
std::string FormatProxyQualityKeyValues(
    const ProxyQuality& quality, const std::vector<std::string>& class_names);

}  // namespace proxyforge

#endif  // PROXYFORGE_METRICS_H_

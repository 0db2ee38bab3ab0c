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

#include "proxyforge/metrics.h"

#include <cstdio>
#include <sstream>

#include "proxyforge/error.h"

namespace proxyforge {
namespace {

std::string Fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

void CheckSameShape(const LabelMap& a, const LabelMap& b) {
  Require(a.height() == b.height() && a.width() == b.width(),
          ErrorCode::kValidation,
          "label maps differ in size: " + std::to_string(a.height()) + "x" +
              std::to_string(a.width()) + " vs " + std::to_string(b.height()) +
              "x" + std::to_string(b.width()));
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(int classes)
    : classes_(classes),
      counts_(static_cast<std::size_t>(classes) * classes, 0) {
  Require(classes >= 1 && classes < 255, ErrorCode::kInvalidArgument,
          "confusion matrix needs 1..254 classes");
}

void ConfusionMatrix::Update(const LabelMap& gt, const LabelMap& pred,
                             bool allow_ignored_prediction) {
  CheckSameShape(gt, pred);
  gt.CheckClasses(classes_);
  pred.CheckClasses(classes_);
  const auto g = gt.values();
  const auto p = pred.values();
  if (!allow_ignored_prediction) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      Require(g[j] == kIgnoreLabel || p[j] != kIgnoreLabel, ErrorCode::kValidation,
              "prediction contains ignored pixels");
    }
  }
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (g[j] == kIgnoreLabel || p[j] == kIgnoreLabel) continue;
    ++counts_[g[j] * classes_ + p[j]];
  }
}

void ConfusionMatrix::Merge(const ConfusionMatrix& other) {
  Require(other.classes_ == classes_, ErrorCode::kInvalidArgument,
          "cannot merge confusion matrices of different sizes");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

uint64_t ConfusionMatrix::total() const {
  uint64_t t = 0;
  for (uint64_t c : counts_) t += c;
  return t;
}

IouResult ComputeIou(const ConfusionMatrix& cm) {
  const int n = cm.classes();
  IouResult r;
  r.per_class.resize(n);
  double sum = 0.0;
  int counted = 0;
  for (int l = 0; l < n; ++l) {
    uint64_t row = 0, col = 0;
    for (int k = 0; k < n; ++k) {
      row += cm.at(l, k);
      col += cm.at(k, l);
    }
    const uint64_t tp = cm.at(l, l);
    const uint64_t uni = row + col - tp;
    if (uni == 0) continue;
    r.per_class[l] = static_cast<double>(tp) / static_cast<double>(uni);
    sum += *r.per_class[l];
    ++counted;
  }
  Require(counted > 0, ErrorCode::kEmptyData,
          "no class has any ground truth or prediction");
  r.mean = sum / counted;
  return r;
}

ProxyQuality::ProxyQuality(int classes)
    : classes_(classes), gt_count_(classes, 0), gt_labeled_(classes, 0) {}

void ProxyQuality::Update(const LabelMap& gt, const LabelMap& proxy) {
  CheckSameShape(gt, proxy);
  gt.CheckClasses(classes_);
  proxy.CheckClasses(classes_);
  const auto g = gt.values();
  const auto p = proxy.values();
  pixels_ += g.size();
  for (std::size_t j = 0; j < g.size(); ++j) {
    const bool labeled = p[j] != kIgnoreLabel;
    labeled_ += labeled;
    if (g[j] == kIgnoreLabel) continue;
    ++gt_count_[g[j]];
    if (!labeled) continue;
    ++gt_labeled_[g[j]];
    ++labeled_with_gt_;
    correct_ += p[j] == g[j];
  }
}

void ProxyQuality::Merge(const ProxyQuality& other) {
  Require(other.classes_ == classes_, ErrorCode::kInvalidArgument,
          "cannot merge proxy statistics of different sizes");
  pixels_ += other.pixels_;
  labeled_ += other.labeled_;
  labeled_with_gt_ += other.labeled_with_gt_;
  correct_ += other.correct_;
  for (int l = 0; l < classes_; ++l) {
    gt_count_[l] += other.gt_count_[l];
    gt_labeled_[l] += other.gt_labeled_[l];
  }
}

double ProxyQuality::coverage() const {
  return pixels_ == 0 ? 0.0
                      : static_cast<double>(labeled_) / static_cast<double>(pixels_);
}

std::optional<double> ProxyQuality::precision() const {
  if (labeled_with_gt_ == 0) return std::nullopt;
  return static_cast<double>(correct_) / static_cast<double>(labeled_with_gt_);
}

std::vector<std::optional<double>> ProxyQuality::per_class_coverage() const {
  std::vector<std::optional<double>> out(classes_);
  for (int l = 0; l < classes_; ++l) {
    if (gt_count_[l] > 0) {
      out[l] = static_cast<double>(gt_labeled_[l]) /
               static_cast<double>(gt_count_[l]);
    }
  }
  return out;
}

std::vector<std::string> DefaultClassNames(int classes) {
  static const char* kNames[] = {"background", "road", "rectangle",
                                 "circle",     "triangle", "bar"};
  std::vector<std::string> out;
  for (int l = 0; l < classes; ++l) {
    out.push_back(l < 6 ? kNames[l] : "class" + std::to_string(l));
  }
  return out;
}

std::string FormatIouTable(const IouResult& result,
                           const std::vector<std::string>& class_names,
                           const std::string& row_label) {
  std::size_t label_width = std::max<std::size_t>(row_label.size(), 6);
  std::vector<std::size_t> widths;
  for (const auto& name : class_names) {
    widths.push_back(std::max<std::size_t>(name.size(), 5));
  }
  auto pad = [](const std::string& s, std::size_t w) {
    return std::string(w - std::min(w, s.size()), ' ') + s;
  };
  std::ostringstream out;
  out << std::string(label_width, ' ');
  for (std::size_t l = 0; l < class_names.size(); ++l) {
    out << "  " << pad(class_names[l], widths[l]);
  }
  out << "  " << pad("mIoU", 5) << '\n';
  out << row_label << std::string(label_width - row_label.size(), ' ');
  for (std::size_t l = 0; l < class_names.size(); ++l) {
    const auto& v = l < result.per_class.size() ? result.per_class[l]
                                                : std::optional<double>();
    out << "  " << pad(v ? Fixed(*v * 100.0, 1) : "-", widths[l]);
  }
  out << "  " << pad(Fixed(result.mean * 100.0, 1), 5) << '\n';
  return out.str();
}

std::string FormatIouKeyValues(const IouResult& result,
                               const std::vector<std::string>& class_names) {
  std::ostringstream out;
  out << "miou=" << Fixed(result.mean, 6) << '\n';
  for (std::size_t l = 0; l < result.per_class.size(); ++l) {
    const std::string name =
        l < class_names.size() ? class_names[l] : "class" + std::to_string(l);
    out << "iou." << name << '='
        << (result.per_class[l] ? Fixed(*result.per_class[l], 6) : "nan")
        << '\n';
  }
  return out.str();
}

std::string FormatProxyQualityKeyValues(
    const ProxyQuality& quality, const std::vector<std::string>& class_names) {
  std::ostringstream out;
  out << "proxy.pixels=" << quality.pixels() << '\n';
  out << "proxy.labeled=" << quality.labeled() << '\n';
  out << "proxy.coverage=" << Fixed(quality.coverage(), 6) << '\n';
  const auto prec = quality.precision();
  out << "proxy.precision=" << (prec ? Fixed(*prec, 6) : "nan") << '\n';
  const auto cov = quality.per_class_coverage();
  for (std::size_t l = 0; l < cov.size(); ++l) {
    const std::string name =
        l < class_names.size() ? class_names[l] : "class" + std::to_string(l);
    out << "proxy.coverage." << name << '='
        << (cov[l] ? Fixed(*cov[l], 6) : "nan") << '\n';
  }
  return out.str();
}

}  // namespace proxyforge

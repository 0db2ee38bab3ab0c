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

#ifndef PROXYFORGE_PROXY_H_
#define PROXYFORGE_PROXY_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "proxyforge/manifest.h"
#include "proxyforge/quantile.h"
#include "proxyforge/tensor.h"

namespace proxyforge {

struct ProxyParams {
  double p1 = 0.6;
  double p2 = 0.8;

  // Throws kInvalidArgument unless both lie in (0, 1].
  void Validate() const;
};

struct ThresholdSet {
  double t1 = kPassAll;
  std::vector<double> t2;
  // Refocused pool size per predicted class.
  std::vector<uint64_t> pool_sizes;
};

// Inputs for one target image: the classifier scoremap and both
// discriminator maps at native resolution.
struct ProxyInputs {
  ScoreMap scores;
  Tensor d1;
  Tensor d2;
};

// Adversarial confidence at image resolution: both discriminator maps are
// resized bilinearly to H x W, min-max normalized, then averaged.
ConfidenceMap AdversarialConfidence(const Tensor& d1, const Tensor& d2,
                                    int height, int width);

// Random access to the dataset for multi-pass processing. Each call must
// return the same inputs for the same index.
struct ProxySource {
  std::size_t count = 0;
  std::function<ProxyInputs(std::size_t)> load;
};

struct PipelineOptions {
  QuantileMode mode = QuantileMode::kAuto;
  int threads = 1;
};

// Pass 1 accumulates adversarial confidence for t1; pass 2 fills the class
// pools under A > t1 and derives t2. Independent of input order and worker
// count.
ThresholdSet ComputeThresholds(const ProxySource& source,
                               const ProxyParams& params,
                               const PipelineOptions& options = {});

// Returns P[j,l] / t2[l] in double precision; kPassNone channels become 0.
std::vector<double> Reweight(const ScoreMap& scores,
                             const std::vector<double>& t2);

// label = argmax_l P[j,l]/t2[l] (lowest index on ties), kept iff the
// reweighted maximum exceeds 1 and A[j] > t1; otherwise 255.
LabelMap GenerateProxy(const ScoreMap& scores,
                       const ConfidenceMap& adversarial,
                       const ThresholdSet& thresholds);

struct ProxyReport {
  ThresholdSet thresholds;
  ProxyParams params;
  uint64_t total_pixels = 0;
  uint64_t labeled_pixels = 0;
  uint64_t refocused_pixels = 0;
  std::vector<uint64_t> labeled_per_class;

  double labeled_fraction() const;
  double refocus_fraction() const;
  std::vector<double> per_class_fraction() const;
  // JSON document with t1, t2[], pool_sizes[], labeled_fraction,
  // per_class_fraction[] and per-class labeled counts. Infinite thresholds
  // are written as the strings "-inf" / "inf".
  std::string ToJson() const;
};

// In-memory run over a ProxySource. `emit` receives each proxy map in
// index order.
ProxyReport GenerateProxies(
    const ProxySource& source, const ProxyParams& params,
    const PipelineOptions& options,
    const std::function<void(std::size_t, const LabelMap&)>& emit);

struct PipelineResult {
  DatasetManifest manifest;  // input manifest with proxy paths filled in
  ProxyReport report;
};

// Manifest-driven run: reads scoremap/d1/d2 for every target-train entry,
// writes proxy_<id>.ten, report.json and manifest.txt into out_dir.
// Throws kEmptyData for a manifest without target-train entries.
PipelineResult RunPipeline(const DatasetManifest& manifest,
                           const ProxyParams& params,
                           const std::filesystem::path& out_dir,
                           const PipelineOptions& options = {});

// Loads the ProxyInputs of one manifest entry, checking P against the
// image size.
ProxyInputs LoadProxyInputs(const DatasetManifest& manifest,
                            const ManifestEntry& entry);

}  // namespace proxyforge

#endif  // PROXYFORGE_PROXY_H_

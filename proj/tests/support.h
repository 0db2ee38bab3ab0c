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

#ifndef PROXYFORGE_TESTS_SUPPORT_H_
#define PROXYFORGE_TESTS_SUPPORT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "proxyforge/proxy.h"
#include "proxyforge/rng.h"
#include "proxyforge/tensor.h"

namespace proxyforge::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

// One randomized proxy problem: N images sharing H x W x L, with
// discriminator maps at a coarser random size. Values are occasionally
// quantized to provoke ties.
struct ProxyInstance {
  std::vector<ProxyInputs> images;
  int classes = 0;
};

ScoreMap RandomScoreMap(Rng& rng, int height, int width, int classes,
                        bool quantized);
Tensor RandomSigmoidMap(Rng& rng, int height, int width, bool quantized);
ProxyInstance RandomProxyInstance(Rng& rng, int max_images, int max_side,
                                  int max_classes);

ProxySource SourceOf(const std::vector<ProxyInputs>& images);

// Literal full-sort transcription of the proxy labelling procedure: global
// top-p1 refocusing, per-class top-p2 thresholds over the refocused
// classification confidences, and a reweighted argmax.
std::vector<LabelMap> BruteForceProxies(const std::vector<ProxyInputs>& images,
                                        double p1, double p2);

// Streaming pipeline output collected in image order.
std::vector<LabelMap> PipelineProxies(const std::vector<ProxyInputs>& images,
                                      double p1, double p2, QuantileMode mode,
                                      int threads);

// Byte-level comparison of two directory trees; returns the first
// difference or an empty string.
std::string CompareTrees(const std::filesystem::path& a,
                         const std::filesystem::path& b);

}  // namespace proxyforge::testing

#endif  // PROXYFORGE_TESTS_SUPPORT_H_

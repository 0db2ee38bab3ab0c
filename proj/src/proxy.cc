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

#include "proxyforge/proxy.h"

#include <cmath>
#include <limits>

#include "json.hpp"
#include "proxyforge/error.h"
#include "proxyforge/image.h"
#include "proxyforge/logging.h"
#include "proxyforge/parallel.h"
#include "proxyforge/tensor_io.h"

namespace proxyforge {
namespace {

int WorkerCount(const PipelineOptions& options, std::size_t count) {
  const int t = options.threads <= 0 ? DefaultThreadCount() : options.threads;
  return std::max(1, std::min<int>(t, static_cast<int>(count)));
}

void CheckInputs(const ProxyInputs& in, int classes) {
  Require(in.scores.classes() == classes, ErrorCode::kValidation,
          "scoremaps disagree on the number of classes");
}

nlohmann::json ThresholdJson(double t) {
  if (std::isinf(t)) return t > 0 ? "inf" : "-inf";
  return t;
}

}  // namespace

void ProxyParams::Validate() const {
  Require(p1 > 0.0 && p1 <= 1.0, ErrorCode::kInvalidArgument,
          "p1 must lie in (0, 1]");
  Require(p2 > 0.0 && p2 <= 1.0, ErrorCode::kInvalidArgument,
          "p2 must lie in (0, 1]");
}

ConfidenceMap AdversarialConfidence(const Tensor& d1, const Tensor& d2,
                                    int height, int width) {
  return FuseAdversarial(MinMaxNormalize(BilinearResize(d1, height, width)),
                         MinMaxNormalize(BilinearResize(d2, height, width)));
}

ThresholdSet ComputeThresholds(const ProxySource& source,
                               const ProxyParams& params,
                               const PipelineOptions& options) {
  params.Validate();
  Require(source.count > 0, ErrorCode::kEmptyData, "no target images");
  const int workers = WorkerCount(options, source.count);

  std::vector<ValuePool> adv_pools(workers, ValuePool(options.mode));
  std::vector<int> classes(source.count, 0);
  ParallelShards(source.count, workers,
                 [&](int w, std::size_t begin, std::size_t end) {
                   for (std::size_t i = begin; i < end; ++i) {
                     const ProxyInputs in = source.load(i);
                     classes[i] = in.scores.classes();
                     const ConfidenceMap a = AdversarialConfidence(
                         in.d1, in.d2, in.scores.height(), in.scores.width());
                     for (float v : a.values()) adv_pools[w].Add(v);
                   }
                 });
  for (int c : classes) {
    Require(c == classes[0], ErrorCode::kValidation,
            "scoremaps disagree on the number of classes");
  }
  ValuePool adv(options.mode);
  for (const auto& p : adv_pools) adv.Merge(p);

  ThresholdSet out;
  out.t1 = TopFractionThreshold(adv, params.p1);

  const int num_classes = classes[0];
  std::vector<ClassPools> pools(workers, ClassPools(num_classes, options.mode));
  ParallelShards(source.count, workers,
                 [&](int w, std::size_t begin, std::size_t end) {
                   for (std::size_t i = begin; i < end; ++i) {
                     const ProxyInputs in = source.load(i);
                     CheckInputs(in, num_classes);
                     const ConfidenceMap a = AdversarialConfidence(
                         in.d1, in.d2, in.scores.height(), in.scores.width());
                     PoolAccumulate(pools[w], MaxChannel(in.scores),
                                    ArgmaxChannel(in.scores), a, out.t1);
                   }
                 });
  ClassPools merged(num_classes, options.mode);
  for (const auto& p : pools) merged.Merge(p);
  out.t2 = ClassThresholds(merged, params.p2);
  for (int l = 0; l < num_classes; ++l) {
    out.pool_sizes.push_back(merged.pool(l).size());
  }
  return out;
}

std::vector<double> Reweight(const ScoreMap& scores,
                             const std::vector<double>& t2) {
  const int classes = scores.classes();
  Require(static_cast<int>(t2.size()) == classes, ErrorCode::kInvalidArgument,
          "one class threshold per channel is required");
  std::vector<double> out(scores.pixels() * classes);
  for (std::size_t j = 0; j < scores.pixels(); ++j) {
    for (int l = 0; l < classes; ++l) {
      out[j * classes + l] =
          t2[l] == kPassNone ? 0.0 : static_cast<double>(scores.at(j, l)) / t2[l];
    }
  }
  return out;
}

LabelMap GenerateProxy(const ScoreMap& scores,
                       const ConfidenceMap& adversarial,
                       const ThresholdSet& thresholds) {
  Require(adversarial.height() == scores.height() &&
              adversarial.width() == scores.width(),
          ErrorCode::kInvalidArgument,
          "adversarial map does not match the scoremap size");
  const int classes = scores.classes();
  const std::vector<double> r = Reweight(scores, thresholds.t2);
  std::vector<uint8_t> labels(scores.pixels(), kIgnoreLabel);
  for (std::size_t j = 0; j < scores.pixels(); ++j) {
    if (!(adversarial[j] > thresholds.t1)) continue;
    int best = 0;
    for (int l = 1; l < classes; ++l) {
      if (r[j * classes + l] > r[j * classes + best]) best = l;
    }
    if (r[j * classes + best] > 1.0) labels[j] = static_cast<uint8_t>(best);
  }
  return LabelMap(scores.height(), scores.width(), std::move(labels));
}

double ProxyReport::labeled_fraction() const {
  return total_pixels == 0 ? 0.0
                           : static_cast<double>(labeled_pixels) / total_pixels;
}

double ProxyReport::refocus_fraction() const {
  return total_pixels == 0 ? 0.0
                           : static_cast<double>(refocused_pixels) / total_pixels;
}

std::vector<double> ProxyReport::per_class_fraction() const {
  std::vector<double> out;
  for (uint64_t c : labeled_per_class) {
    out.push_back(total_pixels == 0 ? 0.0
                                    : static_cast<double>(c) / total_pixels);
  }
  return out;
}

std::string ProxyReport::ToJson() const {
  nlohmann::json j;
  j["p1"] = params.p1;
  j["p2"] = params.p2;
  j["t1"] = ThresholdJson(thresholds.t1);
  j["t2"] = nlohmann::json::array();
  for (double t : thresholds.t2) j["t2"].push_back(ThresholdJson(t));
  j["pool_sizes"] = thresholds.pool_sizes;
  j["total_pixels"] = total_pixels;
  j["labeled_pixels"] = labeled_pixels;
  j["refocused_pixels"] = refocused_pixels;
  j["labeled_fraction"] = labeled_fraction();
  j["refocus_fraction"] = refocus_fraction();
  j["labeled_per_class"] = labeled_per_class;
  j["per_class_fraction"] = per_class_fraction();
  return j.dump(2) + "\n";
}

ProxyReport GenerateProxies(
    const ProxySource& source, const ProxyParams& params,
    const PipelineOptions& options,
    const std::function<void(std::size_t, const LabelMap&)>& emit) {
  ProxyReport report;
  report.params = params;
  report.thresholds = ComputeThresholds(source, params, options);
  const int classes = static_cast<int>(report.thresholds.t2.size());
  report.labeled_per_class.assign(classes, 0);

  std::vector<std::optional<LabelMap>> maps(source.count);
  std::vector<uint64_t> refocused(source.count, 0);
  ParallelFor(source.count, WorkerCount(options, source.count),
              [&](std::size_t i) {
                const ProxyInputs in = source.load(i);
                const ConfidenceMap a = AdversarialConfidence(
                    in.d1, in.d2, in.scores.height(), in.scores.width());
                for (float v : a.values()) refocused[i] += v > report.thresholds.t1;
                maps[i] = GenerateProxy(in.scores, a, report.thresholds);
              });
  for (std::size_t i = 0; i < source.count; ++i) {
    const LabelMap& m = *maps[i];
    report.total_pixels += m.pixels();
    report.refocused_pixels += refocused[i];
    for (uint8_t v : m.values()) {
      if (v == kIgnoreLabel) continue;
      ++report.labeled_pixels;
      ++report.labeled_per_class[v];
    }
    if (emit) emit(i, m);
  }
  spdlog::info("proxy labels: t1={} labeled_fraction={:.4f}",
              report.thresholds.t1, report.labeled_fraction());
  return report;
}

ProxyInputs LoadProxyInputs(const DatasetManifest& manifest,
                            const ManifestEntry& entry) {
  Require(!entry.scoremap.empty() && !entry.d1.empty() && !entry.d2.empty(),
          ErrorCode::kValidation,
          "target entry '" + entry.id + "' lacks scoremap, d1 or d2");
  ScoreMap scores =
      ScoreMap::FromTensor(ReadTensorFile(manifest.Resolve(entry.scoremap)));
  if (!entry.image.empty()) {
    const auto [h, w] = ReadPpmSize(manifest.Resolve(entry.image));
    Require(h == scores.height() && w == scores.width(), ErrorCode::kValidation,
            "scoremap of '" + entry.id + "' does not match its image size");
  }
  Tensor d1 = DiscriminatorMap::FromTensor(
                  ReadTensorFile(manifest.Resolve(entry.d1)))
                  .ToTensor();
  Tensor d2 = DiscriminatorMap::FromTensor(
                  ReadTensorFile(manifest.Resolve(entry.d2)))
                  .ToTensor();
  return ProxyInputs{std::move(scores), std::move(d1), std::move(d2)};
}

PipelineResult RunPipeline(const DatasetManifest& manifest,
                           const ProxyParams& params,
                           const std::filesystem::path& out_dir,
                           const PipelineOptions& options) {
  const auto targets = manifest.WithRole(Role::kTargetTrain);
  Require(!targets.empty(), ErrorCode::kEmptyData,
          "manifest has no target-train entries");
  std::filesystem::create_directories(out_dir);

  ProxySource source;
  source.count = targets.size();
  source.load = [&](std::size_t i) {
    return LoadProxyInputs(manifest, *targets[i]);
  };

  PipelineResult result;
  result.manifest = manifest;
  result.report = GenerateProxies(
      source, params, options, [&](std::size_t i, const LabelMap& m) {
        const auto path = out_dir / ("proxy_" + targets[i]->id + ".ten");
        WriteTensorFile(path, m.ToTensor());
        result.manifest.Find(Role::kTargetTrain, targets[i]->id)->proxy =
            result.manifest.Relativize(path);
      });
  const std::string json = result.report.ToJson();
  WriteFileBytes(out_dir / "report.json",
                 std::vector<uint8_t>(json.begin(), json.end()));
  SaveManifest(result.manifest, out_dir / "manifest.txt");
  return result;
}

}  // namespace proxyforge

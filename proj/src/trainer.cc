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

#include "proxyforge/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <utility>

#include "proxyforge/error.h"
#include "proxyforge/image.h"
#include "proxyforge/logging.h"
#include "proxyforge/parallel.h"
#include "proxyforge/tensor_io.h"

namespace proxyforge {
namespace {

using ad::Graph;
using ad::NdArray;
using ad::Var;

constexpr uint64_t kSourceBatchStream = 0x5001;
constexpr uint64_t kTargetBatchStream = 0x5002;
constexpr uint64_t kProxyBatchStream = 0x5003;
constexpr uint64_t kProxyInitStream = 0x5004;

NdArray<float> StackBatch(std::span<const Sample* const> batch) {
  Require(!batch.empty(), ErrorCode::kInvalidArgument, "empty batch");
  const int h = batch[0]->height, w = batch[0]->width;
  std::vector<std::vector<float>> images;
  images.reserve(batch.size());
  for (const Sample* s : batch) {
    Require(s->height == h && s->width == w, ErrorCode::kInvalidArgument,
            "batch images differ in size");
    images.push_back(s->pixels);
  }
  return ad::StackImages(images, 3, h, w);
}

std::vector<LabelMap> BatchLabels(std::span<const Sample* const> batch) {
  std::vector<LabelMap> labels;
  labels.reserve(batch.size());
  for (const Sample* s : batch) {
    Require(s->labels.has_value(), ErrorCode::kInvalidArgument,
            "sample " + s->id + " has no labels");
    labels.push_back(*s->labels);
  }
  return labels;
}

std::vector<const Sample*> Gather(std::span<const Sample> samples,
                                  const std::vector<std::size_t>& idx) {
  std::vector<const Sample*> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(&samples[i]);
  return out;
}

float Sigmoid(float z) {
  return z >= 0.0f ? 1.0f / (1.0f + std::exp(-z))
                   : std::exp(z) / (1.0f + std::exp(z));
}

// Clamped into the open interval so exported maps stay strictly in (0, 1).
float OpenSigmoid(float z) {
  return std::clamp(Sigmoid(z), std::nextafter(0.0f, 1.0f),
                    std::nextafter(1.0f, 0.0f));
}

double MeanSigmoid(const NdArray<float>& logits) {
  double sum = 0.0;
  for (float z : logits.data) sum += Sigmoid(z);
  return sum / static_cast<double>(logits.size());
}

// Fraction of patches on the correct side of 0 (source > 0, target < 0).
std::pair<std::size_t, std::size_t> CorrectPatches(const NdArray<float>& logits,
                                                   bool source) {
  std::size_t ok = 0;
  for (float z : logits.data) ok += source ? (z > 0.0f) : (z < 0.0f);
  return {ok, logits.size()};
}

std::string Format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace

void TrainConfig::Validate() const {
  Require(lambda_seg >= 0 && lambda1 >= 0 && lambda2 >= 0,
          ErrorCode::kInvalidArgument, "loss weights must be non-negative");
  Require(seg_learning_rate > 0 && adapt_learning_rate > 0 &&
              disc_learning_rate > 0 && proxy_learning_rate > 0,
          ErrorCode::kInvalidArgument, "learning rates must be positive");
  Require(pretrain_iterations >= 0 && adapt_iterations >= 0 &&
              proxy_iterations >= 0,
          ErrorCode::kInvalidArgument, "iteration counts must be >= 0");
  Require(batch_size >= 1, ErrorCode::kInvalidArgument,
          "batch size must be >= 1");
}

bool LossRecord::finite() const {
  return std::isfinite(seg) && std::isfinite(adv1) && std::isfinite(adv2) &&
         std::isfinite(disc1) && std::isfinite(disc2) &&
         std::isfinite(disc_accuracy) && std::isfinite(target_d_mean);
}

std::string LossRecord::ToLogLine() const {
  return "iter=" + std::to_string(iteration) + " L_seg=" +
         Format("%.6f", seg) + " L_adv1=" + Format("%.6f", adv1) +
         " L_adv2=" + Format("%.6f", adv2) + " L_D1=" + Format("%.6f", disc1) +
         " L_D2=" + Format("%.6f", disc2) + " D_acc=" +
         Format("%.4f", disc_accuracy) + " D_target=" +
         Format("%.4f", target_d_mean);
}

BatchSampler::BatchSampler(std::size_t count, uint64_t seed)
    : count_(count), rng_(seed), order_(count), cursor_(count) {
  Require(count > 0, ErrorCode::kEmptyData, "cannot sample from no images");
}

std::vector<std::size_t> BatchSampler::Next(int batch_size) {
  std::vector<std::size_t> out;
  out.reserve(batch_size);
  while (static_cast<int>(out.size()) < batch_size) {
    if (cursor_ >= count_) {
      std::iota(order_.begin(), order_.end(), 0);
      for (std::size_t i = count_; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng_.Uniform() * i);
        std::swap(order_[i - 1], order_[j]);
      }
      cursor_ = 0;
    }
    out.push_back(order_[cursor_++]);
  }
  return out;
}

double SegLoss(Network<float>& net, std::span<const Sample* const> batch) {
  Graph<float> g;
  const Var x = g.Input(StackBatch(batch));
  const FeatureVars f = ForwardFeatures(g, net, x, Binding::kFrozen);
  const Var logits = ForwardClassifier(g, net, f.high, batch[0]->height,
                                       batch[0]->width, Binding::kFrozen);
  const auto labels = BatchLabels(batch);
  return g.scalar(g.SoftmaxCrossEntropy(logits, labels));
}

AdaptationTrainer::AdaptationTrainer(Network<float>& net,
                                     const TrainConfig& config)
    : net_(net), config_(config) {
  config_.Validate();
}

double AdaptationTrainer::SupervisedStep(std::span<const Sample* const> batch,
                                         double learning_rate) {
  Graph<float> g;
  const Var x = g.Input(StackBatch(batch));
  const FeatureVars f = ForwardFeatures(g, net_, x, Binding::kTrainable);
  const Var logits = ForwardClassifier(g, net_, f.high, batch[0]->height,
                                       batch[0]->width, Binding::kTrainable);
  const auto labels = BatchLabels(batch);
  const Var seg = g.SoftmaxCrossEntropy(logits, labels);
  const Var total = g.Scale(seg, static_cast<float>(config_.lambda_seg));
  g.Backward(total);
  auto params = net_.Group(ParamGroup::kSegmentation);
  ad::SgdMomentumStep<float>(
      params, {learning_rate, config_.momentum, config_.weight_decay});
  return g.scalar(seg);
}

namespace {

struct DiscPhaseResult {
  double disc1 = 0, disc2 = 0, accuracy = 0, target_mean = 0;
};

DiscPhaseResult RunDiscriminatorPhase(Network<float>& net,
                                      const TrainConfig& config,
                                      const FeatureVars& src_vars,
                                      const FeatureVars& tgt_vars,
                                      const Graph<float>& features) {
  Graph<float> g;
  const Var sh = g.Input(features.value(src_vars.high));
  const Var sm = g.Input(features.value(src_vars.mid));
  const Var th = g.Input(features.value(tgt_vars.high));
  const Var tm = g.Input(features.value(tgt_vars.mid));
  const Var d1s = ForwardDiscriminator(g, net, 1, sh, Binding::kTrainable);
  const Var d1t = ForwardDiscriminator(g, net, 1, th, Binding::kTrainable);
  const Var d2s = ForwardDiscriminator(g, net, 2, sm, Binding::kTrainable);
  const Var d2t = ForwardDiscriminator(g, net, 2, tm, Binding::kTrainable);
  const Var l1 = g.Add(g.SigmoidBce(d1s, 1.0f), g.SigmoidBce(d1t, 0.0f));
  const Var l2 = g.Add(g.SigmoidBce(d2s, 1.0f), g.SigmoidBce(d2t, 0.0f));
  g.Backward(g.Add(l1, l2));

  DiscPhaseResult r;
  r.disc1 = g.scalar(l1);
  r.disc2 = g.scalar(l2);
  std::size_t ok = 0, total = 0;
  for (auto [v, src] : {std::pair{d1s, true}, std::pair{d1t, false},
                        std::pair{d2s, true}, std::pair{d2t, false}}) {
    const auto [c, n] = CorrectPatches(g.value(v), src);
    ok += c;
    total += n;
  }
  r.accuracy = static_cast<double>(ok) / static_cast<double>(total);
  r.target_mean = 0.5 * (MeanSigmoid(g.value(d1t)) + MeanSigmoid(g.value(d2t)));

  auto d_params = net.Group(ParamGroup::kDiscriminator1);
  auto d2_params = net.Group(ParamGroup::kDiscriminator2);
  d_params.insert(d_params.end(), d2_params.begin(), d2_params.end());
  ad::AdamStep<float>(d_params, {config.disc_learning_rate});
  return r;
}

}  // namespace

LossRecord AdaptationTrainer::AdversarialStep(
    std::span<const Sample* const> source,
    std::span<const Sample* const> target, double seg_learning_rate) {
  Graph<float> g;
  const Var xs = g.Input(StackBatch(source));
  const Var xt = g.Input(StackBatch(target));
  const FeatureVars fs = ForwardFeatures(g, net_, xs, Binding::kTrainable);
  const FeatureVars ft = ForwardFeatures(g, net_, xt, Binding::kTrainable);
  const Var logits = ForwardClassifier(g, net_, fs.high, source[0]->height,
                                       source[0]->width, Binding::kTrainable);
  const auto labels = BatchLabels(source);
  const Var seg = g.SoftmaxCrossEntropy(logits, labels);

  const DiscPhaseResult disc = RunDiscriminatorPhase(net_, config_, fs, ft, g);

  // Generator phase against the updated discriminators.
  const Var d1 = ForwardDiscriminator(g, net_, 1, ft.high, Binding::kFrozen);
  const Var d2 = ForwardDiscriminator(g, net_, 2, ft.mid, Binding::kFrozen);
  const Var adv1 = g.SigmoidBce(d1, 1.0f);
  const Var adv2 = g.SigmoidBce(d2, 1.0f);
  const Var terms[] = {g.Scale(seg, static_cast<float>(config_.lambda_seg)),
                       g.Scale(adv1, static_cast<float>(config_.lambda1)),
                       g.Scale(adv2, static_cast<float>(config_.lambda2))};
  g.Backward(g.Sum(terms));
  auto params = net_.Group(ParamGroup::kSegmentation);
  ad::SgdMomentumStep<float>(
      params, {seg_learning_rate, config_.momentum, config_.weight_decay});

  LossRecord rec;
  rec.seg = g.scalar(seg);
  rec.adv1 = g.scalar(adv1);
  rec.adv2 = g.scalar(adv2);
  rec.disc1 = disc.disc1;
  rec.disc2 = disc.disc2;
  rec.disc_accuracy = disc.accuracy;
  rec.target_d_mean = disc.target_mean;
  return rec;
}

LossRecord AdaptationTrainer::DiscriminatorStep(
    std::span<const Sample* const> source,
    std::span<const Sample* const> target) {
  Graph<float> g;
  const Var xs = g.Input(StackBatch(source));
  const Var xt = g.Input(StackBatch(target));
  const FeatureVars fs = ForwardFeatures(g, net_, xs, Binding::kFrozen);
  const FeatureVars ft = ForwardFeatures(g, net_, xt, Binding::kFrozen);
  const DiscPhaseResult disc = RunDiscriminatorPhase(net_, config_, fs, ft, g);
  LossRecord rec;
  rec.disc1 = disc.disc1;
  rec.disc2 = disc.disc2;
  rec.disc_accuracy = disc.accuracy;
  rec.target_d_mean = disc.target_mean;
  return rec;
}

void PretrainSource(Network<float>& net, std::span<const Sample> source,
                    const TrainConfig& config, const LogSink& log) {
  AdaptationTrainer trainer(net, config);
  BatchSampler sampler(source.size(),
                       Rng::DeriveSeed(config.seed, {kSourceBatchStream, 0}));
  for (int it = 0; it < config.pretrain_iterations; ++it) {
    const auto batch = Gather(source, sampler.Next(config.batch_size));
    const double lr = ad::PolyLearningRate(config.seg_learning_rate, it,
                                           config.pretrain_iterations);
    LossRecord rec;
    rec.iteration = it;
    rec.seg = trainer.SupervisedStep(batch, lr);
    Require(std::isfinite(rec.seg), ErrorCode::kInternal,
            "segmentation loss diverged during pretraining");
    if (log && (it % config.log_every == 0 ||
                it + 1 == config.pretrain_iterations)) {
      log(rec);
    }
  }
}

void TrainAdversarial(Network<float>& net, std::span<const Sample> source,
                      std::span<const Sample> target,
                      const TrainConfig& config, const LogSink& log) {
  AdaptationTrainer trainer(net, config);
  BatchSampler src(source.size(),
                   Rng::DeriveSeed(config.seed, {kSourceBatchStream, 1}));
  BatchSampler tgt(target.size(),
                   Rng::DeriveSeed(config.seed, {kTargetBatchStream, 1}));
  for (int it = 0; it < config.adapt_iterations; ++it) {
    const auto sb = Gather(source, src.Next(config.batch_size));
    const auto tb = Gather(target, tgt.Next(config.batch_size));
    LossRecord rec =
        trainer.AdversarialStep(sb, tb, config.adapt_learning_rate);
    rec.iteration = it;
    Require(rec.finite(), ErrorCode::kInternal,
            "non-finite loss during adversarial training at iteration " +
                std::to_string(it));
    if (log && (it % config.log_every == 0 ||
                it + 1 == config.adapt_iterations)) {
      log(rec);
    }
  }
}

Network<float> TrainOnProxies(std::span<const Sample> proxies,
                              const ModelConfig& model_config,
                              const TrainConfig& config, const LogSink& log) {
  std::vector<Sample> labeled;
  for (const Sample& s : proxies) {
    if (s.labels && s.labels->CountLabeled() > 0) labeled.push_back(s);
  }
  Require(!labeled.empty(), ErrorCode::kEmptyData,
          "proxy labels contain no labeled pixels");
  Network<float> net =
      InitNetwork(model_config, Rng::DeriveSeed(config.seed, {kProxyInitStream}));
  AdaptationTrainer trainer(net, config);
  BatchSampler sampler(labeled.size(),
                       Rng::DeriveSeed(config.seed, {kProxyBatchStream}));
  for (int it = 0; it < config.proxy_iterations; ++it) {
    const auto batch = Gather(labeled, sampler.Next(config.batch_size));
    const double lr = ad::PolyLearningRate(config.proxy_learning_rate, it,
                                           config.proxy_iterations);
    LossRecord rec;
    rec.iteration = it;
    rec.seg = trainer.SupervisedStep(batch, lr);
    Require(std::isfinite(rec.seg), ErrorCode::kInternal,
            "segmentation loss diverged during proxy training");
    if (log && (it % config.log_every == 0 ||
                it + 1 == config.proxy_iterations)) {
      log(rec);
    }
  }
  return net;
}

InferenceOutput Infer(Network<float>& net, const Sample& sample) {
  Graph<float> g;
  const Sample* batch[] = {&sample};
  const Var x = g.Input(StackBatch(batch));
  const FeatureVars f = ForwardFeatures(g, net, x, Binding::kFrozen);
  const Var logits = ForwardClassifier(g, net, f.high, sample.height,
                                       sample.width, Binding::kFrozen);
  const Var d1 = ForwardDiscriminator(g, net, 1, f.high, Binding::kFrozen);
  const Var d2 = ForwardDiscriminator(g, net, 2, f.mid, Binding::kFrozen);

  // Softmax through the loss node keeps one implementation of the
  // normalization; the ignore-only target makes it a pure forward.
  const auto& z = g.value(logits);
  const int classes = z.dim(1);
  const std::size_t plane = static_cast<std::size_t>(sample.height) * sample.width;
  std::vector<float> hwc(plane * classes);
  std::vector<double> e(classes);
  for (std::size_t j = 0; j < plane; ++j) {
    double zmax = z.data[j];
    for (int l = 1; l < classes; ++l) zmax = std::max<double>(zmax, z.data[l * plane + j]);
    double denom = 0.0;
    for (int l = 0; l < classes; ++l) {
      e[l] = std::exp(static_cast<double>(z.data[l * plane + j]) - zmax);
      denom += e[l];
    }
    for (int l = 0; l < classes; ++l) {
      hwc[j * classes + l] = static_cast<float>(e[l] / denom);
    }
  }
  auto to_map = [](const NdArray<float>& logits_map) {
    std::vector<float> v(logits_map.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = OpenSigmoid(logits_map.data[i]);
    return DiscriminatorMap(logits_map.dim(2), logits_map.dim(3), std::move(v));
  };
  return InferenceOutput{ScoreMap(sample.height, sample.width, classes, std::move(hwc)),
                         to_map(g.value(d1)), to_map(g.value(d2))};
}

LabelMap Predict(Network<float>& net, const Sample& sample) {
  Graph<float> g;
  const Sample* batch[] = {&sample};
  const Var x = g.Input(StackBatch(batch));
  const FeatureVars f = ForwardFeatures(g, net, x, Binding::kFrozen);
  const Var logits = ForwardClassifier(g, net, f.high, sample.height,
                                       sample.width, Binding::kFrozen);
  const auto& z = g.value(logits);
  const int classes = z.dim(1);
  const std::size_t plane = static_cast<std::size_t>(sample.height) * sample.width;
  std::vector<uint8_t> out(plane);
  for (std::size_t j = 0; j < plane; ++j) {
    int best = 0;
    for (int l = 1; l < classes; ++l) {
      if (z.data[l * plane + j] > z.data[best * plane + j]) best = l;
    }
    out[j] = static_cast<uint8_t>(best);
  }
  return LabelMap(sample.height, sample.width, std::move(out));
}

ConfusionMatrix Evaluate(Network<float>& net, std::span<const Sample> samples,
                         int threads) {
  const int classes = net.config.classes;
  std::vector<ConfusionMatrix> partial(
      std::max(1, std::min<int>(threads <= 0 ? DefaultThreadCount() : threads,
                                static_cast<int>(samples.size()))),
      ConfusionMatrix(classes));
  ParallelShards(samples.size(), static_cast<int>(partial.size()),
                 [&](int worker, std::size_t begin, std::size_t end) {
                   for (std::size_t i = begin; i < end; ++i) {
                     Require(samples[i].labels.has_value(),
                             ErrorCode::kInvalidArgument,
                             "evaluation sample " + samples[i].id +
                                 " has no ground truth");
                     partial[worker].Update(*samples[i].labels,
                                            Predict(net, samples[i]));
                   }
                 });
  ConfusionMatrix total(classes);
  for (const auto& p : partial) total.Merge(p);
  return total;
}

Sample LoadSample(const DatasetManifest& manifest, const std::string& image,
                  const std::string& labels, const std::string& id) {
  Sample s;
  s.id = id;
  const RgbImage img = ReadPpm(manifest.Resolve(image));
  s.height = img.height;
  s.width = img.width;
  s.pixels = img.ToNetworkInput();
  if (!labels.empty()) {
    LabelMap map = LabelMap::FromTensor(ReadTensorFile(manifest.Resolve(labels)));
    Require(map.height() == s.height && map.width() == s.width,
            ErrorCode::kValidation,
            "label map of " + id + " does not match its image size");
    s.labels = std::move(map);
  }
  return s;
}

std::vector<Sample> LoadSamples(const DatasetManifest& manifest, Role role,
                                int threads) {
  const auto entries = manifest.WithRole(role);
  std::vector<Sample> out(entries.size());
  ParallelFor(entries.size(), threads, [&](std::size_t i) {
    const ManifestEntry& e = *entries[i];
    switch (role) {
      case Role::kSource:
        out[i] = LoadSample(manifest, e.image, e.gt, e.id);
        break;
      case Role::kTargetTrain:
        out[i] = LoadSample(manifest, e.image, "", e.id);
        break;
      case Role::kTargetEval:
        out[i] = LoadSample(manifest, manifest.EvalImage(e), e.gt, e.id);
        break;
    }
  });
  return out;
}

std::vector<Sample> LoadProxySamples(const DatasetManifest& manifest,
                                     int threads) {
  const auto entries = manifest.WithRole(Role::kTargetTrain);
  std::vector<Sample> out(entries.size());
  ParallelFor(entries.size(), threads, [&](std::size_t i) {
    const ManifestEntry& e = *entries[i];
    Require(!e.proxy.empty(), ErrorCode::kValidation,
            "target entry " + e.id + " has no proxy labels");
    out[i] = LoadSample(manifest, e.image, e.proxy, e.id);
  });
  return out;
}

DatasetManifest InferMaps(Network<float>& net, const DatasetManifest& manifest,
                          const std::filesystem::path& out_dir, int threads) {
  std::filesystem::create_directories(out_dir);
  DatasetManifest result = manifest;
  std::vector<ManifestEntry*> targets;
  for (auto& e : result.entries()) {
    if (e.role == Role::kTargetTrain) targets.push_back(&e);
  }
  Require(!targets.empty(), ErrorCode::kEmptyData,
          "manifest has no target-train entries to infer");
  ParallelFor(targets.size(), threads, [&](std::size_t i) {
    ManifestEntry& e = *targets[i];
    const Sample s = LoadSample(manifest, e.image, "", e.id);
    const InferenceOutput maps = Infer(net, s);
    const auto p_path = out_dir / (e.id + "_P.ten");
    const auto d1_path = out_dir / (e.id + "_D1.ten");
    const auto d2_path = out_dir / (e.id + "_D2.ten");
    WriteTensorFile(p_path, maps.scores.ToTensor());
    WriteTensorFile(d1_path, maps.d1.ToTensor());
    WriteTensorFile(d2_path, maps.d2.ToTensor());
    e.scoremap = result.Relativize(p_path);
    e.d1 = result.Relativize(d1_path);
    e.d2 = result.Relativize(d2_path);
  });
  return result;
}

}  // namespace proxyforge

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

#ifndef PROXYFORGE_TRAINER_H_
#define PROXYFORGE_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "proxyforge/autodiff.h"
#include "proxyforge/manifest.h"
#include "proxyforge/metrics.h"
#include "proxyforge/model.h"
#include "proxyforge/optim.h"
#include "proxyforge/rng.h"
#include "proxyforge/tensor.h"

namespace proxyforge {

struct TrainConfig {
  double lambda_seg = 1.0;
  double lambda1 = 1e-3;
  double lambda2 = 2e-4;
  double seg_learning_rate = 1e-2;   // source pretraining (poly decay)
  double adapt_learning_rate = 1e-3; // F/C during adaptation (constant)
  double disc_learning_rate = 1e-4;  // D1/D2, Adam (constant)
  double proxy_learning_rate = 3e-2; // retraining on proxies (poly decay)
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int pretrain_iterations = 600;
  int adapt_iterations = 600;
  int proxy_iterations = 1500;
  int batch_size = 4;
  int log_every = 50;
  uint64_t seed = 0;

  void Validate() const;
};

// One training image in network layout plus its label map (ground truth or
// proxy; may be absent for unlabeled target images).
struct Sample {
  std::string id;
  int height = 0;
  int width = 0;
  std::vector<float> pixels;  // H x W x 3, scaled to [-0.5, 0.5]
  std::optional<LabelMap> labels;
};

struct LossRecord {
  int iteration = 0;
  double seg = 0.0;
  double adv1 = 0.0;    // generator confusion terms, -log D(F(X_t))
  double adv2 = 0.0;
  double disc1 = 0.0;   // discriminator BCE, source as 1 / target as 0
  double disc2 = 0.0;
  double disc_accuracy = 0.0;
  double target_d_mean = 0.0;  // mean sigmoid output on target patches

  bool finite() const;
  // "iter=... L_seg=... L_adv1=... L_adv2=... L_D1=... L_D2=... D_acc=...".
  std::string ToLogLine() const;
};

// Samples minibatches without replacement per epoch from a private stream.
class BatchSampler {
 public:
  BatchSampler(std::size_t count, uint64_t seed);
  std::vector<std::size_t> Next(int batch_size);

 private:
  std::size_t count_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_;
};

// Mean pixel cross-entropy of C(F(X)) against the batch labels on a fresh
// graph. Throws kEmptyData when no pixel is labeled.
double SegLoss(Network<float>& net, std::span<const Sample* const> batch);

// Multi-adversarial trainer. F/C use SGD with momentum and weight decay,
// D1/D2 use Adam.
class AdaptationTrainer {
 public:
  AdaptationTrainer(Network<float>& net, const TrainConfig& config);

  // Supervised step on lambda_seg * L_seg at the given learning rate.
  double SupervisedStep(std::span<const Sample* const> batch,
                        double learning_rate);

  // Discriminator phase: D1/D2 learn source = 1, target = 0 on features of
  // the current F. Generator phase: F/C minimize
  //   lambda_seg * L_seg + lambda1 * (-log D1(F(X_t))) + lambda2 * (-log D2(F_l(X_t)))
  // against the updated discriminators.
  LossRecord AdversarialStep(std::span<const Sample* const> source,
                             std::span<const Sample* const> target,
                             double seg_learning_rate);

  // Discriminator phase only; F/C untouched.
  LossRecord DiscriminatorStep(std::span<const Sample* const> source,
                               std::span<const Sample* const> target);

 private:
  Network<float>& net_;
  TrainConfig config_;
};

using LogSink = std::function<void(const LossRecord&)>;

// Source pretraining for pretrain_iterations with poly-decayed SGD.
void PretrainSource(Network<float>& net, std::span<const Sample> source,
                    const TrainConfig& config, const LogSink& log = {});

// adapt_iterations adversarial steps at constant learning rates.
void TrainAdversarial(Network<float>& net, std::span<const Sample> source,
                      std::span<const Sample> target,
                      const TrainConfig& config, const LogSink& log = {});

// Fresh initialization, then supervised training on proxy labels for
// proxy_iterations with poly-decayed SGD. Throws kEmptyData when the
// proxies label no pixel.
Network<float> TrainOnProxies(std::span<const Sample> proxies,
                              const ModelConfig& model_config,
                              const TrainConfig& config,
                              const LogSink& log = {});

struct InferenceOutput {
  ScoreMap scores;
  DiscriminatorMap d1;
  DiscriminatorMap d2;
};

InferenceOutput Infer(Network<float>& net, const Sample& sample);
LabelMap Predict(Network<float>& net, const Sample& sample);

// Confusion matrix of model predictions against each sample's labels.
ConfusionMatrix Evaluate(Network<float>& net, std::span<const Sample> samples,
                         int threads = 1);

// Loading helpers over a manifest.
Sample LoadSample(const DatasetManifest& manifest, const std::string& image,
                  const std::string& labels, const std::string& id);
std::vector<Sample> LoadSamples(const DatasetManifest& manifest, Role role,
                                int threads = 1);
// Target-train images labeled with their proxy maps.
std::vector<Sample> LoadProxySamples(const DatasetManifest& manifest,
                                     int threads = 1);

// Writes <id>_P.ten, <id>_D1.ten, <id>_D2.ten for every target-train entry
// and returns the manifest with scoremap/d1/d2 paths set.
DatasetManifest InferMaps(Network<float>& net, const DatasetManifest& manifest,
                          const std::filesystem::path& out_dir,
                          int threads = 1);

}  // namespace proxyforge

#endif  // PROXYFORGE_TRAINER_H_

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

#ifndef PROXYFORGE_MODEL_H_
#define PROXYFORGE_MODEL_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "proxyforge/autodiff.h"

namespace proxyforge {

// Toy segmentation network shape.
//
//   F:  conv3x3 blocks in_channels -> widths[0..2] with strides 1, 2, 2
//       and ReLU; the mid-level tap F_l is the output of block 2 (1/2
//       scale), the high-level output F is block 3 (1/4 scale).
//   C:  1x1 channel reduction + ReLU, then a sum of dilated 3x3 branches
//       (one per rate) producing class logits, bilinearly upsampled to the
//       image size.
//   D1: on F, D2: on F_l. Average pooling brings the input to 1/4 scale,
//       then three conv3x3 + leaky-ReLU + 2x average-pool blocks reach 1/32
//       scale, and a final conv3x3 emits one logit per patch.
struct ModelConfig {
  int classes = 6;
  int in_channels = 3;
  std::vector<int> encoder_widths = {16, 32, 32};
  int head_channels = 16;
  std::vector<int> aspp_rates = {1, 2, 4, 8};
  int disc_channels = 16;
  double leaky_slope = 0.2;

  void Validate() const;
  bool operator==(const ModelConfig& other) const = default;
};

enum class ParamGroup { kSegmentation, kDiscriminator1, kDiscriminator2 };

template <typename T>
struct Network {
  ModelConfig config;
  std::vector<ad::Parameter<T>> params;

  ad::Parameter<T>& Get(std::string_view name);
  const ad::Parameter<T>& Get(std::string_view name) const;
  // F and C parameters, or one discriminator's parameters.
  std::vector<ad::Parameter<T>*> Group(ParamGroup group);

  template <typename U>
  Network<U> Cast() const {
    Network<U> out;
    out.config = config;
    for (const auto& p : params) out.params.push_back(p.template Cast<U>());
    return out;
  }
};

// He-normal initialization for hidden layers; the classifier branches start
// near zero so an untrained model predicts close to uniform scores.
Network<float> InitNetwork(const ModelConfig& config, uint64_t seed);

// 64-bit FNV-1a over the parameter values of a group, for change detection.
uint64_t HashParams(const std::vector<ad::Parameter<float>*>& params);

// Trainable parameters are bound with Graph::Param, frozen ones with
// Graph::Constant.
enum class Binding { kTrainable, kFrozen };

struct FeatureVars {
  ad::Var mid;   // F_l, 1/2 scale
  ad::Var high;  // F, 1/4 scale
};

template <typename T>
FeatureVars ForwardFeatures(ad::Graph<T>& graph, Network<T>& net,
                            ad::Var images, Binding binding);

// Class logits at height x width.
template <typename T>
ad::Var ForwardClassifier(ad::Graph<T>& graph, Network<T>& net, ad::Var high,
                          int height, int width, Binding binding);

// which = 1 reads high-level features, 2 reads mid-level features. Emits
// one logit per patch at 1/32 of the image size.
template <typename T>
ad::Var ForwardDiscriminator(ad::Graph<T>& graph, Network<T>& net, int which,
                             ad::Var features, Binding binding);

}  // namespace proxyforge

#endif  // PROXYFORGE_MODEL_H_

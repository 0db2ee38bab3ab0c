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

#include "proxyforge/model.h"

#include <cmath>
#include <cstring>
#include <string>

#include "proxyforge/error.h"
#include "proxyforge/rng.h"

namespace proxyforge {
namespace {

using ad::ConvSpec;
using ad::Graph;
using ad::NdArray;
using ad::Parameter;
using ad::Var;

constexpr int kKernel = 3;

template <typename T>
Var Bind(Graph<T>& graph, Parameter<T>& p, Binding binding) {
  return binding == Binding::kTrainable ? graph.Param(p) : graph.Constant(p);
}

template <typename T>
Var ConvLayer(Graph<T>& graph, Network<T>& net, const std::string& prefix,
              Var x, const ConvSpec& spec, Binding binding) {
  const Var w = Bind(graph, net.Get(prefix + ".weight"), binding);
  const Var b = Bind(graph, net.Get(prefix + ".bias"), binding);
  return graph.Conv2d(x, w, b, spec);
}

void AddConv(Network<float>& net, Rng& rng, const std::string& prefix,
             int out, int in, int kernel, double stddev) {
  NdArray<float> w({out, in, kernel, kernel});
  for (auto& v : w.data) v = static_cast<float>(rng.Normal() * stddev);
  net.params.emplace_back(prefix + ".weight", std::move(w));
  net.params.emplace_back(prefix + ".bias", NdArray<float>({out}));
}

double HeStd(int in, int kernel) {
  return std::sqrt(2.0 / (static_cast<double>(in) * kernel * kernel));
}

bool InGroup(const std::string& name, ParamGroup group) {
  switch (group) {
    case ParamGroup::kSegmentation:
      return name.starts_with("F.") || name.starts_with("C.");
    case ParamGroup::kDiscriminator1:
      return name.starts_with("D1.");
    case ParamGroup::kDiscriminator2:
      return name.starts_with("D2.");
  }
  return false;
}

}  // namespace

void ModelConfig::Validate() const {
  Require(classes >= 2 && classes < 255, ErrorCode::kInvalidArgument,
          "model needs between 2 and 254 classes");
  Require(in_channels >= 1, ErrorCode::kInvalidArgument,
          "model needs at least one input channel");
  Require(encoder_widths.size() == 3, ErrorCode::kInvalidArgument,
          "encoder has exactly three blocks");
  for (int w : encoder_widths) {
    Require(w >= 1, ErrorCode::kInvalidArgument, "encoder widths must be >= 1");
  }
  Require(head_channels >= 1 && disc_channels >= 1, ErrorCode::kInvalidArgument,
          "head and discriminator widths must be >= 1");
  Require(!aspp_rates.empty(), ErrorCode::kInvalidArgument,
          "classifier needs at least one dilation rate");
  for (int r : aspp_rates) {
    Require(r >= 1, ErrorCode::kInvalidArgument, "dilation rates must be >= 1");
  }
}

template <typename T>
Parameter<T>& Network<T>::Get(std::string_view name) {
  for (auto& p : params) {
    if (p.name == name) return p;
  }
  Fail(ErrorCode::kInvalidArgument,
       "unknown parameter " + std::string(name));
}

template <typename T>
const Parameter<T>& Network<T>::Get(std::string_view name) const {
  for (const auto& p : params) {
    if (p.name == name) return p;
  }
  Fail(ErrorCode::kInvalidArgument,
       "unknown parameter " + std::string(name));
}

template <typename T>
std::vector<Parameter<T>*> Network<T>::Group(ParamGroup group) {
  std::vector<Parameter<T>*> out;
  for (auto& p : params) {
    if (InGroup(p.name, group)) out.push_back(&p);
  }
  return out;
}

Network<float> InitNetwork(const ModelConfig& config, uint64_t seed) {
  config.Validate();
  Network<float> net;
  net.config = config;
  Rng rng(Rng::DeriveSeed(seed, {0x1317}));
  const auto& w = config.encoder_widths;
  AddConv(net, rng, "F.conv1", w[0], config.in_channels, kKernel,
          HeStd(config.in_channels, kKernel));
  AddConv(net, rng, "F.conv2", w[1], w[0], kKernel, HeStd(w[0], kKernel));
  AddConv(net, rng, "F.conv3", w[2], w[1], kKernel, HeStd(w[1], kKernel));
  AddConv(net, rng, "C.reduce", config.head_channels, w[2], 1, HeStd(w[2], 1));
  for (int rate : config.aspp_rates) {
    AddConv(net, rng, "C.aspp" + std::to_string(rate), config.classes,
            config.head_channels, kKernel, 0.01);
  }
  for (int d = 1; d <= 2; ++d) {
    const std::string prefix = "D" + std::to_string(d);
    int in = d == 1 ? w[2] : w[1];
    for (int b = 1; b <= 3; ++b) {
      AddConv(net, rng, prefix + ".conv" + std::to_string(b),
              config.disc_channels, in, kKernel, HeStd(in, kKernel));
      in = config.disc_channels;
    }
    AddConv(net, rng, prefix + ".out", 1, in, kKernel, HeStd(in, kKernel) * 0.1);
  }
  return net;
}

uint64_t HashParams(const std::vector<ad::Parameter<float>*>& params) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto* p : params) {
    for (float v : p->value.data) {
      uint32_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      for (int i = 0; i < 4; ++i) {
        h ^= (bits >> (8 * i)) & 0xff;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

template <typename T>
FeatureVars ForwardFeatures(Graph<T>& graph, Network<T>& net, Var images,
                            Binding binding) {
  const Var h1 = graph.Relu(ConvLayer(graph, net, "F.conv1", images,
                                      ConvSpec{1, 1, 1}, binding));
  const Var h2 = graph.Relu(
      ConvLayer(graph, net, "F.conv2", h1, ConvSpec{2, 1, 1}, binding));
  const Var h3 = graph.Relu(
      ConvLayer(graph, net, "F.conv3", h2, ConvSpec{2, 1, 1}, binding));
  return FeatureVars{h2, h3};
}

template <typename T>
Var ForwardClassifier(Graph<T>& graph, Network<T>& net, Var high, int height,
                      int width, Binding binding) {
  const Var reduced = graph.Relu(
      ConvLayer(graph, net, "C.reduce", high, ConvSpec{1, 0, 1}, binding));
  std::vector<Var> branches;
  for (int rate : net.config.aspp_rates) {
    branches.push_back(ConvLayer(graph, net, "C.aspp" + std::to_string(rate),
                                 reduced, ConvSpec{1, rate, rate}, binding));
  }
  return graph.BilinearUpsample(graph.Sum(branches), height, width);
}

template <typename T>
Var ForwardDiscriminator(Graph<T>& graph, Network<T>& net, int which,
                         Var features, Binding binding) {
  Require(which == 1 || which == 2, ErrorCode::kInvalidArgument,
          "discriminator index must be 1 or 2");
  const std::string prefix = "D" + std::to_string(which);
  const T slope = static_cast<T>(net.config.leaky_slope);
  // Mid-level features sit at 1/2 scale; one extra pooling lines them up
  // with the high-level branch.
  Var x = which == 2 ? graph.AvgPool(features, 2, 2) : features;
  for (int b = 1; b <= 3; ++b) {
    x = ConvLayer(graph, net, prefix + ".conv" + std::to_string(b), x,
                  ConvSpec{1, 1, 1}, binding);
    x = graph.AvgPool(graph.LeakyRelu(x, slope), 2, 2);
  }
  return ConvLayer(graph, net, prefix + ".out", x, ConvSpec{1, 1, 1}, binding);
}

template struct Network<float>;
template struct Network<double>;
template FeatureVars ForwardFeatures(Graph<float>&, Network<float>&, Var,
                                     Binding);
template FeatureVars ForwardFeatures(Graph<double>&, Network<double>&, Var,
                                     Binding);
template Var ForwardClassifier(Graph<float>&, Network<float>&, Var, int, int,
                               Binding);
template Var ForwardClassifier(Graph<double>&, Network<double>&, Var, int, int,
                               Binding);
template Var ForwardDiscriminator(Graph<float>&, Network<float>&, int, Var,
                                  Binding);
template Var ForwardDiscriminator(Graph<double>&, Network<double>&, int, Var,
                                  Binding);

}  // namespace proxyforge

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

#include "proxyforge/gradcheck.h"

#include <functional>

#include "proxyforge/autodiff.h"
#include "proxyforge/model.h"
#include "proxyforge/rng.h"

namespace proxyforge {
namespace {

using ad::Graph;
using ad::NdArray;
using ad::Parameter;
using ad::Var;

// Large enough that roundoff stays far below the 1e-5 budget for the small
// gradients of the composite losses.
constexpr double kEpsilon = 1e-3;
constexpr std::size_t kMaxCoordinates = 48;
constexpr double kReadoutLabel = 0.3;

NdArray<double> RandomArray(Rng& rng, ad::Shape shape, double scale) {
  NdArray<double> a(std::move(shape));
  for (auto& v : a.data) v = rng.Uniform(-scale, scale);
  return a;
}

std::vector<LabelMap> RandomLabels(Rng& rng, int n, int h, int w, int classes) {
  std::vector<LabelMap> out;
  for (int i = 0; i < n; ++i) {
    std::vector<uint8_t> v(static_cast<std::size_t>(h) * w);
    for (auto& x : v) {
      x = rng.Bernoulli(0.15) ? kIgnoreLabel
                              : static_cast<uint8_t>(rng.UniformInt(0, classes - 1));
    }
    out.emplace_back(h, w, std::move(v));
  }
  return out;
}

class Suite {
 public:
  explicit Suite(uint64_t seed) : seed_(seed), rng_(seed) {}

  void Check(const std::string& name, Parameter<double>& p,
             const std::function<Var(Graph<double>&)>& build) {
    const auto r = ad::GradCheck(build, p, kEpsilon, kMaxCoordinates,
                                 Rng::DeriveSeed(seed_, {results_.size()}));
    results_.push_back({name, r.max_relative_error, r.coordinates});
  }

  Rng& rng() { return rng_; }
  std::vector<NamedGradCheck> results() && { return std::move(results_); }

 private:
  uint64_t seed_;
  Rng rng_;
  std::vector<NamedGradCheck> results_;
};

void CheckOps(Suite& s) {
  Rng& rng = s.rng();
  Parameter<double> x("x", RandomArray(rng, {2, 3, 7, 6}, 1.0));
  Parameter<double> w("w", RandomArray(rng, {4, 3, 3, 3}, 0.5));
  Parameter<double> b("b", RandomArray(rng, {4}, 0.5));
  const ad::ConvSpec spec{2, 2, 2};
  auto conv = [&](Graph<double>& g) {
    return g.SigmoidBce(g.Conv2d(g.Param(x), g.Param(w), g.Param(b), spec),
                        kReadoutLabel);
  };
  s.Check("conv2d.input", x, conv);
  s.Check("conv2d.weight", w, conv);
  s.Check("conv2d.bias", b, conv);

  Parameter<double> w1("w1", RandomArray(rng, {5, 3, 1, 1}, 0.5));
  auto conv1 = [&](Graph<double>& g) {
    return g.SigmoidBce(g.Conv2d(g.Param(x), g.Param(w1), ad::ConvSpec{}),
                        kReadoutLabel);
  };
  s.Check("conv1x1.input", x, conv1);
  s.Check("conv1x1.weight", w1, conv1);

  s.Check("avg_pool", x, [&](Graph<double>& g) {
    return g.SigmoidBce(g.AvgPool(g.Param(x), 2, 2), kReadoutLabel);
  });
  s.Check("leaky_relu", x, [&](Graph<double>& g) {
    return g.SigmoidBce(g.LeakyRelu(g.Param(x), 0.2), kReadoutLabel);
  });
  Parameter<double> y("y", RandomArray(rng, {2, 3, 7, 6}, 1.0));
  s.Check("add", x, [&](Graph<double>& g) {
    return g.SigmoidBce(g.Add(g.Param(x), g.Param(y)), kReadoutLabel);
  });
  s.Check("sum", y, [&](Graph<double>& g) {
    const Var terms[] = {g.Param(x), g.Param(y), g.Param(y)};
    return g.SigmoidBce(g.Sum(terms), kReadoutLabel);
  });
  s.Check("scale", x, [&](Graph<double>& g) {
    return g.SigmoidBce(g.Scale(g.Param(x), -1.7), kReadoutLabel);
  });
  Parameter<double> z("z", RandomArray(rng, {2, 2, 7, 6}, 1.0));
  s.Check("concat_channels", z, [&](Graph<double>& g) {
    const Var parts[] = {g.Param(x), g.Param(z)};
    return g.SigmoidBce(g.ConcatChannels(parts), 0.8);
  });
  s.Check("bilinear_upsample", x, [&](Graph<double>& g) {
    return g.SigmoidBce(g.BilinearUpsample(g.Param(x), 13, 11), kReadoutLabel);
  });
  const auto labels = RandomLabels(rng, 2, 7, 6, 3);
  s.Check("softmax_cross_entropy", x, [&](Graph<double>& g) {
    return g.SoftmaxCrossEntropy(g.Param(x), labels);
  });
  s.Check("sigmoid_bce", x, [&](Graph<double>& g) {
    return g.SigmoidBce(g.Param(x), 1.0);
  });
}

void CheckLosses(Suite& s) {
  Rng& rng = s.rng();
  ModelConfig cfg;
  cfg.classes = 3;
  cfg.encoder_widths = {3, 4, 4};
  cfg.head_channels = 3;
  cfg.aspp_rates = {1, 2};
  cfg.disc_channels = 3;
  Network<double> net = InitNetwork(cfg, rng.NextU64()).Cast<double>();
  // Nonzero biases so no unit sits exactly on a kink, and output layers at
  // hidden-layer scale: the near-zero training init would shrink upstream
  // gradients into the roundoff floor of the difference quotient.
  for (auto& p : net.params) {
    if (p.name.ends_with(".bias")) {
      for (auto& v : p.value.data) v = rng.Uniform(-0.05, 0.05);
    } else if (p.name.starts_with("C.aspp") || p.name.ends_with(".out.weight")) {
      for (auto& v : p.value.data) v *= 30.0;
    }
  }
  const int h = 32, w = 32;
  const NdArray<double> xs = RandomArray(rng, {2, 3, h, w}, 0.5);
  const NdArray<double> xt = RandomArray(rng, {2, 3, h, w}, 0.5);
  const auto labels = RandomLabels(rng, 2, h, w, cfg.classes);

  auto seg = [&](Graph<double>& g) {
    const FeatureVars f = ForwardFeatures(g, net, g.Input(xs), Binding::kTrainable);
    const Var logits = ForwardClassifier(g, net, f.high, h, w, Binding::kTrainable);
    return g.SoftmaxCrossEntropy(logits, labels);
  };
  for (const char* name : {"F.conv1.weight", "F.conv3.weight",
                           "C.reduce.weight", "C.aspp2.weight", "C.aspp1.bias"}) {
    s.Check(std::string("seg_loss.") + name, net.Get(name), seg);
  }

  auto disc = [&](Graph<double>& g) {
    const FeatureVars fs = ForwardFeatures(g, net, g.Input(xs), Binding::kFrozen);
    const FeatureVars ft = ForwardFeatures(g, net, g.Input(xt), Binding::kFrozen);
    const Var terms[] = {
        g.SigmoidBce(ForwardDiscriminator(g, net, 1, fs.high, Binding::kTrainable), 1.0),
        g.SigmoidBce(ForwardDiscriminator(g, net, 1, ft.high, Binding::kTrainable), 0.0),
        g.SigmoidBce(ForwardDiscriminator(g, net, 2, fs.mid, Binding::kTrainable), 1.0),
        g.SigmoidBce(ForwardDiscriminator(g, net, 2, ft.mid, Binding::kTrainable), 0.0)};
    return g.Sum(terms);
  };
  for (const char* name : {"D1.conv1.weight", "D1.out.weight", "D2.conv2.weight",
                           "D2.out.bias"}) {
    s.Check(std::string("disc_loss.") + name, net.Get(name), disc);
  }

  auto adv = [&](Graph<double>& g) {
    const FeatureVars fs = ForwardFeatures(g, net, g.Input(xs), Binding::kTrainable);
    const FeatureVars ft = ForwardFeatures(g, net, g.Input(xt), Binding::kTrainable);
    const Var logits = ForwardClassifier(g, net, fs.high, h, w, Binding::kTrainable);
    const Var terms[] = {
        g.SoftmaxCrossEntropy(logits, labels),
        g.Scale(g.SigmoidBce(ForwardDiscriminator(g, net, 1, ft.high, Binding::kFrozen), 1.0), 0.5),
        g.Scale(g.SigmoidBce(ForwardDiscriminator(g, net, 2, ft.mid, Binding::kFrozen), 1.0), 0.25)};
    return g.Sum(terms);
  };
  for (const char* name : {"F.conv1.weight", "F.conv2.weight", "F.conv2.bias",
                           "C.aspp1.weight"}) {
    s.Check(std::string("adversarial_loss.") + name, net.Get(name), adv);
  }
}

}  // namespace

std::vector<NamedGradCheck> RunGradCheckSuite(uint64_t seed) {
  Suite s(seed);
  CheckOps(s);
  CheckLosses(s);
  return std::move(s).results();
}

}  // namespace proxyforge

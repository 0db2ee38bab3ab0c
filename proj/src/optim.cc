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

#include "proxyforge/optim.h"

#include <algorithm>
#include <cmath>

#include "proxyforge/error.h"

namespace proxyforge::ad {
namespace {

template <typename T>
void EnsureState(Parameter<T>& p) {
  if (p.momentum.size() != p.value.size()) p.momentum = NdArray<T>(p.value.shape);
  if (p.second_moment.size() != p.value.size()) {
    p.second_moment = NdArray<T>(p.value.shape);
  }
  Require(p.grad.size() == p.value.size(), ErrorCode::kInternal,
          "parameter " + p.name + " has no gradient");
}

}  // namespace

template <typename T>
void SgdMomentumStep(std::span<Parameter<T>* const> params,
                     const SgdConfig& config) {
  const T lr = static_cast<T>(config.learning_rate);
  const T mu = static_cast<T>(config.momentum);
  const T wd = static_cast<T>(config.weight_decay);
  for (Parameter<T>* p : params) {
    EnsureState(*p);
    auto& w = p->value.data;
    auto& v = p->momentum.data;
    const auto& g = p->grad.data;
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = mu * v[i] + (g[i] + wd * w[i]);
      w[i] -= lr * v[i];
    }
    ++p->steps;
  }
}

template <typename T>
void AdamStep(std::span<Parameter<T>* const> params, const AdamConfig& config) {
  for (Parameter<T>* p : params) {
    EnsureState(*p);
    ++p->steps;
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(p->steps));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(p->steps));
    const T b1 = static_cast<T>(config.beta1);
    const T b2 = static_cast<T>(config.beta2);
    const T step = static_cast<T>(config.learning_rate / c1);
    const T inv_c2 = static_cast<T>(1.0 / c2);
    const T eps = static_cast<T>(config.epsilon);
    auto& w = p->value.data;
    auto& m = p->momentum.data;
    auto& v = p->second_moment.data;
    const auto& g = p->grad.data;
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (T(1) - b1) * g[i];
      v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
      w[i] -= step * m[i] / (std::sqrt(v[i] * inv_c2) + eps);
    }
  }
}

double PolyLearningRate(double base, int iteration, int max_iterations,
                        double power) {
  if (max_iterations <= 0) return base;
  const double progress =
      std::min(1.0, static_cast<double>(iteration) / max_iterations);
  return base * std::pow(1.0 - progress, power);
}

template void SgdMomentumStep<float>(std::span<Parameter<float>* const>,
                                     const SgdConfig&);
template void SgdMomentumStep<double>(std::span<Parameter<double>* const>,
                                      const SgdConfig&);
template void AdamStep<float>(std::span<Parameter<float>* const>,
                              const AdamConfig&);
template void AdamStep<double>(std::span<Parameter<double>* const>,
                               const AdamConfig&);

}  // namespace proxyforge::ad

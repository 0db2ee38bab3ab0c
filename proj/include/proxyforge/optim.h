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

#ifndef PROXYFORGE_OPTIM_H_
#define PROXYFORGE_OPTIM_H_

#include <span>

#include "proxyforge/autodiff.h"

namespace proxyforge::ad {

struct SgdConfig {
  double learning_rate = 4e-3;
  double momentum = 0.9;
  double weight_decay = 5e-4;
};

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// v <- momentum * v + (g + weight_decay * w);  w <- w - lr * v
template <typename T>
void SgdMomentumStep(std::span<Parameter<T>* const> params,
                     const SgdConfig& config);

// Bias-corrected Adam.
template <typename T>
void AdamStep(std::span<Parameter<T>* const> params, const AdamConfig& config);

// Polynomial decay: base * (1 - iter / max_iter) ^ power.
double PolyLearningRate(double base, int iteration, int max_iterations,
                        double power = 0.9);

}  // namespace proxyforge::ad

#endif  // PROXYFORGE_OPTIM_H_

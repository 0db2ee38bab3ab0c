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

#ifndef PROXYFORGE_RNG_H_
#define PROXYFORGE_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace proxyforge {

// Seeded generator with library-independent real-valued draws. The
// distributions in <random> are implementation-defined, so uniforms and
// normals are derived from raw engine output here to keep artifacts
// byte-identical across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // Mixes a root seed with stream identifiers (domain, index, ...) so
  // independent work items get independent, order-free streams.
  static uint64_t DeriveSeed(uint64_t seed,
                             std::initializer_list<uint64_t> stream);

  uint64_t NextU64() { return engine_(); }
  // Uniform in [0, 1).
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform integer in [lo, hi].
  int UniformInt(int lo, int hi);
  double Normal();
  bool Bernoulli(double p) { return Uniform() < p; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace proxyforge

#endif  // PROXYFORGE_RNG_H_

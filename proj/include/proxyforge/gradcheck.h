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

#ifndef PROXYFORGE_GRADCHECK_H_
#define PROXYFORGE_GRADCHECK_H_

#include <cstdint>
#include <string>
#include <vector>

namespace proxyforge {

struct NamedGradCheck {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
};

// Double-precision central-difference checks of every graph op and of the
// segmentation, discriminator and generator losses of a tiny network.
std::vector<NamedGradCheck> RunGradCheckSuite(uint64_t seed);

}  // namespace proxyforge

#endif  // PROXYFORGE_GRADCHECK_H_

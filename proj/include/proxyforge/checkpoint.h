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

#ifndef PROXYFORGE_CHECKPOINT_H_
#define PROXYFORGE_CHECKPOINT_H_

#include <filesystem>

#include "proxyforge/model.h"

namespace proxyforge {

// Checkpoint directory: one ".ten" file per parameter value and optimizer
// buffer plus index.txt:
//
//   proxyforge-checkpoint 1
//   config <key>=<value> ...
//   param <name> dims=<d0>x<d1>... value=<file> momentum=<file>
//         second_moment=<file> steps=<n>
void SaveCheckpoint(const Network<float>& net, const std::filesystem::path& dir);
Network<float> LoadCheckpoint(const std::filesystem::path& dir);

}  // namespace proxyforge

#endif  // PROXYFORGE_CHECKPOINT_H_

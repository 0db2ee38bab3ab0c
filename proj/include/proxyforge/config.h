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

#ifndef PROXYFORGE_CONFIG_H_
#define PROXYFORGE_CONFIG_H_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "proxyforge/model.h"
#include "proxyforge/synthdata.h"
#include "proxyforge/trainer.h"

namespace proxyforge {

// Flat "key = value" settings; '#' starts a comment. Keys are grouped by
// prefix: scene.*, train.*, model.*.
using Settings = std::map<std::string, std::string>;

Settings ParseSettings(std::string_view text);
Settings LoadSettings(const std::filesystem::path& path);

// Apply recognised keys of the matching prefix; unknown keys of that prefix
// raise kInvalidArgument.
void ApplySettings(const Settings& settings, SceneConfig& scene);
void ApplySettings(const Settings& settings, TrainConfig& train);
void ApplySettings(const Settings& settings, ModelConfig& model);

}  // namespace proxyforge

#endif  // PROXYFORGE_CONFIG_H_

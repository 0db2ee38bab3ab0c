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

#include "proxyforge/config.h"

#include <charconv>
#include <functional>
#include <set>

#include "proxyforge/error.h"
#include "proxyforge/tensor_io.h"

namespace proxyforge {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

[[noreturn]] void BadValue(const std::string& key, const std::string& value) {
  Fail(ErrorCode::kInvalidArgument,
       "setting " + key + " has invalid value '" + value + "'");
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto r = std::from_chars(value.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end) BadValue(key, value);
  return out;
}

template <typename T>
std::vector<T> ParseList(const std::string& key, const std::string& value) {
  std::vector<T> out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    std::size_t end = value.find(',', pos);
    if (end == std::string::npos) end = value.size();
    out.push_back(ParseNumber<T>(
        key, std::string(Trim(std::string_view(value).substr(pos, end - pos)))));
    pos = end + 1;
  }
  return out;
}

using Setter = std::function<void(const std::string& key, const std::string&)>;

void ApplyPrefix(const Settings& settings, std::string_view prefix,
                 const std::map<std::string, Setter>& setters) {
  for (const auto& [key, value] : settings) {
    if (!key.starts_with(prefix)) continue;
    const auto it = setters.find(key.substr(prefix.size()));
    Require(it != setters.end(), ErrorCode::kInvalidArgument,
            "unknown setting " + key);
    it->second(key, value);
  }
}

template <typename T>
Setter Number(T& field) {
  return [&field](const std::string& k, const std::string& v) {
    field = ParseNumber<T>(k, v);
  };
}

template <typename T>
Setter List(std::vector<T>& field) {
  return [&field](const std::string& k, const std::string& v) {
    field = ParseList<T>(k, v);
  };
}

Setter Weights(std::array<double, kShapeKinds>& field) {
  return [&field](const std::string& k, const std::string& v) {
    const auto list = ParseList<double>(k, v);
    if (list.size() != kShapeKinds) BadValue(k, v);
    std::copy(list.begin(), list.end(), field.begin());
  };
}

}  // namespace

Settings ParseSettings(std::string_view text) {
  Settings out;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    Require(eq != std::string_view::npos, ErrorCode::kFormat,
            "config line " + std::to_string(line_no) + " is not key = value");
    const std::string key(Trim(line.substr(0, eq)));
    const std::string value(Trim(line.substr(eq + 1)));
    Require(!key.empty() && !value.empty(), ErrorCode::kFormat,
            "config line " + std::to_string(line_no) + " has an empty side");
    Require(out.emplace(key, value).second, ErrorCode::kFormat,
            "config key " + key + " given twice");
  }
  return out;
}

Settings LoadSettings(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  return ParseSettings(std::string(bytes.begin(), bytes.end()));
}

void ApplySettings(const Settings& settings, SceneConfig& scene) {
  ApplyPrefix(settings, "scene.",
              {{"height", Number(scene.height)},
               {"width", Number(scene.width)},
               {"min_shapes", Number(scene.min_shapes)},
               {"max_shapes", Number(scene.max_shapes)},
               {"source_shape_weights", Weights(scene.source_shape_weights)},
               {"target_shape_weights", Weights(scene.target_shape_weights)},
               {"base_noise_sigma", Number(scene.base_noise_sigma)},
               {"hue_rotation_deg", Number(scene.shift.hue_rotation_deg)},
               {"noise_sigma", Number(scene.shift.noise_sigma)},
               {"brightness_scale", Number(scene.shift.brightness_scale)},
               {"texture_frequency", Number(scene.shift.texture_frequency)},
               {"texture_amplitude", Number(scene.shift.texture_amplitude)},
               {"patchiness", Number(scene.shift.patchiness)},
               {"seed", Number(scene.seed)}});
  scene.Validate();
}

void ApplySettings(const Settings& settings, TrainConfig& train) {
  ApplyPrefix(settings, "train.",
              {{"lambda_seg", Number(train.lambda_seg)},
               {"lambda1", Number(train.lambda1)},
               {"lambda2", Number(train.lambda2)},
               {"seg_learning_rate", Number(train.seg_learning_rate)},
               {"adapt_learning_rate", Number(train.adapt_learning_rate)},
               {"disc_learning_rate", Number(train.disc_learning_rate)},
               {"proxy_learning_rate", Number(train.proxy_learning_rate)},
               {"momentum", Number(train.momentum)},
               {"weight_decay", Number(train.weight_decay)},
               {"pretrain_iterations", Number(train.pretrain_iterations)},
               {"adapt_iterations", Number(train.adapt_iterations)},
               {"proxy_iterations", Number(train.proxy_iterations)},
               {"batch_size", Number(train.batch_size)},
               {"log_every", Number(train.log_every)},
               {"seed", Number(train.seed)}});
  train.Validate();
}

void ApplySettings(const Settings& settings, ModelConfig& model) {
  ApplyPrefix(settings, "model.",
              {{"classes", Number(model.classes)},
               {"encoder_widths", List(model.encoder_widths)},
               {"head_channels", Number(model.head_channels)},
               {"aspp_rates", List(model.aspp_rates)},
               {"disc_channels", Number(model.disc_channels)},
               {"leaky_slope", Number(model.leaky_slope)}});
  model.Validate();
}

}  // namespace proxyforge

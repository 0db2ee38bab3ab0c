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

#include "proxyforge/checkpoint.h"

#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>

#include "proxyforge/error.h"
#include "proxyforge/tensor_io.h"

namespace proxyforge {
namespace {

namespace fs = std::filesystem;

constexpr std::string_view kHeader = "proxyforge-checkpoint 1";

std::string JoinInts(const std::vector<int>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<int> SplitInts(std::string_view s, char sep) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t end = s.find(sep, pos);
    if (end == std::string_view::npos) end = s.size();
    int v = 0;
    const auto r = std::from_chars(s.data() + pos, s.data() + end, v);
    Require(r.ec == std::errc() && r.ptr == s.data() + end && end > pos,
            ErrorCode::kFormat, "bad integer list '" + std::string(s) + "'");
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Tensor ToTensor(const ad::NdArray<float>& a) {
  std::vector<uint32_t> dims(a.shape.begin(), a.shape.end());
  return Tensor::Float32(std::move(dims), a.data);
}

ad::NdArray<float> FromTensor(const Tensor& t, const ad::Shape& expected,
                              const std::string& what) {
  const ad::Shape shape(t.dims().begin(), t.dims().end());
  Require(shape == expected, ErrorCode::kValidation,
          what + " has shape " + ad::ShapeString(shape) + ", expected " +
              ad::ShapeString(expected));
  const auto f = t.floats();
  return ad::NdArray<float>(shape, std::vector<float>(f.begin(), f.end()));
}

std::map<std::string, std::string> KeyValues(std::istringstream& in) {
  std::map<std::string, std::string> kv;
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    Require(eq != std::string::npos && eq > 0, ErrorCode::kFormat,
            "checkpoint field '" + tok + "' is not key=value");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

const std::string& Field(const std::map<std::string, std::string>& kv,
                         const std::string& key) {
  const auto it = kv.find(key);
  Require(it != kv.end(), ErrorCode::kFormat,
          "checkpoint index lacks '" + key + "'");
  return it->second;
}

}  // namespace

void SaveCheckpoint(const Network<float>& net, const fs::path& dir) {
  fs::create_directories(dir);
  const ModelConfig& c = net.config;
  std::ostringstream index;
  index << kHeader << '\n';
  index << "config classes=" << c.classes << " in_channels=" << c.in_channels
        << " encoder_widths=" << JoinInts(c.encoder_widths, ',')
        << " head_channels=" << c.head_channels
        << " aspp_rates=" << JoinInts(c.aspp_rates, ',')
        << " disc_channels=" << c.disc_channels
        << " leaky_slope=" << FormatDouble(c.leaky_slope) << '\n';
  for (std::size_t i = 0; i < net.params.size(); ++i) {
    const auto& p = net.params[i];
    const std::string stem = "p" + std::to_string(i);
    WriteTensorFile(dir / (stem + "_value.ten"), ToTensor(p.value));
    WriteTensorFile(dir / (stem + "_momentum.ten"), ToTensor(p.momentum));
    WriteTensorFile(dir / (stem + "_second.ten"), ToTensor(p.second_moment));
    index << "param " << p.name << " dims=" << JoinInts(p.value.shape, 'x')
          << " value=" << stem << "_value.ten momentum=" << stem
          << "_momentum.ten second_moment=" << stem
          << "_second.ten steps=" << p.steps << '\n';
  }
  const std::string text = index.str();
  WriteFileBytes(dir / "index.txt", std::vector<uint8_t>(text.begin(), text.end()));
}

Network<float> LoadCheckpoint(const fs::path& dir) {
  const auto bytes = ReadFileBytes(dir / "index.txt");
  std::istringstream lines(std::string(bytes.begin(), bytes.end()));
  std::string line;
  Require(std::getline(lines, line) && line == kHeader, ErrorCode::kFormat,
          dir.string() + " is not a checkpoint");
  Require(static_cast<bool>(std::getline(lines, line)), ErrorCode::kFormat,
          "checkpoint index lacks a config line");
  std::istringstream cfg_line(line);
  std::string tag;
  cfg_line >> tag;
  Require(tag == "config", ErrorCode::kFormat, "expected config line");
  const auto kv = KeyValues(cfg_line);
  ModelConfig config;
  try {
    config.classes = std::stoi(Field(kv, "classes"));
    config.in_channels = std::stoi(Field(kv, "in_channels"));
    config.encoder_widths = SplitInts(Field(kv, "encoder_widths"), ',');
    config.head_channels = std::stoi(Field(kv, "head_channels"));
    config.aspp_rates = SplitInts(Field(kv, "aspp_rates"), ',');
    config.disc_channels = std::stoi(Field(kv, "disc_channels"));
    config.leaky_slope = std::stod(Field(kv, "leaky_slope"));
  } catch (const std::logic_error&) {
    Fail(ErrorCode::kFormat, "malformed checkpoint config line");
  }
  config.Validate();

  // The architecture fixes which parameters exist; the files supply values.
  Network<float> net = InitNetwork(config, 0);
  std::size_t seen = 0;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::istringstream in(line);
    std::string name;
    in >> tag >> name;
    Require(tag == "param" && !name.empty(), ErrorCode::kFormat,
            "bad checkpoint line '" + line + "'");
    const auto f = KeyValues(in);
    auto& p = net.Get(name);
    const ad::Shape dims = SplitInts(Field(f, "dims"), 'x');
    Require(dims == p.value.shape, ErrorCode::kValidation,
            "parameter " + name + " has the wrong shape");
    p.value = FromTensor(ReadTensorFile(dir / Field(f, "value")), dims, name);
    p.momentum = FromTensor(ReadTensorFile(dir / Field(f, "momentum")), dims,
                            name + " momentum");
    p.second_moment = FromTensor(ReadTensorFile(dir / Field(f, "second_moment")),
                                 dims, name + " second moment");
    p.grad = ad::NdArray<float>(dims);
    try {
      p.steps = std::stoll(Field(f, "steps"));
    } catch (const std::logic_error&) {
      Fail(ErrorCode::kFormat, "bad step count for " + name);
    }
    ++seen;
  }
  Require(seen == net.params.size(), ErrorCode::kValidation,
          "checkpoint lists " + std::to_string(seen) + " of " +
              std::to_string(net.params.size()) + " parameters");
  return net;
}

}  // namespace proxyforge

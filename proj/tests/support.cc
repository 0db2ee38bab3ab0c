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

#include "support.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>

#include <unistd.h>

#include "proxyforge/error.h"

namespace proxyforge::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static int counter = 0;
  Rng rng(static_cast<uint64_t>(std::hash<std::string>{}(tag)) ^
          static_cast<uint64_t>(::getpid()) ^ (uint64_t(++counter) << 40));
  path_ = fs::temp_directory_path() /
          ("proxyforge_" + tag + "_" + std::to_string(rng.NextU64() % 1000000007));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

namespace {

float Quantize(double v, int levels) {
  return static_cast<float>(std::round(v * levels) / levels);
}

// Corner-aligned bilinear sample, rounded to float as stored maps are.
std::vector<float> Resize(const Tensor& t, int height, int width) {
  const int h = static_cast<int>(t.dims()[0]);
  const int w = static_cast<int>(t.dims()[1]);
  const auto in = t.floats();
  if (h == height && w == width) return {in.begin(), in.end()};
  std::vector<float> out;
  for (int y = 0; y < height; ++y) {
    const double fy = height > 1 ? y * (double(h - 1) / (height - 1)) : 0.0;
    const int y0 = std::min(int(fy), h - 1), y1 = std::min(y0 + 1, h - 1);
    for (int x = 0; x < width; ++x) {
      const double fx = width > 1 ? x * (double(w - 1) / (width - 1)) : 0.0;
      const int x0 = std::min(int(fx), w - 1), x1 = std::min(x0 + 1, w - 1);
      const double q[4] = {in[y0 * w + x0], in[y0 * w + x1], in[y1 * w + x0],
                           in[y1 * w + x1]};
      const double top = q[0] + (q[1] - q[0]) * (fx - x0);
      const double bottom = q[2] + (q[3] - q[2]) * (fx - x0);
      const double v = top + (bottom - top) * (fy - y0);
      out.push_back(static_cast<float>(
          std::clamp(v, *std::min_element(q, q + 4), *std::max_element(q, q + 4))));
    }
  }
  return out;
}

std::vector<float> Normalize(const std::vector<float>& v) {
  const double lo = *std::min_element(v.begin(), v.end());
  const double hi = *std::max_element(v.begin(), v.end());
  std::vector<float> out(v.size(), 0.5f);
  if (hi > lo) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      out[i] = static_cast<float>((v[i] - lo) / (hi - lo));
    }
  }
  return out;
}

// (k+1)-th largest of the values with k = floor(p * K), or -inf when every
// value is selected.
double TopThreshold(std::vector<float> values, double p) {
  std::sort(values.begin(), values.end(), std::greater<float>());
  const auto k = static_cast<std::size_t>(
      std::floor(p * static_cast<double>(values.size()) + 1e-9));
  if (k >= values.size()) return -INFINITY;
  return values[k];
}

}  // namespace

ScoreMap RandomScoreMap(Rng& rng, int height, int width, int classes,
                        bool quantized) {
  std::vector<float> v;
  for (int j = 0; j < height * width; ++j) {
    std::vector<double> row(classes);
    double sum = 0;
    // Peaked rows are common in trained models; flat ones create ties.
    const double sharp = rng.Uniform(0.5, 6.0);
    for (auto& r : row) {
      r = std::exp(sharp * rng.Uniform());
      if (quantized) r = std::round(r);
      sum += r;
    }
    for (double r : row) v.push_back(static_cast<float>(r / sum));
  }
  return ScoreMap(height, width, classes, std::move(v));
}

Tensor RandomSigmoidMap(Rng& rng, int height, int width, bool quantized) {
  std::vector<float> v;
  for (int j = 0; j < height * width; ++j) {
    const double u = rng.Uniform(0.02, 0.98);
    v.push_back(quantized ? Quantize(u, 4) : static_cast<float>(u));
  }
  return Tensor::Float32({uint32_t(height), uint32_t(width)}, std::move(v));
}

ProxyInstance RandomProxyInstance(Rng& rng, int max_images, int max_side,
                                  int max_classes) {
  ProxyInstance inst;
  const int n = rng.UniformInt(1, max_images);
  const int h = rng.UniformInt(1, max_side);
  const int w = rng.UniformInt(1, max_side);
  inst.classes = rng.UniformInt(1, max_classes);
  const bool quantized = rng.Bernoulli(0.3);
  for (int i = 0; i < n; ++i) {
    const int dh = rng.UniformInt(1, std::max(1, h / 2));
    const int dw = rng.UniformInt(1, std::max(1, w / 2));
    inst.images.push_back(
        {RandomScoreMap(rng, h, w, inst.classes, quantized),
         RandomSigmoidMap(rng, dh, dw, quantized),
         RandomSigmoidMap(rng, rng.UniformInt(1, std::max(1, h / 2)),
                          rng.UniformInt(1, std::max(1, w / 2)), quantized)});
  }
  return inst;
}

ProxySource SourceOf(const std::vector<ProxyInputs>& images) {
  return {images.size(), [&images](std::size_t i) { return images[i]; }};
}

std::vector<LabelMap> BruteForceProxies(const std::vector<ProxyInputs>& images,
                                        double p1, double p2) {
  const int classes = images.front().scores.classes();
  std::vector<std::vector<float>> adv;
  std::vector<float> all_adv;
  for (const auto& im : images) {
    const int h = im.scores.height(), w = im.scores.width();
    const auto a1 = Normalize(Resize(im.d1, h, w));
    const auto a2 = Normalize(Resize(im.d2, h, w));
    std::vector<float> a(a1.size());
    for (std::size_t j = 0; j < a.size(); ++j) a[j] = (a1[j] + a2[j]) / 2.0f;
    all_adv.insert(all_adv.end(), a.begin(), a.end());
    adv.push_back(std::move(a));
  }
  const double t1 = TopThreshold(all_adv, p1);

  std::vector<std::vector<float>> pools(classes);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const ScoreMap& s = images[i].scores;
    for (std::size_t j = 0; j < s.pixels(); ++j) {
      if (!(adv[i][j] > t1)) continue;
      int best = 0;
      for (int l = 1; l < classes; ++l) {
        if (s.at(j, l) > s.at(j, best)) best = l;
      }
      pools[best].push_back(s.at(j, best));
    }
  }
  std::vector<double> t2(classes);
  for (int l = 0; l < classes; ++l) {
    if (pools[l].empty()) {
      t2[l] = INFINITY;
      continue;
    }
    const double t = TopThreshold(pools[l], p2);
    if (std::isinf(t)) {
      t2[l] = double(*std::min_element(pools[l].begin(), pools[l].end())) *
              (1.0 - 0x1.0p-20);
    } else {
      t2[l] = t;
    }
    t2[l] = std::max(t2[l], 0x1.0p-20);
  }

  std::vector<LabelMap> out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const ScoreMap& s = images[i].scores;
    std::vector<uint8_t> labels(s.pixels(), kIgnoreLabel);
    for (std::size_t j = 0; j < s.pixels(); ++j) {
      int best = 0;
      double best_r = -1.0;
      for (int l = 0; l < classes; ++l) {
        const double r = std::isinf(t2[l]) ? 0.0 : double(s.at(j, l)) / t2[l];
        if (r > best_r) best_r = r, best = l;
      }
      if (best_r > 1.0 && adv[i][j] > t1) labels[j] = static_cast<uint8_t>(best);
    }
    out.emplace_back(s.height(), s.width(), std::move(labels));
  }
  return out;
}

std::vector<LabelMap> PipelineProxies(const std::vector<ProxyInputs>& images,
                                      double p1, double p2, QuantileMode mode,
                                      int threads) {
  std::vector<LabelMap> out;
  GenerateProxies(SourceOf(images), ProxyParams{p1, p2}, {mode, threads},
                  [&](std::size_t, const LabelMap& m) { out.push_back(m); });
  return out;
}

std::string CompareTrees(const fs::path& a, const fs::path& b) {
  auto list = [](const fs::path& root) {
    std::set<std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file()) files.insert(fs::relative(e.path(), root).string());
    }
    return files;
  };
  const auto fa = list(a), fb = list(b);
  if (fa != fb) return "file lists differ";
  for (const auto& f : fa) {
    std::ifstream ia(a / f, std::ios::binary), ib(b / f, std::ios::binary);
    const std::string ca((std::istreambuf_iterator<char>(ia)), {});
    const std::string cb((std::istreambuf_iterator<char>(ib)), {});
    if (ca != cb) return f;
  }
  return {};
}

}  // namespace proxyforge::testing

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

#include "proxyforge/synthdata.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "proxyforge/error.h"
#include "proxyforge/parallel.h"
#include "proxyforge/rng.h"
#include "proxyforge/tensor_io.h"

namespace proxyforge {
namespace {

namespace fs = std::filesystem;

// Stream tags. Layouts depend on the domain; base noise does not, so a null
// shift renders identical pixels for a shared layout.
constexpr uint64_t kLayoutStream = 0x4c41;
constexpr uint64_t kNoiseStream = 0x4e4f;
constexpr uint64_t kShiftStream = 0x5348;

constexpr double kPi = std::numbers::pi;

// Base hue (degrees), saturation and value per class.
struct ClassPalette {
  double hue, sat, val;
};
constexpr ClassPalette kPalette[kSceneClasses] = {
    {210, 0.06, 0.80},  // background
    {30, 0.06, 0.40},   // road
    {0, 0.75, 0.85},    // rectangle
    {180, 0.70, 0.75},  // circle
    {270, 0.60, 0.80},  // triangle
    {90, 0.80, 0.90},   // bar
};

std::array<double, 3> HsvToRgb(double h, double s, double v) {
  h = std::fmod(std::fmod(h, 360.0) + 360.0, 360.0);
  const double c = v * s;
  const double x = c * (1.0 - std::fabs(std::fmod(h / 60.0, 2.0) - 1.0));
  const double m = v - c;
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h / 60.0)) {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
  }
  return {(r + m) * 255.0, (g + m) * 255.0, (b + m) * 255.0};
}

std::array<double, 3> SampleColor(Rng& rng, SceneClass cls) {
  const ClassPalette& p = kPalette[cls];
  // Background and road stay close to gray.
  const double sat_jitter = cls == kBackground || cls == kRoad ? 0.03 : 0.1;
  return HsvToRgb(p.hue + rng.Uniform(-15.0, 15.0),
                  std::clamp(p.sat + rng.Uniform(-sat_jitter, sat_jitter), 0.0, 1.0),
                  std::clamp(p.val + rng.Uniform(-0.1, 0.1), 0.0, 1.0));
}

SceneClass SampleKind(Rng& rng, const std::array<double, kShapeKinds>& w) {
  double total = 0;
  for (double v : w) total += v;
  double u = rng.Uniform() * total;
  for (int k = 0; k < kShapeKinds; ++k) {
    if (u < w[k]) return static_cast<SceneClass>(kRectangle + k);
    u -= w[k];
  }
  return kBar;
}

double Cross(double ax, double ay, double bx, double by) {
  return ax * by - ay * bx;
}

bool Covers(const Shape2D& s, double x, double y) {
  const double dx = x - s.cx, dy = y - s.cy;
  const double c = std::cos(s.angle), sn = std::sin(s.angle);
  const double u = c * dx + sn * dy;
  const double v = -sn * dx + c * dy;
  switch (s.kind) {
    case kRectangle:
    case kBar:
      return std::fabs(u) <= s.a && std::fabs(v) <= s.b;
    case kCircle:
      return dx * dx + dy * dy <= s.a * s.a;
    case kTriangle: {
      double px[3], py[3];
      for (int k = 0; k < 3; ++k) {
        const double t = kPi / 2 + 2 * kPi * k / 3;
        px[k] = s.a * std::cos(t);
        py[k] = -s.a * std::sin(t);
      }
      bool neg = false, pos = false;
      for (int k = 0; k < 3; ++k) {
        const int n = (k + 1) % 3;
        const double d = Cross(px[n] - px[k], py[n] - py[k], u - px[k], v - py[k]);
        neg |= d < 0;
        pos |= d > 0;
      }
      return !(neg && pos);
    }
    default:
      return false;
  }
}

bool IsNullShift(const DomainShift& s) { return s == DomainShift{}; }

// Smooth field in [0, 1] from a few random low-frequency plane waves.
struct SmoothMask {
  struct Wave {
    double kx, ky, phase;
  };
  std::vector<Wave> waves;

  explicit SmoothMask(Rng& rng) {
    for (int i = 0; i < 3; ++i) {
      const double theta = rng.Uniform(0.0, 2 * kPi);
      const double freq = rng.Uniform(0.01, 0.03);
      waves.push_back({freq * std::cos(theta), freq * std::sin(theta),
                       rng.Uniform(0.0, 2 * kPi)});
    }
  }

  double operator()(double x, double y) const {
    double s = 0;
    for (const Wave& w : waves) {
      s += std::sin(2 * kPi * (w.kx * x + w.ky * y) + w.phase);
    }
    // Sharpened so the field splits into clean and corrupted patches.
    return 1.0 / (1.0 + std::exp(-3.0 * s));
  }
};

uint8_t ToByte(double v) {
  return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

std::string IndexId(char prefix, int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%c%04d", prefix, index);
  return buf;
}

}  // namespace

void SceneConfig::Validate() const {
  Require(height >= 32 && width >= 32, ErrorCode::kInvalidArgument,
          "scene images must be at least 32x32");
  Require(min_shapes >= 0 && max_shapes >= min_shapes,
          ErrorCode::kInvalidArgument, "invalid shape count range");
  for (const auto* w : {&source_shape_weights, &target_shape_weights}) {
    double total = 0;
    for (double v : *w) {
      Require(v >= 0, ErrorCode::kInvalidArgument,
              "shape weights must be non-negative");
      total += v;
    }
    Require(total > 0, ErrorCode::kInvalidArgument,
            "shape weights must not all be zero");
  }
  Require(base_noise_sigma >= 0 && shift.noise_sigma >= 0 &&
              shift.texture_amplitude >= 0 && shift.texture_frequency >= 0,
          ErrorCode::kInvalidArgument, "noise and texture must be >= 0");
  Require(shift.brightness_scale > 0, ErrorCode::kInvalidArgument,
          "brightness scale must be positive");
  Require(shift.patchiness >= 0 && shift.patchiness <= 1,
          ErrorCode::kInvalidArgument, "patchiness must lie in [0, 1]");
}

std::array<double, 3> RotateHue(const std::array<double, 3>& rgb,
                                double degrees) {
  if (degrees == 0.0) return rgb;
  // Rotation about the gray axis in RGB space.
  const double t = degrees * kPi / 180.0;
  const double c = std::cos(t), s = std::sin(t);
  const double k = (1.0 - c) / 3.0, q = std::sqrt(1.0 / 3.0) * s;
  const double m[3][3] = {{c + k, k - q, k + q},
                          {k + q, c + k, k - q},
                          {k - q, k + q, c + k}};
  std::array<double, 3> out{};
  for (int i = 0; i < 3; ++i) {
    out[i] = std::clamp(m[i][0] * rgb[0] + m[i][1] * rgb[1] + m[i][2] * rgb[2],
                        0.0, 255.0);
  }
  return out;
}

SceneLayout SampleLayout(const SceneConfig& cfg, Domain domain, int index) {
  cfg.Validate();
  Rng rng(Rng::DeriveSeed(cfg.seed, {kLayoutStream,
                                     static_cast<uint64_t>(domain),
                                     static_cast<uint64_t>(index)}));
  SceneLayout l;
  l.height = cfg.height;
  l.width = cfg.width;
  l.horizon = rng.Uniform(0.5, 0.7) * cfg.height;
  l.horizon_wave = rng.Uniform(1.0, 6.0);
  l.wave_phase = rng.Uniform(0.0, 2 * kPi);
  l.background_color = SampleColor(rng, kBackground);
  l.road_color = SampleColor(rng, kRoad);
  const int n = static_cast<int>(rng.UniformInt(cfg.min_shapes, cfg.max_shapes));
  const double scale = std::min(cfg.height, cfg.width) / 128.0;
  for (int i = 0; i < n; ++i) {
    Shape2D s;
    s.kind = SampleKind(rng, cfg.shape_weights(domain));
    s.cx = rng.Uniform(0.1, 0.9) * cfg.width;
    s.cy = rng.Uniform(0.1, 0.9) * cfg.height;
    s.angle = rng.Uniform(0.0, kPi);
    switch (s.kind) {
      case kRectangle:
        s.a = rng.Uniform(8.0, 16.0) * scale;
        s.b = rng.Uniform(6.0, 12.0) * scale;
        s.angle = rng.Uniform(-0.3, 0.3);
        break;
      case kCircle:
        s.a = s.b = rng.Uniform(7.0, 14.0) * scale;
        break;
      case kTriangle:
        s.a = s.b = rng.Uniform(10.0, 18.0) * scale;
        break;
      default:  // bar
        s.a = rng.Uniform(16.0, 30.0) * scale;
        s.b = rng.Uniform(2.5, 4.0) * scale;
        break;
    }
    s.color = SampleColor(rng, s.kind);
    l.shapes.push_back(s);
  }
  return l;
}

Scene RenderScene(const SceneLayout& layout, const SceneConfig& cfg,
                  Domain domain, int index) {
  const int h = layout.height, w = layout.width;
  const bool shifted = domain == Domain::kTarget && !IsNullShift(cfg.shift);
  const DomainShift& sh = cfg.shift;


  Rng noise(Rng::DeriveSeed(cfg.seed, {kNoiseStream, static_cast<uint64_t>(index)}));
  Rng shift_rng(Rng::DeriveSeed(cfg.seed, {kShiftStream, static_cast<uint64_t>(index)}));
  const SmoothMask mask(shift_rng);
  const double tex_angle = shift_rng.Uniform(0.0, kPi);
  const double tex_kx = std::cos(tex_angle) * sh.texture_frequency;
  const double tex_ky = std::sin(tex_angle) * sh.texture_frequency;

  Scene scene{RgbImage{h, w, std::vector<uint8_t>(std::size_t(h) * w * 3)},
              LabelMap(h, w, std::vector<uint8_t>(std::size_t(h) * w, kBackground))};
  std::vector<uint8_t> labels(std::size_t(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      SceneClass cls = kBackground;
      std::array<double, 3> color = layout.background_color;
      // Mild vertical gradient on the background.
      const double shade = 1.0 - 0.15 * py / h;
      for (double& c : color) c *= shade;
      const double boundary =
          layout.horizon + layout.horizon_wave * std::sin(2 * kPi * px / w + layout.wave_phase);
      if (py >= boundary) {
        cls = kRoad;
        color = layout.road_color;
      }
      for (std::size_t k = 0; k < layout.shapes.size(); ++k) {
        if (Covers(layout.shapes[k], px, py)) {
          cls = layout.shapes[k].kind;
          color = layout.shapes[k].color;
        }
      }
      const std::size_t j = std::size_t(y) * w + x;
      labels[j] = cls;

      double m = 1.0;
      if (shifted && sh.patchiness > 0) {
        m = (1.0 - sh.patchiness) + sh.patchiness * mask(px, py);
      }
      if (shifted) color = RotateHue(color, sh.hue_rotation_deg);
      double tex = 0.0;
      if (shifted && sh.texture_amplitude > 0) {
        tex = sh.texture_amplitude * m *
              std::sin(2 * kPi * (tex_kx * px + tex_ky * py));
      }
      for (int c = 0; c < 3; ++c) {
        double v = color[c];
        if (shifted) v = v * sh.brightness_scale + tex;
        if (cfg.base_noise_sigma > 0) v += cfg.base_noise_sigma * noise.Normal();
        if (shifted && sh.noise_sigma > 0) v += sh.noise_sigma * m * shift_rng.Normal();
        scene.image.pixels[j * 3 + c] = ToByte(v);
      }
    }
  }
  scene.gt = LabelMap(h, w, std::move(labels));
  return scene;
}

Scene GenerateScene(const SceneConfig& cfg, Domain domain, int index) {
  return RenderScene(SampleLayout(cfg, domain, index), cfg, domain, index);
}

DatasetManifest GenerateDataset(const SceneConfig& cfg, int n_source,
                                int n_target, const fs::path& out_dir,
                                int threads) {
  cfg.Validate();
  Require(n_source >= 0 && n_target >= 0, ErrorCode::kInvalidArgument,
          "image counts must be non-negative");
  for (const char* sub : {"source", "target", "eval"}) {
    fs::create_directories(out_dir / sub);
  }
  DatasetManifest m(out_dir);
  ParallelFor(static_cast<std::size_t>(n_source + n_target), threads,
              [&](std::size_t i) {
                const bool src = static_cast<int>(i) < n_source;
                const int idx = src ? static_cast<int>(i)
                                    : static_cast<int>(i) - n_source;
                const Scene s = GenerateScene(
                    cfg, src ? Domain::kSource : Domain::kTarget, idx);
                const std::string id = IndexId(src ? 's' : 't', idx);
                if (src) {
                  WritePpm(out_dir / "source" / (id + ".ppm"), s.image);
                  WriteTensorFile(out_dir / "source" / (id + "_gt.ten"),
                                  s.gt.ToTensor());
                } else {
                  WritePpm(out_dir / "target" / (id + ".ppm"), s.image);
                  WriteTensorFile(out_dir / "eval" / (id + "_gt.ten"),
                                  s.gt.ToTensor());
                }
              });
  for (int i = 0; i < n_source; ++i) {
    const std::string id = IndexId('s', i);
    ManifestEntry e;
    e.role = Role::kSource;
    e.id = id;
    e.image = "source/" + id + ".ppm";
    e.gt = "source/" + id + "_gt.ten";
    m.entries().push_back(e);
  }
  for (int i = 0; i < n_target; ++i) {
    const std::string id = IndexId('t', i);
    ManifestEntry train;
    train.role = Role::kTargetTrain;
    train.id = id;
    train.image = "target/" + id + ".ppm";
    m.entries().push_back(train);
  }
  for (int i = 0; i < n_target; ++i) {
    const std::string id = IndexId('t', i);
    ManifestEntry eval;
    eval.role = Role::kTargetEval;
    eval.id = id;
    eval.gt = "eval/" + id + "_gt.ten";
    m.entries().push_back(eval);
  }
  SaveManifest(m, out_dir / "manifest.txt");
  return m;
}

}  // namespace proxyforge

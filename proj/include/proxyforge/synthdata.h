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

#ifndef PROXYFORGE_SYNTHDATA_H_
#define PROXYFORGE_SYNTHDATA_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "proxyforge/image.h"
#include "proxyforge/manifest.h"
#include "proxyforge/tensor.h"

namespace proxyforge {

// Classes of the synthetic benchmark.
enum SceneClass : uint8_t {
  kBackground = 0,
  kRoad = 1,
  kRectangle = 2,
  kCircle = 3,
  kTriangle = 4,
  kBar = 5,
};
inline constexpr int kSceneClasses = 6;
inline constexpr int kShapeKinds = 4;

enum class Domain { kSource, kTarget };

// Appearance change applied to target renders. All-zero (and a brightness
// scale of 1) means the target renders exactly like the source.
struct DomainShift {
  double hue_rotation_deg = 0.0;
  double noise_sigma = 0.0;       // additive Gaussian noise, 8-bit units
  double brightness_scale = 1.0;  // multiplicative
  double texture_frequency = 0.0; // cycles per pixel of a stripe texture
  double texture_amplitude = 0.0; // 8-bit units at full modulation
  // Smooth spatial mask modulating noise and texture; 0 = uniform.
  double patchiness = 0.0;

  bool operator==(const DomainShift& other) const = default;
};

struct SceneConfig {
  int height = 128;
  int width = 128;
  int min_shapes = 3;
  int max_shapes = 6;
  // Relative sampling weights of rectangle, circle, triangle, bar.
  std::array<double, kShapeKinds> source_shape_weights = {1, 1, 1, 1};
  std::array<double, kShapeKinds> target_shape_weights = {1, 1, 1, 1};
  // Per-pixel noise present in both domains.
  double base_noise_sigma = 10.0;
  DomainShift shift = {.hue_rotation_deg = 30.0,
                       .noise_sigma = 45.0,
                       .brightness_scale = 0.85};
  uint64_t seed = 7;

  void Validate() const;
  const std::array<double, kShapeKinds>& shape_weights(Domain d) const {
    return d == Domain::kSource ? source_shape_weights : target_shape_weights;
  }
};

struct Shape2D {
  SceneClass kind;
  double cx, cy;    // center
  double a, b;      // half extents / radius
  double angle;     // radians, triangles and bars
  std::array<double, 3> color;  // base RGB in [0, 255]
};

// Geometry and base colors of one scene. Independent of the domain shift.
struct SceneLayout {
  int height = 0;
  int width = 0;
  double horizon = 0;      // road band starts below this row
  double horizon_wave = 0; // amplitude of the band boundary
  double wave_phase = 0;
  std::array<double, 3> background_color;
  std::array<double, 3> road_color;
  std::vector<Shape2D> shapes;
};

struct Scene {
  RgbImage image;
  LabelMap gt;
};

// Deterministic in (cfg.seed, domain, index).
SceneLayout SampleLayout(const SceneConfig& cfg, Domain domain, int index);
// Rasterizes a layout; labels come from the same per-pixel coverage test
// that paints the colors, so masks match footprints exactly.
Scene RenderScene(const SceneLayout& layout, const SceneConfig& cfg,
                  Domain domain, int index);
Scene GenerateScene(const SceneConfig& cfg, Domain domain, int index);

// Writes source/<id>.ppm + gt, target/<id>.ppm, eval/<id>_gt.ten and
// manifest.txt under out_dir. Target ground truth is referenced only by
// target-eval entries.
DatasetManifest GenerateDataset(const SceneConfig& cfg, int n_source,
                                int n_target,
                                const std::filesystem::path& out_dir,
                                int threads = 1);

// Rotates the hue of an RGB triple (0..255 floats) by `degrees`.
std::array<double, 3> RotateHue(const std::array<double, 3>& rgb,
                                double degrees);

}  // namespace proxyforge

#endif  // PROXYFORGE_SYNTHDATA_H_

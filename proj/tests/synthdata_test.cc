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

#include <fstream>
#include <iterator>

#include <gtest/gtest.h>

#include "proxyforge/error.h"
#include "proxyforge/manifest.h"
#include "proxyforge/tensor_io.h"
#include "support.h"

namespace proxyforge {
namespace {

namespace fs = std::filesystem;

SceneConfig SmallScene() {
  SceneConfig cfg;
  cfg.height = 48;
  cfg.width = 40;
  return cfg;
}

std::vector<char> FileBytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(SceneTest, DeterministicPerSeedDomainAndIndex) {
  const SceneConfig cfg = SmallScene();
  for (Domain d : {Domain::kSource, Domain::kTarget}) {
    const Scene a = GenerateScene(cfg, d, 3), b = GenerateScene(cfg, d, 3);
    EXPECT_EQ(a.image, b.image);
    EXPECT_EQ(a.gt, b.gt);
  }
  EXPECT_NE(GenerateScene(cfg, Domain::kSource, 3).image,
            GenerateScene(cfg, Domain::kSource, 4).image);
  SceneConfig other = cfg;
  other.seed = cfg.seed + 1;
  EXPECT_NE(GenerateScene(cfg, Domain::kSource, 3).image,
            GenerateScene(other, Domain::kSource, 3).image);
}

TEST(SceneTest, GroundTruthUsesSceneClasses) {
  const SceneConfig cfg = SmallScene();
  for (int i = 0; i < 20; ++i) {
    const Scene s = GenerateScene(cfg, i % 2 ? Domain::kTarget : Domain::kSource, i);
    EXPECT_EQ(s.gt.height(), cfg.height);
    EXPECT_EQ(s.gt.width(), cfg.width);
    EXPECT_NO_THROW(s.gt.CheckClasses(kSceneClasses));
    EXPECT_EQ(s.gt.CountLabeled(), s.gt.pixels());
  }
}

TEST(SceneTest, NullShiftRendersTargetLikeSource) {
  SceneConfig cfg = SmallScene();
  cfg.shift = DomainShift{};
  for (int i = 0; i < 10; ++i) {
    const SceneLayout layout = SampleLayout(cfg, Domain::kSource, i);
    EXPECT_EQ(RenderScene(layout, cfg, Domain::kSource, i).image,
              RenderScene(layout, cfg, Domain::kTarget, i).image);
  }
  // The default shift does change the appearance of the same layout.
  const SceneConfig shifted = SmallScene();
  const SceneLayout layout = SampleLayout(shifted, Domain::kSource, 0);
  EXPECT_NE(RenderScene(layout, shifted, Domain::kSource, 0).image,
            RenderScene(layout, shifted, Domain::kTarget, 0).image);
}

TEST(SceneTest, NullShiftMatchesColorStatistics) {
  SceneConfig cfg = SmallScene();
  cfg.shift = DomainShift{};
  double mean[2][3] = {};
  for (int d = 0; d < 2; ++d) {
    std::size_t n = 0;
    for (int i = 0; i < 100; ++i) {
      const Scene s = GenerateScene(cfg, d ? Domain::kTarget : Domain::kSource, i);
      for (std::size_t j = 0; j < s.image.pixels.size(); ++j) {
        mean[d][j % 3] += s.image.pixels[j];
      }
      n += s.image.pixels.size() / 3;
    }
    for (double& m : mean[d]) m /= static_cast<double>(n);
  }
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(mean[0][c], mean[1][c], 3.0) << c;
}

TEST(SceneTest, ShapeFrequenciesFollowConfiguredSkew) {
  SceneConfig cfg = SmallScene();
  cfg.target_shape_weights = {4, 1, 2, 3};
  std::array<int, kShapeKinds> counts{};
  int total = 0;
  for (int i = 0; i < 100; ++i) {
    for (const Shape2D& s : SampleLayout(cfg, Domain::kTarget, i).shapes) {
      ++counts[s.kind - kRectangle];
      ++total;
    }
  }
  for (int k = 0; k < kShapeKinds; ++k) {
    const double expected = cfg.target_shape_weights[k] / 10.0;
    const double observed = static_cast<double>(counts[k]) / total;
    EXPECT_NEAR(observed, expected, 0.05) << "kind " << k;
  }
}

TEST(SceneTest, LabelsMatchPaintedFootprints) {
  // Without noise or shift, every shape pixel has exactly its shape color.
  SceneConfig cfg = SmallScene();
  cfg.base_noise_sigma = 0;
  cfg.shift = DomainShift{};
  for (int i = 0; i < 10; ++i) {
    const SceneLayout layout = SampleLayout(cfg, Domain::kSource, i);
    const Scene s = RenderScene(layout, cfg, Domain::kSource, i);
    for (std::size_t j = 0; j < s.gt.pixels(); ++j) {
      if (s.gt[j] < kRectangle) continue;
      bool matched = false;
      for (const Shape2D& sh : layout.shapes) {
        if (sh.kind != s.gt[j]) continue;
        bool same = true;
        for (int c = 0; c < 3; ++c) {
          same &= std::abs(s.image.pixels[j * 3 + c] - sh.color[c]) <= 0.5 + 1e-9;
        }
        matched |= same;
      }
      EXPECT_TRUE(matched) << "pixel " << j << " image " << i;
    }
  }
}

TEST(SceneTest, RotateHueKeepsGrayAndCycles) {
  const std::array<double, 3> gray = {100, 100, 100};
  const auto g = RotateHue(gray, 77);
  for (double v : g) EXPECT_NEAR(v, 100, 1e-9);
  const std::array<double, 3> c = {200, 40, 90};
  const auto full = RotateHue(c, 360);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(full[i], c[i], 1e-9);
}

TEST(SceneConfigTest, ValidateRejectsBadValues) {
  SceneConfig cfg;
  cfg.height = 16;
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = SceneConfig();
  cfg.source_shape_weights = {0, 0, 0, 0};
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = SceneConfig();
  cfg.shift.patchiness = 1.5;
  EXPECT_THROW(cfg.Validate(), Error);
}

TEST(GenerateDatasetTest, TreeIsByteIdenticalAcrossRunsAndThreads) {
  testing::TempDir dir("synth");
  const SceneConfig cfg = SmallScene();
  GenerateDataset(cfg, 4, 3, dir / "a", 1);
  GenerateDataset(cfg, 4, 3, dir / "b", 3);
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), dir / "a"));
  }
  EXPECT_EQ(files.size(), 4u * 2 + 3u * 2 + 1u);
  for (const fs::path& f : files) {
    EXPECT_EQ(FileBytes(dir / "a" / f), FileBytes(dir / "b" / f)) << f;
  }
}

TEST(GenerateDatasetTest, TargetGroundTruthIsEvaluationOnly) {
  testing::TempDir dir("synth_roles");
  const DatasetManifest m = GenerateDataset(SmallScene(), 2, 3, dir.path(), 1);
  EXPECT_EQ(m.WithRole(Role::kSource).size(), 2u);
  EXPECT_EQ(m.WithRole(Role::kTargetTrain).size(), 3u);
  EXPECT_EQ(m.WithRole(Role::kTargetEval).size(), 3u);
  for (const ManifestEntry* e : m.WithRole(Role::kTargetTrain)) EXPECT_TRUE(e->gt.empty());
  for (const ManifestEntry* e : m.WithRole(Role::kTargetEval)) {
    EXPECT_FALSE(e->gt.empty());
    EXPECT_EQ(m.EvalImage(*e), m.Find(Role::kTargetTrain, e->id)->image);
  }
  // The saved manifest passes the training-mode contract.
  EXPECT_NO_THROW(LoadManifest(dir / "manifest.txt", {.check_files = true,
                                                       .training_mode = true}));
  const LabelMap gt = LabelMap::FromTensor(
      ReadTensorFile(m.Resolve(m.WithRole(Role::kTargetEval)[0]->gt)));
  EXPECT_EQ(gt, GenerateScene(SmallScene(), Domain::kTarget, 0).gt);
}

}  // namespace
}  // namespace proxyforge

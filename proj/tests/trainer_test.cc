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

#include "proxyforge/trainer.h"

#include <cmath>

#include <gtest/gtest.h>

#include "proxyforge/checkpoint.h"
#include "proxyforge/error.h"
#include "proxyforge/synthdata.h"
#include "proxyforge/tensor_io.h"
#include "support.h"

namespace proxyforge {
namespace {

ModelConfig TinyModel() {
  ModelConfig m;
  m.encoder_widths = {4, 8, 8};
  m.head_channels = 4;
  m.aspp_rates = {1, 2};
  m.disc_channels = 4;
  return m;
}

SceneConfig TinyScene() {
  SceneConfig cfg;
  cfg.height = 32;
  cfg.width = 32;
  cfg.min_shapes = 1;
  cfg.max_shapes = 2;
  return cfg;
}

std::vector<Sample> Samples(Domain domain, int n, bool labeled) {
  const SceneConfig cfg = TinyScene();
  std::vector<Sample> out;
  for (int i = 0; i < n; ++i) {
    Scene s = GenerateScene(cfg, domain, i);
    Sample x;
    x.id = "s" + std::to_string(i);
    x.height = s.image.height;
    x.width = s.image.width;
    x.pixels = s.image.ToNetworkInput();
    if (labeled) x.labels = s.gt;
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<const Sample*> Pointers(const std::vector<Sample>& v) {
  std::vector<const Sample*> out;
  for (const Sample& s : v) out.push_back(&s);
  return out;
}

TrainConfig FastConfig() {
  TrainConfig c;
  c.pretrain_iterations = 3;
  c.adapt_iterations = 3;
  c.proxy_iterations = 3;
  c.batch_size = 2;
  return c;
}

TEST(TrainConfigTest, ValidateRejectsBadValues) {
  TrainConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.lambda1 = -1;
  EXPECT_THROW(c.Validate(), Error);
  c = TrainConfig();
  c.batch_size = 0;
  EXPECT_THROW(c.Validate(), Error);
}

TEST(BatchSamplerTest, EachEpochIsAPermutation) {
  BatchSampler s(5, 3);
  std::vector<int> seen(5, 0);
  for (int i = 0; i < 5; ++i) ++seen[s.Next(1)[0]];
  EXPECT_EQ(seen, std::vector<int>(5, 1));
  BatchSampler a(7, 9), b(7, 9);
  EXPECT_EQ(a.Next(20), b.Next(20));
}

TEST(SegLossTest, UntrainedModelIsNearLogL) {
  Network<float> net = InitNetwork(TinyModel(), 1);
  std::vector<Sample> batch = Samples(Domain::kSource, 2, true);
  Rng rng(2);
  for (Sample& s : batch) {
    std::vector<uint8_t> v(s.height * s.width);
    for (auto& x : v) x = static_cast<uint8_t>(rng.UniformInt(0, 5));
    s.labels = LabelMap(s.height, s.width, std::move(v));
  }
  const double loss = SegLoss(net, Pointers(batch));
  EXPECT_NEAR(loss, std::log(6.0), 0.1 * std::log(6.0));
}

TEST(SegLossTest, MatchesPerPixelOracleOnExportedScores) {
  Network<float> net = InitNetwork(TinyModel(), 3);
  const std::vector<Sample> batch = Samples(Domain::kSource, 1, true);
  const ScoreMap p = Infer(net, batch[0]).scores;
  const LabelMap& gt = *batch[0].labels;
  double sum = 0.0;
  for (std::size_t j = 0; j < gt.pixels(); ++j) {
    sum -= std::log(static_cast<double>(p.at(j, gt[j])));
  }
  EXPECT_NEAR(SegLoss(net, Pointers(batch)), sum / gt.pixels(), 1e-4);
}

TEST(SegLossTest, AllIgnoredLabelsThrow) {
  Network<float> net = InitNetwork(TinyModel(), 1);
  std::vector<Sample> batch = Samples(Domain::kSource, 1, true);
  batch[0].labels = LabelMap(32, 32, std::vector<uint8_t>(32 * 32, kIgnoreLabel));
  EXPECT_THROW(SegLoss(net, Pointers(batch)), Error);
}

TEST(AdversarialStepTest, ZeroWeightsMatchSupervisedTrajectory) {
  const auto src = Samples(Domain::kSource, 2, true);
  const auto tgt = Samples(Domain::kTarget, 2, false);
  TrainConfig cfg = FastConfig();
  cfg.lambda1 = 0;
  cfg.lambda2 = 0;
  Network<float> a = InitNetwork(TinyModel(), 5);
  Network<float> b = InitNetwork(TinyModel(), 5);
  AdaptationTrainer ta(a, cfg), tb(b, cfg);
  for (int it = 0; it < 3; ++it) {
    ta.AdversarialStep(Pointers(src), Pointers(tgt), 1e-2);
    tb.SupervisedStep(Pointers(src), 1e-2);
  }
  EXPECT_EQ(HashParams(a.Group(ParamGroup::kSegmentation)),
            HashParams(b.Group(ParamGroup::kSegmentation)));
}

TEST(AdversarialStepTest, PhasesTouchOnlyTheirParameters) {
  const auto src = Samples(Domain::kSource, 2, true);
  const auto tgt = Samples(Domain::kTarget, 2, false);
  Network<float> net = InitNetwork(TinyModel(), 6);
  AdaptationTrainer trainer(net, FastConfig());
  const uint64_t seg = HashParams(net.Group(ParamGroup::kSegmentation));
  const uint64_t d1 = HashParams(net.Group(ParamGroup::kDiscriminator1));
  const uint64_t d2 = HashParams(net.Group(ParamGroup::kDiscriminator2));
  trainer.DiscriminatorStep(Pointers(src), Pointers(tgt));
  EXPECT_EQ(HashParams(net.Group(ParamGroup::kSegmentation)), seg);
  EXPECT_NE(HashParams(net.Group(ParamGroup::kDiscriminator1)), d1);
  EXPECT_NE(HashParams(net.Group(ParamGroup::kDiscriminator2)), d2);

  const uint64_t d1_before = HashParams(net.Group(ParamGroup::kDiscriminator1));
  trainer.SupervisedStep(Pointers(src), 1e-2);
  EXPECT_EQ(HashParams(net.Group(ParamGroup::kDiscriminator1)), d1_before);
  EXPECT_NE(HashParams(net.Group(ParamGroup::kSegmentation)), seg);
}

TEST(AdversarialStepTest, LossRecordIsFinite) {
  const auto src = Samples(Domain::kSource, 2, true);
  const auto tgt = Samples(Domain::kTarget, 2, false);
  Network<float> net = InitNetwork(TinyModel(), 7);
  AdaptationTrainer trainer(net, FastConfig());
  const LossRecord r = trainer.AdversarialStep(Pointers(src), Pointers(tgt), 1e-3);
  EXPECT_TRUE(r.finite());
  EXPECT_GT(r.disc1, 0.0);
  EXPECT_GE(r.disc_accuracy, 0.0);
  EXPECT_LE(r.disc_accuracy, 1.0);
  EXPECT_NE(r.ToLogLine().find("L_adv1="), std::string::npos);
}

TEST(DiscriminatorTest, SeparableInputsAreLearned) {
  // Source images are dark, target images bright: with a frozen generator
  // the features are linearly separable by their mean.
  auto make = [](float level, int n) {
    std::vector<Sample> out;
    Rng rng(static_cast<uint64_t>(level * 100 + 50));
    for (int i = 0; i < n; ++i) {
      Sample s;
      s.id = "x" + std::to_string(i);
      s.height = s.width = 32;
      s.pixels.resize(32 * 32 * 3);
      for (auto& v : s.pixels) v = level + static_cast<float>(rng.Uniform(-0.05, 0.05));
      out.push_back(std::move(s));
    }
    return out;
  };
  const auto src = make(-0.4f, 4), tgt = make(0.4f, 4);
  Network<float> net = InitNetwork(TinyModel(), 8);
  TrainConfig cfg = FastConfig();
  cfg.disc_learning_rate = 1e-2;
  AdaptationTrainer trainer(net, cfg);
  LossRecord r;
  for (int it = 0; it < 200; ++it) r = trainer.DiscriminatorStep(Pointers(src), Pointers(tgt));
  EXPECT_LT(0.5 * r.disc1, 0.1);
  EXPECT_LT(0.5 * r.disc2, 0.1);
  EXPECT_DOUBLE_EQ(r.disc_accuracy, 1.0);
}

TEST(TrainingTest, FixedSeedRunsAreBitIdentical) {
  const auto src = Samples(Domain::kSource, 3, true);
  const auto tgt = Samples(Domain::kTarget, 3, false);
  auto run = [&] {
    Network<float> net = InitNetwork(TinyModel(), 9);
    PretrainSource(net, src, FastConfig());
    TrainAdversarial(net, src, tgt, FastConfig());
    return net;
  };
  const Network<float> a = run(), b = run();
  ASSERT_EQ(a.params.size(), b.params.size());
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    EXPECT_EQ(a.params[i].value, b.params[i].value) << a.params[i].name;
  }
}

TEST(TrainingTest, LogSinkReceivesFiniteRecords) {
  const auto src = Samples(Domain::kSource, 2, true);
  TrainConfig cfg = FastConfig();
  cfg.log_every = 1;
  Network<float> net = InitNetwork(TinyModel(), 10);
  int calls = 0;
  PretrainSource(net, src, cfg, [&](const LossRecord& r) {
    ++calls;
    EXPECT_TRUE(r.finite());
  });
  EXPECT_EQ(calls, 3);
}

TEST(TrainOnProxiesTest, AllIgnoredProxiesAreEmptyData) {
  std::vector<Sample> px = Samples(Domain::kTarget, 2, false);
  for (Sample& s : px) {
    s.labels = LabelMap(32, 32, std::vector<uint8_t>(32 * 32, kIgnoreLabel));
  }
  try {
    TrainOnProxies(px, TinyModel(), FastConfig());
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyData);
  }
}

TEST(TrainOnProxiesTest, IsIndependentOfAnyPriorModel) {
  const auto px = Samples(Domain::kTarget, 2, true);
  const Network<float> a = TrainOnProxies(px, TinyModel(), FastConfig());
  const Network<float> b = TrainOnProxies(px, TinyModel(), FastConfig());
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    EXPECT_EQ(a.params[i].value, b.params[i].value);
  }
}

TEST(InferTest, ExportedMapsAreValid) {
  Network<float> net = InitNetwork(TinyModel(), 11);
  const auto s = Samples(Domain::kTarget, 1, false);
  const InferenceOutput out = Infer(net, s[0]);
  EXPECT_EQ(out.scores.height(), 32);
  EXPECT_EQ(out.scores.classes(), 6);
  // Discriminator maps are at 1/32 scale; their constructors enforce (0,1).
  EXPECT_EQ(out.d1.height(), 1);
  EXPECT_EQ(out.d2.width(), 1);
  EXPECT_EQ(Predict(net, s[0]), ArgmaxChannel(out.scores));
}

TEST(CheckpointTest, RoundTripAndReexportAreByteIdentical) {
  testing::TempDir dir("checkpoint");
  Network<float> net = InitNetwork(TinyModel(), 12);
  const auto src = Samples(Domain::kSource, 2, true);
  PretrainSource(net, src, FastConfig());  // non-trivial optimizer state
  SaveCheckpoint(net, dir / "ck");
  Network<float> back = LoadCheckpoint(dir / "ck");
  EXPECT_EQ(back.config, net.config);
  ASSERT_EQ(back.params.size(), net.params.size());
  for (std::size_t i = 0; i < net.params.size(); ++i) {
    EXPECT_EQ(back.params[i].name, net.params[i].name);
    EXPECT_EQ(back.params[i].value, net.params[i].value);
    EXPECT_EQ(back.params[i].momentum, net.params[i].momentum);
    EXPECT_EQ(back.params[i].steps, net.params[i].steps);
  }
  const auto tgt = Samples(Domain::kTarget, 1, false);
  const InferenceOutput a = Infer(net, tgt[0]), b = Infer(back, tgt[0]);
  EXPECT_EQ(EncodeTensor(a.scores.ToTensor()), EncodeTensor(b.scores.ToTensor()));
  EXPECT_EQ(EncodeTensor(a.d1.ToTensor()), EncodeTensor(b.d1.ToTensor()));
  EXPECT_THROW(LoadCheckpoint(dir / "missing"), Error);
}

TEST(CheckpointTest, ForeignSeedChangesHash) {
  EXPECT_NE(HashParams(InitNetwork(TinyModel(), 1).Group(ParamGroup::kSegmentation)),
            HashParams(InitNetwork(TinyModel(), 2).Group(ParamGroup::kSegmentation)));
}

}  // namespace
}  // namespace proxyforge

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

#include "proxyforge/cli.h"

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "proxyforge/manifest.h"
#include "proxyforge/tensor_io.h"
#include "support.h"

namespace proxyforge {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun Invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

// Small benchmark and network so the whole pipeline runs in seconds. At 32x32
// the discriminator map collapses to one value and refocusing selects nothing.
void WriteTinyConfig(const fs::path& path) {
  std::ofstream(path) << "scene.height = 64\nscene.width = 64\n"
                         "train.pretrain_iterations = 60\ntrain.adapt_iterations = 3\n"
                         "train.proxy_iterations = 3\ntrain.batch_size = 2\n"
                         "model.encoder_widths = 4, 8, 8\nmodel.head_channels = 4\n"
                         "model.aspp_rates = 1, 2\nmodel.disc_channels = 4\n";
}

TEST(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(Invoke({}).code, 2);
  EXPECT_EQ(Invoke({"frobnicate"}).code, 2);
  const CliRun r = Invoke({"synth"});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("error code=usage exit=2 ", 0), 0u) << r.err;
  EXPECT_EQ(Invoke({"eval", "--manifest", "m.txt"}).code, 2);
  EXPECT_EQ(Invoke({"--help"}).code, 0);
}

TEST(CliTest, ErrorsAreOneMachineParseableLine) {
  testing::TempDir dir("cli_errors");
  const CliRun missing = Invoke({"infer", "--manifest", (dir / "nope.txt").string(),
                              "--checkpoint", "ck", "--out", "o"});
  EXPECT_EQ(missing.code, 3);
  EXPECT_EQ(missing.err.rfind("error code=io exit=3 message=", 0), 0u) << missing.err;
  EXPECT_EQ(std::count(missing.err.begin(), missing.err.end(), '\n'), 1);

  std::ofstream(dir / "bad.txt") << "not a manifest\n";
  EXPECT_EQ(Invoke({"proxy", "--manifest", (dir / "bad.txt").string(), "--out", "o"}).code, 4);

  std::ofstream(dir / "cfg.txt") << "scene.unknown = 1\n";
  EXPECT_EQ(Invoke({"--config", (dir / "cfg.txt").string(), "synth", "--out",
                 (dir / "d").string()})
                .code,
            7);
  std::ofstream(dir / "m.txt") << "proxyforge-manifest 1\nroot .\n";
  EXPECT_EQ(Invoke({"proxy", "--manifest", (dir / "m.txt").string(), "--out",
                 (dir / "o").string(), "--p1", "1.5"})
                .code,
            7);
  EXPECT_EQ(Invoke({"eval", "--manifest", (dir / "m.txt").string(), "--pred-dir", "x"}).code,
            6);
}

TEST(CliTest, EvalOfGroundTruthAsPredictionScoresOne) {
  testing::TempDir dir("cli_eval");
  WriteTinyConfig(dir / "cfg.txt");
  const std::string cfg = (dir / "cfg.txt").string();
  ASSERT_EQ(Invoke({"--config", cfg, "synth", "--out", (dir / "d").string(), "--source", "2",
                 "--target", "3"})
                .code,
            0);
  const DatasetManifest m = LoadManifest(dir / "d" / "manifest.txt");
  fs::create_directories(dir / "pred");
  for (const ManifestEntry* e : m.WithRole(Role::kTargetEval)) {
    fs::copy_file(m.Resolve(e->gt), dir / "pred" / (e->id + ".ten"));
  }
  const CliRun r = Invoke({"eval", "--manifest", (dir / "d" / "manifest.txt").string(),
                        "--pred-dir", (dir / "pred").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("miou=1.000000\n"), std::string::npos) << r.out;
}

TEST(CliTest, GradcheckSubcommandPasses) {
  const CliRun r = Invoke({"--seed", "3", "gradcheck"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

TEST(CliTest, EndToEndPipelineEmitsAllReports) {
  testing::TempDir dir("cli_e2e");
  WriteTinyConfig(dir / "cfg.txt");
  auto run = [&](std::vector<std::string> args) {
    args.insert(args.begin(), {"--config", (dir / "cfg.txt").string(), "--threads", "2"});
    const CliRun r = Invoke(args);
    EXPECT_EQ(r.code, 0) << args[3] << ": " << r.err;
    return r;
  };
  const std::string d = dir.path().string();
  run({"synth", "--out", d + "/data", "--source", "4", "--target", "4"});
  const CliRun adapt = run({"train-adapt", "--manifest", d + "/data/manifest.txt", "--out",
                            d + "/ck_adv"});
  EXPECT_NE(adapt.out.find("phase=pretrain iter=0 "), std::string::npos);
  EXPECT_NE(adapt.out.find("phase=adapt iter=2 "), std::string::npos);
  run({"infer", "--manifest", d + "/data/manifest.txt", "--checkpoint", d + "/ck_adv",
       "--out", d + "/maps"});
  EXPECT_TRUE(fs::exists(dir / "maps" / "t0000_D2.ten"));
  const CliRun px = run({"proxy", "--manifest", d + "/maps/manifest.txt", "--out", d + "/px"});
  EXPECT_NE(px.out.find("\"t1\""), std::string::npos) << px.out;
  run({"train-proxy", "--manifest", d + "/px/manifest.txt", "--out", d + "/ck_px"});
  const CliRun ev = run({"eval", "--manifest", d + "/px/manifest.txt", "--checkpoint",
                         d + "/ck_px", "--report", d + "/report.txt"});
  EXPECT_NE(ev.out.find("miou="), std::string::npos);
  EXPECT_NE(ev.out.find("proxy.precision="), std::string::npos);
  std::ifstream report(dir / "report.txt");
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(report), {}), ev.out);
}

}  // namespace
}  // namespace proxyforge

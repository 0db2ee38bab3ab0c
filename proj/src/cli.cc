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

#include <filesystem>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "proxyforge/checkpoint.h"
#include "proxyforge/config.h"
#include "proxyforge/error.h"
#include "proxyforge/gradcheck.h"
#include "proxyforge/metrics.h"
#include "proxyforge/parallel.h"
#include "proxyforge/proxy.h"
#include "proxyforge/synthdata.h"
#include "proxyforge/tensor_io.h"
#include "proxyforge/trainer.h"

namespace proxyforge {
namespace {

namespace fs = std::filesystem;

struct GlobalFlags {
  std::optional<uint64_t> seed;
  int threads = 0;
  std::string config;
};

struct Configs {
  SceneConfig scene;
  TrainConfig train;
  ModelConfig model;
};

Configs ResolveConfigs(const GlobalFlags& g) {
  Configs c;
  if (!g.config.empty()) {
    const Settings s = LoadSettings(g.config);
    for (const auto& [key, value] : s) {
      Require(key.starts_with("scene.") || key.starts_with("train.") ||
                  key.starts_with("model."),
              ErrorCode::kInvalidArgument, "unknown setting " + key);
    }
    ApplySettings(s, c.scene);
    ApplySettings(s, c.train);
    ApplySettings(s, c.model);
  }
  if (g.seed) {
    c.scene.seed = *g.seed;
    c.train.seed = *g.seed;
  }
  return c;
}

int Threads(const GlobalFlags& g) {
  return g.threads <= 0 ? DefaultThreadCount() : g.threads;
}

LogSink StreamSink(std::ostream& out, const std::string& phase) {
  return [&out, phase](const LossRecord& r) {
    out << "phase=" << phase << ' ' << r.ToLogLine() << '\n';
  };
}

QuantileMode ParseMode(const std::string& s) {
  if (s == "auto") return QuantileMode::kAuto;
  if (s == "exact") return QuantileMode::kExact;
  if (s == "histogram") return QuantileMode::kHistogram;
  Fail(ErrorCode::kInvalidArgument, "unknown quantile mode " + s);
}

void WriteText(const fs::path& path, const std::string& text) {
  WriteFileBytes(path, std::vector<uint8_t>(text.begin(), text.end()));
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app("Proxy-label generation and toy domain adaptation", "proxyforge");
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--seed", g.seed, "Seed for data generation and training");
  app.add_option("--threads", g.threads, "Worker threads (0 = auto)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--config", g.config, "Settings file (key = value)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate the synthetic benchmark");
  std::string synth_out;
  int n_source = 200, n_target = 200;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--source", n_source, "Source images")->check(CLI::NonNegativeNumber);
  synth->add_option("--target", n_target, "Target images")->check(CLI::NonNegativeNumber);

  // train-adapt
  auto* adapt = app.add_subcommand("train-adapt", "Source pretraining plus multi-adversarial adaptation");
  std::string adapt_manifest, adapt_out, adapt_init;
  std::optional<double> lambda1, lambda2;
  std::optional<int> pretrain_iters, adapt_iters;
  adapt->add_option("--manifest", adapt_manifest, "Dataset manifest")->required();
  adapt->add_option("--out", adapt_out, "Checkpoint directory")->required();
  adapt->add_option("--init", adapt_init, "Start from this checkpoint and skip pretraining");
  adapt->add_option("--lambda1", lambda1, "Weight of the high-level adversarial term");
  adapt->add_option("--lambda2", lambda2, "Weight of the mid-level adversarial term");
  adapt->add_option("--pretrain-iterations", pretrain_iters);
  adapt->add_option("--adapt-iterations", adapt_iters);

  // infer
  auto* infer = app.add_subcommand("infer", "Export scoremaps and discriminator maps");
  std::string infer_manifest, infer_ckpt, infer_out;
  infer->add_option("--manifest", infer_manifest)->required();
  infer->add_option("--checkpoint", infer_ckpt)->required();
  infer->add_option("--out", infer_out)->required();

  // proxy
  auto* proxy = app.add_subcommand("proxy", "Generate proxy labels");
  std::string proxy_manifest, proxy_out, proxy_mode = "auto";
  ProxyParams params;
  proxy->add_option("--manifest", proxy_manifest)->required();
  proxy->add_option("--out", proxy_out)->required();
  proxy->add_option("--p1", params.p1, "Adversarial-confidence fraction kept");
  proxy->add_option("--p2", params.p2, "Per-class fraction kept");
  proxy->add_option("--mode", proxy_mode, "auto, exact or histogram");

  // train-proxy
  auto* tproxy = app.add_subcommand("train-proxy", "Train a fresh model on proxy labels");
  std::string tp_manifest, tp_out;
  std::optional<int> proxy_iters;
  tproxy->add_option("--manifest", tp_manifest)->required();
  tproxy->add_option("--out", tp_out)->required();
  tproxy->add_option("--iterations", proxy_iters);

  // eval
  auto* eval = app.add_subcommand("eval", "mIoU and proxy quality on target ground truth");
  std::string eval_manifest, eval_ckpt, eval_pred, eval_out;
  eval->add_option("--manifest", eval_manifest)->required();
  auto* ck = eval->add_option("--checkpoint", eval_ckpt, "Model to evaluate");
  auto* pd = eval->add_option("--pred-dir", eval_pred,
                              "Directory of <id>.ten label maps to evaluate");
  ck->excludes(pd);
  eval->add_option("--report", eval_out, "Also write the report to this file");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  double gc_tolerance = 1e-5;
  gc->add_option("--tolerance", gc_tolerance);

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error code=usage exit=2 message=" << e.what() << '\n';
    err << app.help();
    return static_cast<int>(ErrorCode::kUsage);
  }

  try {
    const Configs cfg = ResolveConfigs(g);
    const int threads = Threads(g);

    if (synth->parsed()) {
      const DatasetManifest m =
          GenerateDataset(cfg.scene, n_source, n_target, synth_out, threads);
      out << "wrote " << m.entries().size() << " manifest entries to "
          << (fs::path(synth_out) / "manifest.txt").string() << '\n';
    } else if (adapt->parsed()) {
      TrainConfig train = cfg.train;
      if (lambda1) train.lambda1 = *lambda1;
      if (lambda2) train.lambda2 = *lambda2;
      if (pretrain_iters) train.pretrain_iterations = *pretrain_iters;
      if (adapt_iters) train.adapt_iterations = *adapt_iters;
      train.Validate();
      const DatasetManifest m =
          LoadManifest(adapt_manifest, {.check_files = true, .training_mode = true});
      const auto source = LoadSamples(m, Role::kSource, threads);
      const auto target = LoadSamples(m, Role::kTargetTrain, threads);
      Require(!source.empty() && !target.empty(), ErrorCode::kEmptyData,
              "training needs source and target-train entries");
      Network<float> net = adapt_init.empty() ? InitNetwork(cfg.model, train.seed)
                                              : LoadCheckpoint(adapt_init);
      if (adapt_init.empty()) {
        PretrainSource(net, source, train, StreamSink(out, "pretrain"));
      }
      TrainAdversarial(net, source, target, train, StreamSink(out, "adapt"));
      SaveCheckpoint(net, adapt_out);
      out << "checkpoint=" << adapt_out << '\n';
    } else if (infer->parsed()) {
      const DatasetManifest m = LoadManifest(infer_manifest);
      Network<float> net = LoadCheckpoint(infer_ckpt);
      const DatasetManifest result = InferMaps(net, m, infer_out, threads);
      SaveManifest(result, fs::path(infer_out) / "manifest.txt");
      out << "manifest=" << (fs::path(infer_out) / "manifest.txt").string() << '\n';
    } else if (proxy->parsed()) {
      params.Validate();
      const DatasetManifest m = LoadManifest(proxy_manifest);
      const PipelineResult r = RunPipeline(
          m, params, proxy_out, {.mode = ParseMode(proxy_mode), .threads = threads});
      out << r.report.ToJson();
      out << "manifest=" << (fs::path(proxy_out) / "manifest.txt").string() << '\n';
    } else if (tproxy->parsed()) {
      TrainConfig train = cfg.train;
      if (proxy_iters) train.proxy_iterations = *proxy_iters;
      train.Validate();
      const DatasetManifest m = LoadManifest(tp_manifest);
      const auto samples = LoadProxySamples(m, threads);
      Require(!samples.empty(), ErrorCode::kEmptyData, "no proxy-labeled images");
      Network<float> net =
          TrainOnProxies(samples, cfg.model, train, StreamSink(out, "proxy"));
      SaveCheckpoint(net, tp_out);
      out << "checkpoint=" << tp_out << '\n';
    } else if (eval->parsed()) {
      Require(!eval_ckpt.empty() || !eval_pred.empty(), ErrorCode::kUsage,
              "eval needs --checkpoint or --pred-dir");
      const DatasetManifest m = LoadManifest(eval_manifest);
      const auto gt_entries = m.WithRole(Role::kTargetEval);
      Require(!gt_entries.empty(), ErrorCode::kEmptyData,
              "manifest has no target-eval entries");
      std::ostringstream report;
      int classes = cfg.model.classes;
      std::optional<ConfusionMatrix> cm;
      if (!eval_ckpt.empty()) {
        Network<float> net = LoadCheckpoint(eval_ckpt);
        classes = net.config.classes;
        const auto samples = LoadSamples(m, Role::kTargetEval, threads);
        cm = Evaluate(net, samples, threads);
      } else {
        cm.emplace(classes);
        for (const ManifestEntry* e : gt_entries) {
          const LabelMap gt = LabelMap::FromTensor(ReadTensorFile(m.Resolve(e->gt)));
          const LabelMap pred = LabelMap::FromTensor(
              ReadTensorFile(fs::path(eval_pred) / (e->id + ".ten")));
          cm->Update(gt, pred);
        }
      }
      const auto names = DefaultClassNames(classes);
      const IouResult iou = ComputeIou(*cm);
      report << FormatIouKeyValues(iou, names);
      report << FormatIouTable(iou, names, "target");

      ProxyQuality quality(classes);
      bool have_proxies = false;
      for (const ManifestEntry* e : gt_entries) {
        const ManifestEntry* t = m.Find(Role::kTargetTrain, e->id);
        if (t == nullptr || t->proxy.empty()) continue;
        have_proxies = true;
        quality.Update(LabelMap::FromTensor(ReadTensorFile(m.Resolve(e->gt))),
                       LabelMap::FromTensor(ReadTensorFile(m.Resolve(t->proxy))));
      }
      if (have_proxies) report << FormatProxyQualityKeyValues(quality, names);
      out << report.str();
      if (!eval_out.empty()) WriteText(eval_out, report.str());
    } else if (gc->parsed()) {
      bool ok = true;
      for (const auto& r : RunGradCheckSuite(cfg.train.seed)) {
        const bool pass = r.max_relative_error < gc_tolerance;
        ok &= pass;
        out << (pass ? "PASS " : "FAIL ") << r.name
            << " max_rel_error=" << r.max_relative_error
            << " coords=" << r.coordinates << '\n';
      }
      Require(ok, ErrorCode::kInternal, "gradient check above tolerance");
    }
  } catch (const Error& e) {
    err << "error code=" << ErrorCodeName(e.code()) << " exit=" << e.exit_code()
        << " message=" << e.what() << '\n';
    return e.exit_code();
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error code=io exit=" << static_cast<int>(ErrorCode::kIo)
        << " message=" << e.what() << '\n';
    return static_cast<int>(ErrorCode::kIo);
  } catch (const std::exception& e) {
    err << "error code=internal exit=1 message=" << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace proxyforge

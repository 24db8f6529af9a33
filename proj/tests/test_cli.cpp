// tests/test_cli.cpp

// Copyright 2026  The SCPC Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <set>
#include <sstream>

#include "scpc/cli.hpp"
#include "scpc/eval.hpp"
#include "scpc/varrate.hpp"
#include "test_util.hpp"

using namespace scpc;
using namespace scpc::testing;

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::string> key_values(const fs::path& p) {
  std::map<std::string, std::string> kv;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

// One-hot phone identity per 10 ms frame, taken at the frame midpoint.
void write_planted_features(const fs::path& manifest, const fs::path& out, const std::vector<std::string>& labels) {
  FeatureFile file;
  for (const auto& u : load_corpus(load_manifest(manifest))) {
    const Index frames = static_cast<Index>(u.duration_s() / kFrameHop);
    Matrix x = Matrix::Zero(frames, static_cast<Index>(labels.size()));
    for (Index t = 0; t < frames; ++t) {
      const double mid = (t + 0.5) * kFrameHop;
      for (const auto& iv : *u.phone_alignment)
        if (iv.start_s <= mid && mid < iv.end_s)
          x(t, std::find(labels.begin(), labels.end(), iv.label) - labels.begin()) = 1;
    }
    file.blocks.push_back({u.id, x, frames, {}, false});
  }
  write_feature_file(out, file);
}

}  // namespace

TEST_CASE("help exits zero for every command") {
  CHECK(run({"--help"}).code == kExitOk);
  for (const char* cmd : {"synth", "train", "tune", "segment", "evaluate", "analyze", "extract", "probe"}) {
    auto r = run({cmd, "--help"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("--out") != std::string::npos);
  }
}

TEST_CASE("usage errors exit one") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  auto dir = temp_dir("cli_usage");
  CHECK(run({"synth", "--out", dir.string(), "--bogus-flag"}).code == kExitUsage);
  CHECK(run({"evaluate", "--out", dir.string()}).code == kExitUsage);
  CHECK(run({"synth", "--out", (dir / "d").string(), "--train", "2", "--val", "0", "--test", "0"}).code == kExitOk);
  auto bad_key = run({"train", "--train", (dir / "d" / "train.tsv").string(), "--out", (dir / "r").string(), "--set",
                      "warp_factor=9"});
  CHECK(bad_key.code == kExitUsage);
  CHECK(bad_key.err.find("warp_factor") != std::string::npos);
}

TEST_CASE("evaluate without reference alignments is a data error") {
  auto dir = temp_dir("cli_noalign");
  write_wav(dir / "a.wav", Eigen::VectorXd::Zero(16000));
  CorpusManifest m;
  m.split = Split::kTest;
  m.entries.push_back({"a", dir / "a.wav", std::nullopt, std::nullopt});
  save_manifest(dir / "m.tsv", m);
  std::ofstream(dir / "b.txt") << "a 0.100 0.200\n";
  auto r = run({"evaluate", "--manifest", (dir / "m.tsv").string(), "--boundaries", (dir / "b.txt").string(), "--out",
                (dir / "ev").string()});
  CHECK(r.code == kExitData);
  CHECK(r.err.find("alignment") != std::string::npos);
}

TEST_CASE("an existing lock refuses the run") {
  auto dir = temp_dir("cli_lock");
  std::ofstream(dir / ".lock") << "1\n";
  CHECK(run({"synth", "--out", dir.string(), "--train", "1"}).code == kExitRuntime);
  fs::remove(dir / ".lock");
  CHECK(run({"synth", "--out", dir.string(), "--train", "1", "--val", "0", "--test", "0"}).code == kExitOk);
  CHECK_FALSE(fs::exists(dir / ".lock"));
  CHECK(fs::exists(dir / "command.resolved.ini"));
}

TEST_CASE("waveform pipeline smoke: train, tune, segment, evaluate, analyze, extract") {
  auto dir = temp_dir("cli_smoke");
  const auto data = dir / "data";
  REQUIRE(run({"synth", "--out", data.string(), "--train", "6", "--val", "2", "--test", "2", "--seed", "4"}).code ==
          kExitOk);
  {
    std::ofstream c(dir / "c.cfg");
    c << "# small model for the smoke run\nchannels=16\nsegment_hidden=16\nsegment_dim=16\ncontext_hidden=8\n"
         "epochs=2\nbatch_size=3\nlr=0.001\n";
  }
  const auto run_dir = dir / "run";
  auto tr = run({"train", "--config", (dir / "c.cfg").string(), "--seed", "0", "--train", (data / "train.tsv").string(),
                 "--val", (data / "val.tsv").string(), "--out", run_dir.string()});
  REQUIRE(tr.code == kExitOk);
  CHECK(fs::exists(run_dir / "best.ckpt"));
  CHECK(fs::exists(run_dir / "last.ckpt"));
  CHECK(fs::exists(run_dir / "metrics.tsv"));
  CHECK(key_values(run_dir / "config.resolved.cfg")["channels"] == "16");
  CHECK(key_values(run_dir / "config.resolved.cfg")["seed"] == "0");

  const auto ckpt = (run_dir / "best.ckpt").string();
  REQUIRE(run({"tune", "--checkpoint", ckpt, "--manifest", (data / "val.tsv").string(), "--out", (dir / "tune").string()})
              .code == kExitOk);
  CHECK(fs::exists(dir / "tune" / "prominence.txt"));

  for (const char* out : {"seg1", "seg2"})
    REQUIRE(run({"segment", "--checkpoint", ckpt, "--manifest", (data / "test.tsv").string(), "--prominence",
                 (dir / "tune" / "prominence.txt").string(), "--dump-scores", "--out", (dir / out).string()})
                .code == kExitOk);
  CHECK(slurp(dir / "seg1" / "phones.txt") == slurp(dir / "seg2" / "phones.txt"));
  CHECK(slurp(dir / "seg1" / "words.txt") == slurp(dir / "seg2" / "words.txt"));
  CHECK_FALSE(slurp(dir / "seg1" / "phones.txt").empty());
  CHECK(fs::exists(dir / "seg1" / "scores" / "test_syn0000.txt"));

  auto ev = run({"evaluate", "--manifest", (data / "test.tsv").string(), "--boundaries",
                 (dir / "seg1" / "phones.txt").string(), "--out", (dir / "ev").string()});
  REQUIRE(ev.code == kExitOk);
  CHECK(key_values(dir / "ev" / "report.txt").count("r_value"));

  auto an = run({"analyze", "--manifest", (data / "test.tsv").string(), "--boundaries",
                 (dir / "seg1" / "phones.txt").string(), "--checkpoint", ckpt, "--plot", "test_syn0001", "--out",
                 (dir / "an").string()});
  REQUIRE(an.code == kExitOk);
  CHECK(fs::exists(dir / "an" / "pair_confusion.csv"));
  CHECK(slurp(dir / "an" / "plots" / "test_syn0001.svg").find("<svg") == 0);
  CHECK(run({"analyze", "--manifest", (data / "test.tsv").string(), "--boundaries",
             (dir / "seg1" / "phones.txt").string(), "--checkpoint", ckpt, "--plot", "nobody", "--out",
             (dir / "an2").string()})
            .code == kExitData);

  auto ex = run({"extract", "--checkpoint", ckpt, "--manifest", (data / "test.tsv").string(), "--source", "manual",
                 "--out", (dir / "ex").string()});
  REQUIRE(ex.code == kExitOk);
  auto feats = read_feature_file(dir / "ex" / "features.bin");
  REQUIRE(feats.blocks.size() == 2);
  CHECK(fs::exists(dir / "ex" / "rate.txt"));
  CHECK(run({"extract", "--manifest", (data / "test.tsv").string(), "--source", "differentiable", "--out",
             (dir / "ex2").string()})
            .code == kExitUsage);
}

TEST_CASE("planted boundaries are recovered exactly") {
  auto dir = temp_dir("cli_planted");
  const auto data = dir / "data";
  REQUIRE(run({"synth", "--out", data.string(), "--train", "8", "--val", "2", "--test", "4", "--seed", "9"}).code ==
          kExitOk);
  std::set<std::string> seen;
  for (const char* split : {"train", "val", "test"})
    for (const auto& u : load_corpus(load_manifest(data / (std::string(split) + ".tsv"))))
      for (const auto& iv : *u.phone_alignment) seen.insert(iv.label);
  const std::vector<std::string> labels(seen.begin(), seen.end());
  for (const char* split : {"train", "val", "test"})
    write_planted_features(data / (std::string(split) + ".tsv"), dir / (std::string(split) + ".bin"), labels);

  const std::string dim = std::to_string(labels.size());
  REQUIRE(run({"train", "--train", (data / "train.tsv").string(), "--val", (data / "val.tsv").string(), "--features",
               (dir / "train.bin").string(), "--val-features", (dir / "val.bin").string(), "--set", "frontend=features",
               "--set", "feature_dim=" + dim, "--set", "feature_hidden=32", "--set", "segment_hidden=16", "--set",
               "segment_dim=16", "--set", "context_hidden=8", "--epochs", "2", "--batch-size", "4", "--out",
               (dir / "run").string()})
              .code == kExitOk);
  REQUIRE(run({"segment", "--checkpoint", (dir / "run" / "best.ckpt").string(), "--manifest",
               (data / "test.tsv").string(), "--features", (dir / "test.bin").string(), "--phone-prominence", "0.01",
               "--out", (dir / "seg").string()})
              .code == kExitOk);
  REQUIRE(run({"evaluate", "--manifest", (data / "test.tsv").string(), "--boundaries",
               (dir / "seg" / "phones.txt").string(), "--out", (dir / "ev").string()})
              .code == kExitOk);
  auto report = key_values(dir / "ev" / "report.txt");
  CHECK(std::stod(report["r_value"]) == doctest::Approx(1.0));
  CHECK(std::stod(report["precision"]) == doctest::Approx(1.0));
}

TEST_CASE("mfcc extraction and probe commands") {
  auto dir = temp_dir("cli_probe");
  const auto data = dir / "data";
  REQUIRE(run({"synth", "--out", data.string(), "--train", "4", "--val", "2", "--test", "2", "--seed", "5"}).code ==
          kExitOk);
  for (const char* split : {"train", "val", "test"})
    REQUIRE(run({"extract", "--manifest", (data / (std::string(split) + ".tsv")).string(), "--source", "mfcc", "--out",
                 (dir / split).string()})
                .code == kExitOk);
  auto pr = run({"probe", "--train-manifest", (data / "train.tsv").string(), "--train-features",
                 (dir / "train" / "features.bin").string(), "--val-manifest", (data / "val.tsv").string(),
                 "--val-features", (dir / "val" / "features.bin").string(), "--test-manifest",
                 (data / "test.tsv").string(), "--test-features", (dir / "test" / "features.bin").string(), "--out",
                 (dir / "probe").string()});
  REQUIRE(pr.code == kExitOk);
  auto kv = key_values(dir / "probe" / "probe.txt");
  const double acc = std::stod(kv["test_accuracy"]);
  CHECK(acc >= 0);
  CHECK(acc <= 100);
  CHECK(std::stod(kv["average_sampling_rate_test"]) <= 100);
  // features from another split do not cover the manifest
  CHECK(run({"probe", "--train-manifest", (data / "train.tsv").string(), "--train-features",
             (dir / "val" / "features.bin").string(), "--val-manifest", (data / "val.tsv").string(), "--val-features",
             (dir / "val" / "features.bin").string(), "--test-manifest", (data / "test.tsv").string(),
             "--test-features", (dir / "test" / "features.bin").string(), "--out", (dir / "probe2").string()})
            .code == kExitData);
}

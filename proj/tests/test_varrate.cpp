// tests/test_varrate.cpp

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

#include <cmath>
#include <numbers>
#include <random>

#include "scpc/error.hpp"
#include "scpc/multistep.hpp"
#include "scpc/varrate.hpp"
#include "test_util.hpp"

using namespace scpc;
using namespace scpc::testing;

namespace {

ModelConfig feature_model(Index dim) {
  ModelConfig c;
  c.frontend = Frontend::kFeatures;
  c.feature_dim = dim;
  c.feature_hidden = 16;
  c.segment.hidden = 16;
  c.segment.output_dim = 16;
  c.segment.context_hidden = 8;
  return c;
}

Alignment even_alignment(int phones, double duration) {
  static const char* labels[] = {"aa", "n", "iy", "s", "t", "ah", "m", "l", "eh", "k"};
  Alignment a;
  for (int k = 0; k < phones; ++k)
    a.push_back({duration * k / phones, duration * (k + 1) / phones, labels[k % 10]});
  return a;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kInvalidConfig;
}

}  // namespace

TEST_CASE("expand repeats segment vectors") {
  FeatureBlock b{"u", Matrix(2, 3), 6, {3}, true};
  b.data << 1, 2, 3, 4, 5, 6;
  Matrix e = expand_to_frames(b);
  REQUIRE(e.rows() == 6);
  for (Index r = 0; r < 4; ++r) CHECK(e.row(r) == b.data.row(0));
  for (Index r = 4; r < 6; ++r) CHECK(e.row(r) == b.data.row(1));

  FeatureBlock one{"v", Matrix::Ones(1, 2), 5, {}, true};
  Matrix o = expand_to_frames(one);
  CHECK(o.rows() == 5);
  CHECK((o.array() == 1).all());

  FeatureBlock bad{"w", Matrix::Ones(3, 2), 6, {2}, true};
  CHECK(code_of([&] { expand_to_frames(bad); }) == ErrorCode::kInconsistentLengths);
}

TEST_CASE("expand after extract keeps the frame count") {
  std::mt19937_64 gen(1);
  Rng init(2);
  ScpcModel model(feature_model(5), init);
  for (int trial = 0; trial < 100; ++trial) {
    const Index rows = 3 + static_cast<Index>(gen() % 80);
    Matrix x = random_matrix(rows, 5, gen);
    const auto source = trial % 3 == 0 ? BoundarySource::kDifferentiable
                        : trial % 3 == 1 ? BoundarySource::kExternalPeaks
                                         : BoundarySource::kFrames;
    auto block = extract_segment_features(model, "u", x, source, std::nullopt, 0.05);
    CHECK(block.frame_count == rows);
    CHECK(expand_to_frames(block).rows() == rows);
    CHECK(static_cast<Index>(block.gaps.size()) + 1 == block.data.rows());
  }
}

TEST_CASE("manual boundaries give one vector per phone") {
  Rng init(3);
  ScpcModel model(feature_model(4), init);
  std::mt19937_64 gen(4);
  Matrix x = random_matrix(100, 4, gen);
  auto block = extract_segment_features(model, "u", x, BoundarySource::kManual, even_alignment(7, 1.0));
  CHECK(block.data.rows() == 7);
  CHECK(block.segmented);
  CHECK(code_of([&] { extract_segment_features(model, "u", x, BoundarySource::kManual); }) ==
        ErrorCode::kMissingAlignment);
}

TEST_CASE("all-zero boundaries give one vector") {
  auto cfg = feature_model(4);
  cfg.thres_init = 1.0;
  Rng init(5);
  ScpcModel model(cfg, init);
  std::mt19937_64 gen(6);
  auto block = extract_segment_features(model, "u", random_matrix(40, 4, gen), BoundarySource::kDifferentiable);
  CHECK(block.data.rows() == 1);
  CHECK(block.gaps.empty());
}

TEST_CASE("indicators and gaps") {
  Matrix b = indicators_from_gaps({0, 3}, 6);
  REQUIRE(b.rows() == 5);
  CHECK(b(0, 0) == 1);
  CHECK(b(3, 0) == 1);
  CHECK(b.sum() == 2);
  auto gaps = gaps_from_alignment(even_alignment(4, 0.4), 40);
  CHECK(gaps == std::vector<Index>{9, 19, 29});
}

TEST_CASE("average sampling rate") {
  std::vector<FeatureBlock> blocks{{"a", Matrix::Zero(100, 1), 500, {}, true}, {"b", Matrix::Zero(45, 1), 500, {}, true}};
  CHECK(average_sampling_rate(blocks, 10.0) == doctest::Approx(14.5));
  std::vector<FeatureBlock> frames{{"c", Matrix::Zero(1000, 1), 1000, {}, false}};
  CHECK(average_sampling_rate(frames, 10.0) == doctest::Approx(100));
  CHECK_THROWS(average_sampling_rate(blocks, 0.0));
}

TEST_CASE("sampling rate never exceeds the frame rate") {
  Rng init(7);
  ScpcModel model(feature_model(3), init);
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 30; ++trial) {
    const Index rows = 5 + static_cast<Index>(gen() % 60);
    auto block = extract_segment_features(model, "u", random_matrix(rows, 3, gen), BoundarySource::kFrames);
    CHECK(average_sampling_rate({block}, rows * kFrameHop) <= 100 + 1e-9);
  }
}

TEST_CASE("feature file round trip") {
  auto dir = temp_dir("features");
  FeatureFile f;
  std::mt19937_64 gen(9);
  f.blocks.push_back({"one", random_matrix(3, 4, gen), 10, {2, 6}, true});
  f.blocks.push_back({"two", random_matrix(7, 4, gen), 7, {}, false});
  write_feature_file(dir / "f.bin", f);
  CHECK(std::filesystem::exists(dir / "f.bin.idx"));
  auto g = read_feature_file(dir / "f.bin");
  REQUIRE(g.blocks.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(g.blocks[i].id == f.blocks[i].id);
    CHECK(g.blocks[i].frame_count == f.blocks[i].frame_count);
    CHECK(g.blocks[i].gaps == f.blocks[i].gaps);
    CHECK(g.blocks[i].segmented == f.blocks[i].segmented);
    // stored as 32-bit floats
    CHECK((g.blocks[i].data - f.blocks[i].data).cwiseAbs().maxCoeff() < 1e-6);
  }
  CHECK(g.find("two") != nullptr);
  CHECK(g.find("three") == nullptr);
}

TEST_CASE("frame labels from interval centres") {
  const auto classes = LabelFoldTable::timit_default().probe_labels();
  CHECK(classes.size() == 48);
  Alignment a{{0.0, 0.5, "aa"}, {0.5, 1.0, "q"}};
  auto y = frame_labels(a, 98, classes);
  const int aa = static_cast<int>(std::find(classes.begin(), classes.end(), "aa") - classes.begin());
  CHECK(y.front() == aa);
  CHECK(y.back() == -1);
  for (Index t = 0; t < 98; ++t)
    CHECK(y[static_cast<std::size_t>(t)] == (frame_center_s(t) < 0.5 ? aa : -1));
}

TEST_CASE("probe separates one-hot features and is deterministic") {
  const int classes = 6;
  std::mt19937_64 gen(10);
  auto make = [&](int n) {
    ProbeData d;
    d.x = Matrix::Zero(n, classes);
    for (int i = 0; i < n; ++i) {
      const int c = static_cast<int>(gen() % classes);
      d.x(i, c) = 1;
      d.y.push_back(c);
    }
    d.y[0] = -1;  // ignored row
    return d;
  };
  auto tr = make(300), va = make(60), te = make(60);
  auto r = linear_probe(tr, va, te, classes);
  CHECK(r.val_accuracy == doctest::Approx(100));
  CHECK(r.test_accuracy == doctest::Approx(100));
  auto again = linear_probe(tr, va, te, classes);
  CHECK(std::abs(again.test_accuracy - r.test_accuracy) <= 1e-6);
  CHECK(again.epochs == r.epochs);

  ProbeData bad = tr;
  bad.y.pop_back();
  CHECK(code_of([&] { linear_probe(bad, va, te, classes); }) == ErrorCode::kLabelFeatureMismatch);
}

TEST_CASE("probe accuracies stay in range on noise") {
  std::mt19937_64 gen(11);
  auto make = [&](int n) {
    ProbeData d;
    d.x = random_matrix(n, 4, gen);
    for (int i = 0; i < n; ++i) d.y.push_back(static_cast<int>(gen() % 3));
    return d;
  };
  auto r = linear_probe(make(200), make(50), make(50), 3);
  CHECK(r.test_accuracy >= 0);
  CHECK(r.test_accuracy <= 100);
  CHECK(r.epochs <= ProbeOptions{}.max_epochs);
}

TEST_CASE("multistep loss with identical candidates is ln(K+1)") {
  std::mt19937_64 gen(12);
  for (int steps : {1, 3, 12}) {
    for (int k : {1, 4}) {
      Matrix row = random_matrix(1, 6, gen);
      Var z = ad::constant(row.replicate(20, 1));
      Var c = ad::constant(random_matrix(20, 5, gen));
      std::vector<Var> maps;
      std::vector<IndexMatrix> neg;
      for (int m = 1; m <= steps; ++m) {
        maps.push_back(ad::constant(random_matrix(5, 6, gen)));
        IndexMatrix n(20 - m, k);
        for (Index i = 0; i < n.size(); ++i) n.data()[i] = static_cast<Index>(gen() % 20);
        neg.push_back(n);
      }
      Var loss = multistep_nfc_loss(z, c, maps, z, neg);
      CHECK(std::abs(loss.item() - std::log(k + 1.0)) <= 1e-6);
    }
  }
}

TEST_CASE("one-step multistep loss with identity map is the next-frame loss") {
  std::mt19937_64 gen(13);
  Matrix zv = random_matrix(15, 4, gen);
  zv.rowwise().normalize();
  Var z = ad::constant(zv);
  IndexMatrix neg(14, 3);
  for (Index i = 0; i < neg.size(); ++i) neg.data()[i] = static_cast<Index>(gen() % 15);
  std::vector<Var> maps{ad::constant(Matrix::Identity(4, 4))};
  std::vector<IndexMatrix> negs{neg};
  CHECK(multistep_nfc_loss(z, z, maps, z, negs).item() == doctest::Approx(nfc_loss(z, z, neg).item()).epsilon(1e-12));
}

TEST_CASE("multistep network and degenerate input") {
  Rng rng(14);
  FrameContextNetwork net(6, {3, 5}, rng);
  CHECK(net.steps() == 3);
  std::mt19937_64 gen(15);
  Var z = Var::parameter(random_matrix(10, 6, gen));
  CHECK(net.forward(z).cols() == 5);
  std::vector<Var> batch{z};
  Rng neg(16);
  Var loss = multistep_nfc_loss(batch, net, {2, NegativeMode::kSameUtterance}, neg);
  CHECK(std::isfinite(loss.item()));
  CHECK(loss.item() >= 0);
  ad::backward(loss);
  CHECK(z.grad().cwiseAbs().maxCoeff() > 0);

  std::vector<Var> short_batch{ad::constant(random_matrix(3, 6, gen))};
  CHECK(code_of([&] { multistep_nfc_loss(short_batch, net, {2, NegativeMode::kSameUtterance}, neg); }) ==
        ErrorCode::kDegenerateUtterance);
}

TEST_CASE("mfcc shape and stationarity") {
  Eigen::VectorXd tone(16000);
  for (Index i = 0; i < tone.size(); ++i) tone(i) = 0.3 * std::sin(2 * std::numbers::pi * 200.0 * i / kSampleRate) +
              0.1 * std::sin(2 * std::numbers::pi * 1000.0 * i / kSampleRate);
  Matrix m = mfcc(tone);
  CHECK(m.rows() == (16000 - 400) / 160 + 1);
  CHECK(m.cols() == 39);
  CHECK(m.allFinite());
  // both periods divide the hop, so every frame sees the same samples
  const double delta = m.block(5, 13, m.rows() - 10, 26).cwiseAbs().maxCoeff();
  const double ceps = m.block(5, 0, m.rows() - 10, 13).cwiseAbs().maxCoeff();
  CHECK(delta < 1e-9 * ceps);
  CHECK((m.row(5) - m.row(50)).cwiseAbs().maxCoeff() < 1e-9 * ceps);
  CHECK(mfcc(Eigen::VectorXd::Zero(100)).rows() == 0);
}

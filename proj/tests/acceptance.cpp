// tests/acceptance.cpp

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

// Prints one PASS/FAIL line per acceptance criterion and exits non-zero when
// any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "scpc/boundary.hpp"
#include "scpc/inference.hpp"
#include "scpc/multistep.hpp"
#include "scpc/peaks.hpp"
#include "scpc/segment.hpp"
#include "scpc/training.hpp"
#include "test_util.hpp"

using namespace scpc;
using namespace scpc::testing;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s  %-58s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), f, a, b);
  return buf;
}

// ---- oracles --------------------------------------------------------------

SegmentRanges ranges_from_hard(const Eigen::VectorXd& b) {
  SegmentRanges r;
  Index start = 0;
  for (Index i = 0; i < b.size(); ++i)
    if (b(i) > 0.5) {
      r.emplace_back(start, i + 1);
      start = i + 1;
    }
  r.emplace_back(start, b.size() + 1);
  return r;
}

Matrix loop_avg(const Matrix& z, const SegmentRanges& ranges) {
  Matrix out(static_cast<Index>(ranges.size()), z.cols());
  for (std::size_t j = 0; j < ranges.size(); ++j) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(z.cols());
    for (Index i = ranges[j].first; i < ranges[j].second; ++i) acc += z.row(i);
    out.row(static_cast<Index>(j)) = acc / static_cast<double>(ranges[j].second - ranges[j].first);
  }
  return out;
}

Matrix loop_wavg(const Matrix& z, const SegmentRanges& ranges) {
  Matrix out(static_cast<Index>(ranges.size()), z.cols());
  for (std::size_t j = 0; j < ranges.size(); ++j) {
    auto [s, e] = ranges[j];
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(z.cols());
    for (Index i = s; i < e; ++i) {
      double mx = -1e300;
      for (Index k = s; k < e; ++k) mx = std::max(mx, z.row(i).dot(z.row(k)));
      double denom = 0;
      Eigen::RowVectorXd y = Eigen::RowVectorXd::Zero(z.cols());
      for (Index k = s; k < e; ++k) {
        const double w = std::exp(z.row(i).dot(z.row(k)) - mx);
        denom += w;
        y += w * z.row(k);
      }
      acc += y / denom;
    }
    out.row(static_cast<Index>(j)) = acc / static_cast<double>(e - s);
  }
  return out;
}

double at(const Eigen::VectorXd& d, Index i) { return i < 0 || i >= d.size() ? 0.0 : d(i); }

void scalar_peak_scores(const Eigen::VectorXd& d, double thres, Eigen::VectorXd& p1, Eigen::VectorXd& p2,
                        Eigen::VectorXd& p) {
  const Index n = d.size();
  p1.resize(n);
  p2.resize(n);
  p.resize(n);
  for (Index t = 0; t < n; ++t) {
    p1(t) = std::min(std::max(d(t) - at(d, t + 1), 0.0), std::max(d(t) - at(d, t - 1), 0.0));
    p2(t) = std::min(std::max(d(t) - at(d, t + 2), 0.0), std::max(d(t) - at(d, t - 2), 0.0));
    p(t) = std::min(std::max(std::max(p1(t), p2(t)) - thres, 0.0), p1(t));
  }
}

std::vector<Index> scalar_find_peaks(const Eigen::VectorXd& x, double min_prom) {
  std::vector<Index> out;
  const Index n = x.size();
  for (Index i = 1; i + 1 < n; ++i) {
    if (!(x(i - 1) < x(i))) continue;
    Index j = i;
    while (j + 1 < n && x(j + 1) == x(i)) ++j;
    if (j + 1 >= n || !(x(j + 1) < x(i))) continue;
    const Index peak = (i + j) / 2;
    double left = x(peak), right = x(peak);
    for (Index k = peak; k >= 0 && x(k) <= x(peak); --k) left = std::min(left, x(k));
    for (Index k = peak; k < n && x(k) <= x(peak); ++k) right = std::min(right, x(k));
    if (x(peak) - std::max(left, right) >= min_prom) out.push_back(peak);
  }
  return out;
}

Eigen::VectorXd random_trace(std::mt19937_64& rng, int trial) {
  const Index n = 1 + static_cast<Index>(rng() % 64);
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::VectorXd d(n);
  for (Index i = 0; i < n; ++i) d(i) = trial % 3 == 0 ? std::floor(u(rng) * 3) / 3 : u(rng) * 0.3;
  // plant spikes at the edge positions t = 1, 2, L-2, L-1
  if (n >= 4 && trial % 2 == 1)
    for (Index t : {Index(1), Index(2), n - 2, n - 1}) d(t) = 0.5 + 0.5 * u(rng);
  return d;
}

// ---- criteria ---------------------------------------------------------------

void pooling_oracle() {
  std::mt19937_64 rng(101);
  double worst_avg = 0, worst_wavg = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index frames = 2 + static_cast<Index>(rng() % 40);
    Matrix z = random_matrix(frames, 1 + static_cast<Index>(rng() % 8), rng);
    Matrix b = Matrix::Zero(frames - 1, 1);
    for (Index i = 0; i < b.rows(); ++i) b(i, 0) = rng() % 3 == 0 ? 1.0 : 0.0;
    const auto ranges = ranges_from_hard(b.col(0));
    Var zv = ad::constant(z), bv = ad::constant(b);
    worst_avg = std::max(worst_avg, (pool_segments(zv, bv, RepMode::kAvg).value() - loop_avg(z, ranges)).cwiseAbs().maxCoeff());
    worst_wavg =
        std::max(worst_wavg, (pool_segments(zv, bv, RepMode::kWavg).value() - loop_wavg(z, ranges)).cwiseAbs().maxCoeff());
  }
  report(worst_avg <= 1e-5, "segment-average pooling vs loop oracle (1000 cases)", fmt("max abs err %.2e", worst_avg));
  report(worst_wavg <= 1e-5, "attention-weighted pooling vs loop oracle (1000 cases)", fmt("max abs err %.2e", worst_wavg));
}

void peak_oracles() {
  std::mt19937_64 rng(102);
  int score_mismatch = 0, pick_mismatch = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd d = random_trace(rng, trial);
    const double thres = 0.05 * (trial % 4);
    Eigen::VectorXd p1, p2, p;
    scalar_peak_scores(d, thres, p1, p2, p);
    auto fast = peak_scores(d, thres, true);
    if (fast.p1 != p1 || fast.p2 != p2 || fast.p != p) ++score_mismatch;
    const double prom = 0.1 * (trial % 5);
    if (find_peaks(d, prom) != scalar_find_peaks(d, prom)) ++pick_mismatch;
  }
  report(score_mismatch == 0, "peak scorer vs scalar rule (1000 traces, L<=64)", fmt("%.0f mismatches", score_mismatch));
  report(pick_mismatch == 0, "peak picker vs scalar rule (1000 traces, L<=64)", fmt("%.0f mismatches", pick_mismatch));
}

void straight_through_checks() {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> u(0, 1);
  double worst_fwd = 0, worst_grad = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Matrix p(30, 1);
    for (Index i = 0; i < 30; ++i) p(i, 0) = rng() % 2 ? 0.0 : 0.005 + u(rng);  // outside (0, 0.005)
    Var pv(p, true);
    Var b = straight_through(pv);
    for (Index i = 0; i < 30; ++i) worst_fwd = std::max(worst_fwd, std::abs(b.value()(i, 0) - (p(i, 0) > 0 ? 1.0 : 0.0)));
    ad::backward(ad::sum(b));
    for (Index i = 0; i < 30; ++i) {
      const double expect = 10 * (1 - std::pow(std::tanh(10 * p(i, 0)), 2));
      worst_grad = std::max(worst_grad, std::abs(pv.grad()(i, 0) - expect) / std::max(std::abs(expect), 1e-300));
    }
  }
  report(worst_fwd <= 1e-3, "straight-through forward vs hard binarization", fmt("max abs err %.2e", worst_fwd));
  report(worst_grad <= 1e-4, "straight-through gradient vs 10(1-tanh^2(10p))", fmt("max rel err %.2e", worst_grad));

  // next-segment loss reaches the frame encoder
  ModelConfig mc;
  mc.frame.channels = 16;
  mc.segment.hidden = 16;
  mc.segment.output_dim = 16;
  mc.segment.context_hidden = 8;
  mc.thres_init = 0.0;
  Rng init(5);
  ScpcModel model(mc, init);
  SyntheticOptions so;
  so.num_utterances = 2;
  so.seed = 77;
  std::vector<Matrix> batch;
  for (const auto& u : synthesize_corpus(so)) batch.push_back(model.input_for(u));
  ModelOutput out = model.forward(batch, true, true);
  Rng neg(6);
  NscResult nsc = nsc_loss(out.c, out.s, NegativeSamplingPolicy{}, neg);
  bool finite = true;
  double norm = 0;
  if (nsc.loss.defined()) {
    ad::backward(nsc.loss);
    model.visit([&](const std::string& name, Var& v) {
      if (name.rfind("frame_encoder.", 0) != 0 || !v.has_grad()) return;
      finite = finite && v.grad().allFinite();
      norm += v.grad().squaredNorm();
    });
  }
  report(nsc.loss.defined() && finite && norm > 0, "next-segment loss gradient reaches frame encoder",
         fmt("grad norm %.3e, %.0f utterances used", std::sqrt(norm), nsc.used));
}

void metric_identities() {
  const double perfect = metrics_from_pr(1, 1).r_value;
  const double half = metrics_from_pr(0.5, 0.5).r_value;
  const double f1 = 100 * metrics_from_pr(0.8463, 0.8604).f1;
  report(std::abs(perfect - 1) <= 1e-12 && std::abs(half - 0.5732) <= 1e-4, "R-value hand cases (P=R=1, P=R=0.5)",
         fmt("R-val %.6f and %.6f", perfect, half));
  report(std::abs(f1 - 85.33) <= 0.01, "F1(84.63, 86.04) = 85.33", fmt("F1 %.4f", f1));
}

void uniform_losses() {
  std::mt19937_64 rng(104);
  double worst_nfc = 0, worst_nsc = 0, worst_ms = 0;
  for (int k : {1, 2, 5, 10}) {
    const double target = std::log(k + 1.0);
    Var z = ad::constant(random_matrix(1, 8, rng).replicate(12, 1));
    IndexMatrix neg(11, k);
    for (Index i = 0; i < neg.size(); ++i) neg.data()[i] = static_cast<Index>(rng() % 12);
    worst_nfc = std::max(worst_nfc, std::abs(nfc_loss(z, z, neg).item() - target));
    worst_nsc = std::max(worst_nsc, std::abs(nsc_loss(z, z, z, neg).item() - target));
    for (int steps : {1, 4, 12}) {
      std::vector<Var> maps;
      std::vector<IndexMatrix> negs;
      for (int m = 1; m <= steps; ++m) {
        maps.push_back(ad::constant(random_matrix(5, 8, rng)));
        IndexMatrix n(16 - m, k);
        for (Index i = 0; i < n.size(); ++i) n.data()[i] = static_cast<Index>(rng() % 16);
        negs.push_back(n);
      }
      Var zz = ad::constant(random_matrix(1, 8, rng).replicate(16, 1));
      Var c = ad::constant(random_matrix(16, 5, rng));
      worst_ms = std::max(worst_ms, std::abs(multistep_nfc_loss(zz, c, maps, zz, negs).item() - target));
    }
  }
  report(worst_nfc <= 1e-6, "next-frame loss with uniform candidates = ln(K+1)", fmt("max err %.2e", worst_nfc));
  report(worst_nsc <= 1e-6, "next-segment loss with uniform candidates = ln(K+1)", fmt("max err %.2e", worst_nsc));
  report(worst_ms <= 1e-6, "multi-step loss with uniform candidates = ln(K+1)", fmt("max err %.2e", worst_ms));
}

void monotonicity() {
  std::mt19937_64 rng(105);
  int thres_bad = 0, prom_bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd d = random_trace(rng, trial);
    Index prev = std::numeric_limits<Index>::max();
    for (double th = 0; th <= 1.0; th += 0.02) {
      const Index n = (hard_boundaries(peak_scores(d, th).p).array() > 0.5).count();
      if (n > prev) ++thres_bad;
      prev = n;
    }
    std::size_t prev_p = std::numeric_limits<std::size_t>::max();
    for (double pr = 0; pr <= 1.0; pr += 0.02) {
      const auto n = find_peaks(d, pr).size();
      if (n > prev_p) ++prom_bad;
      prev_p = n;
    }
  }
  report(thres_bad == 0, "boundary count non-increasing in threshold (1000 traces)", fmt("%.0f violations", thres_bad));
  report(prom_bad == 0, "boundary count non-increasing in prominence (1000 traces)", fmt("%.0f violations", prom_bad));
}

void synthetic_end_to_end() {
  const auto start = std::chrono::steady_clock::now();
  SyntheticOptions so;
  so.num_utterances = 48;
  so.seed = 1;
  auto train_set = waveform_examples(synthesize_corpus(so));
  so.num_utterances = 8;
  so.seed = 2;
  auto val_set = waveform_examples(synthesize_corpus(so));
  so.seed = 3;
  auto test_utts = synthesize_corpus(so);

  TrainConfig cfg;  // full-size model
  cfg.epochs = 5;
  cfg.batch_size = 4;
  cfg.lr = 1e-3;
  cfg.seed = 0;
  Rng init(stable_hash(cfg.seed, "init"));
  ScpcModel model(cfg.model, init);
  auto result = train(model, train_set, val_set, cfg, {});
  double prom = 0;
  const double val_r = validation_r_value(model, val_set, &prom);
  std::map<std::string, std::vector<double>> refs, hyps;
  for (const auto& u : test_utts) {
    refs[u.id] = reference_boundaries(*u.phone_alignment);
    hyps[u.id] = phone_boundaries(model, u, prom);
  }
  const double test_r = evaluate_boundaries(refs, hyps).r_value;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::string detail = fmt("test R-val %.4f (val %.4f)", test_r, val_r) + fmt(", %.0f s", secs);
  report(test_r >= 0.95 && secs <= 600, "synthetic corpus, 5 epochs: phone R-value >= 0.95 in 10 min", detail);
  (void)result;
}

}  // namespace

int main() {
  pooling_oracle();
  peak_oracles();
  straight_through_checks();
  metric_identities();
  uniform_losses();
  monotonicity();
  synthetic_end_to_end();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

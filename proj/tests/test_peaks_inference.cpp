// tests/test_peaks_inference.cpp

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
#include <random>

#include "scpc/error.hpp"
#include "scpc/inference.hpp"
#include "scpc/peaks.hpp"
#include "test_util.hpp"

using namespace scpc;
using namespace scpc::testing;

namespace {

// Run-length view of the trace: a run is a peak when both neighbouring runs
// are lower; its index is the left-of-centre sample of the run.
std::vector<Index> brute_peaks(const std::vector<double>& x, double min_prom) {
  struct Run {
    double v;
    Index first, last;
  };
  std::vector<Run> runs;
  for (Index i = 0; i < static_cast<Index>(x.size()); ++i) {
    if (!runs.empty() && runs.back().v == x[i])
      runs.back().last = i;
    else
      runs.push_back({x[i], i, i});
  }
  std::vector<Index> out;
  for (std::size_t r = 1; r + 1 < runs.size(); ++r) {
    if (!(runs[r - 1].v < runs[r].v && runs[r + 1].v < runs[r].v)) continue;
    const Index p = (runs[r].first + runs[r].last) / 2;
    const double v = x[p];
    // lowest point on each side before meeting strictly higher ground
    double lo_left = v, lo_right = v;
    for (std::size_t k = r; k-- > 0;) {
      if (runs[k].v > v) break;
      lo_left = std::min(lo_left, runs[k].v);
    }
    for (std::size_t k = r + 1; k < runs.size(); ++k) {
      if (runs[k].v > v) break;
      lo_right = std::min(lo_right, runs[k].v);
    }
    if (v - std::max(lo_left, lo_right) >= min_prom) out.push_back(p);
  }
  return out;
}

Eigen::VectorXd random_trace(std::mt19937_64& rng, bool quantized) {
  const Index n = 1 + static_cast<Index>(rng() % 64);
  Eigen::VectorXd x(n);
  std::uniform_real_distribution<double> u(0, 1);
  for (Index i = 0; i < n; ++i) x(i) = quantized ? std::floor(u(rng) * 4) / 4 : u(rng);
  return x;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Index>(v.size()));
  Index i = 0;
  for (double a : v) x(i++) = a;
  return x;
}

}  // namespace

TEST_CASE("picker matches run-length oracle on random traces") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    auto x = random_trace(rng, trial % 2 == 1);
    const double prom = (trial % 5) * 0.1;
    std::vector<double> xs(x.data(), x.data() + x.size());
    CHECK(find_peaks(x, prom) == brute_peaks(xs, prom));
  }
}

TEST_CASE("picker edge positions") {
  // peaks at t = 1 and t = L - 2 are legal; t = 0 and t = L - 1 are not
  auto x = vec({0, 1, 0, 0, 0, 1, 0});
  CHECK(find_peaks(x, 0) == std::vector<Index>{1, 5});
  auto edges = vec({1, 0, 0, 0, 1});
  CHECK(find_peaks(edges, 0).empty());
  auto plateau = vec({0, 2, 2, 2, 2, 0});
  CHECK(find_peaks(plateau, 0) == std::vector<Index>{2});
}

TEST_CASE("prominence examples") {
  auto x = vec({0, 3, 1, 2, 0});
  auto peaks = local_maxima(x);
  REQUIRE(peaks.size() == 2);
  auto prom = peak_prominences(x, peaks);
  CHECK(prom[0] == doctest::Approx(3));
  CHECK(prom[1] == doctest::Approx(1));
}

TEST_CASE("phone boundaries from a trace") {
  auto b = phone_boundaries_from_trace(vec({0, 1, 0}), 0.5);
  REQUIRE(b.size() == 1);
  CHECK(b[0] == doctest::Approx(0.020));

  CHECK(phone_boundaries_from_trace(vec({0, 0.1, 0.2, 0.5, 0.9}), 0).empty());

  auto many = vec({0, 0.3, 0.1, 0.2, 0.15, 0.9, 0});
  CHECK(phone_boundaries_from_trace(many, 0).size() == local_maxima(many).size());
}

TEST_CASE("boundary lists are strictly increasing and inside the trace") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    auto x = random_trace(rng, false);
    auto b = phone_boundaries_from_trace(x, 0.05);
    for (std::size_t i = 1; i < b.size(); ++i) CHECK(b[i] > b[i - 1]);
    for (double t : b) {
      CHECK(t > 0);
      CHECK(t < (x.size() + 1) * kFrameHop);
    }
  }
}

TEST_CASE("raising prominence never adds boundaries") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    auto x = random_trace(rng, trial % 2 == 0);
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double p = 0; p <= 1.0; p += 0.05) {
      const auto n = phone_boundaries_from_trace(x, p).size();
      CHECK(n <= prev);
      prev = n;
    }
  }
}

TEST_CASE("word boundaries from segment scores") {
  const SegmentRanges ranges{{0, 4}, {4, 9}, {9, 12}};
  // similarities 0.9 then -0.9 between consecutive segments
  auto scores = vec({1 - 0.9, 1 + 0.9});
  auto b = word_boundaries_from_trace(scores, ranges, 0.0);
  REQUIRE(b.size() == 1);
  CHECK(b[0] == doctest::Approx(0.09));

  CHECK(word_boundaries_from_trace(Eigen::VectorXd(0), SegmentRanges{{0, 12}}, 0.0).empty());
  CHECK(word_boundaries_from_trace(vec({0.5, 0.5}), ranges, 0.0).empty());
}

TEST_CASE("prominence grid") {
  auto g = default_prominence_grid();
  REQUIRE(g.size() == 51);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == doctest::Approx(0.5));
}

TEST_CASE("tuning singleton grid, ties and empty input") {
  std::vector<TuningTrace> traces{{vec({0, 1, 0, 0, 1, 0}), {}, {0.02, 0.05}}};
  CHECK(tune_prominence(traces, {0.0}, Task::kPhone) == 0.0);
  // every value up to 1 finds both peaks: the largest wins the tie
  double best_r = 0;
  CHECK(tune_prominence(traces, {0.0, 0.3, 0.6}, Task::kPhone, &best_r) == doctest::Approx(0.6));
  CHECK(best_r == doctest::Approx(1.0));
  CHECK_THROWS_AS(tune_prominence(std::vector<TuningTrace>{}, {0.0}, Task::kPhone), Error);
}

TEST_CASE("tuning on traces whose true peaks have prominence 0.8") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> small(0, 0.1);
  std::vector<TuningTrace> traces;
  for (int u = 0; u < 20; ++u) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(60);
    std::vector<double> ref;
    for (Index g = 0; g < 60; ++g) d(g) = small(rng);
    for (Index g = 5; g < 55; g += 7 + static_cast<Index>(rng() % 4)) {
      d(g) = 0.8 + std::max(d(g - 1), d(g + 1));
      ref.push_back(gap_time_s(g));
    }
    traces.push_back({d, {}, ref});
  }
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(i * 0.01);
  double r = 0;
  const double tuned = tune_prominence(traces, grid, Task::kPhone, &r);
  CHECK(tuned <= 0.8 + 1e-12);
  CHECK(r == doctest::Approx(1.0));
}

TEST_CASE("boundary and prominence files round trip") {
  auto dir = temp_dir("inference");
  std::vector<std::pair<std::string, std::vector<double>>> rows{{"a", {0.02, 0.1234}}, {"b", {}}};
  write_boundary_file(dir / "b.txt", rows);
  auto back = read_boundary_file(dir / "b.txt");
  REQUIRE(back.size() == 2);
  REQUIRE(back["a"].size() == 2);
  CHECK(back["a"][1] == doctest::Approx(0.123));
  CHECK(back["b"].empty());

  ProminenceSetting s{0.07, 0.21, default_prominence_grid()};
  write_prominence(dir / "p.txt", s);
  auto t = read_prominence(dir / "p.txt");
  CHECK(t.phone == doctest::Approx(0.07));
  CHECK(t.word == doctest::Approx(0.21));
  CHECK(t.grid.size() == s.grid.size());
}

TEST_CASE("task names") {
  CHECK(parse_task("phone") == Task::kPhone);
  CHECK(parse_task("word") == Task::kWord);
  CHECK_THROWS_AS(parse_task("syllable"), Error);
}

// src/eval.cpp

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

#include "scpc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "scpc/error.hpp"

namespace scpc {

MatchCounts& MatchCounts::operator+=(const MatchCounts& other) {
  n_hits += other.n_hits;
  n_ref += other.n_ref;
  n_hyp += other.n_hyp;
  return *this;
}

MatchCounts match_boundaries(std::span<const double> ref, std::span<const double> hyp, double tol) {
  MatchCounts c;
  c.n_ref = static_cast<long>(ref.size());
  c.n_hyp = static_cast<long>(hyp.size());
  c.tolerance_s = tol;
  std::vector<bool> used(hyp.size(), false);
  const double slack = 1e-9;
  for (double r : ref) {
    auto lo = std::lower_bound(hyp.begin(), hyp.end(), r - tol - slack);
    std::ptrdiff_t best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (auto it = lo; it != hyp.end() && *it <= r + tol + slack; ++it) {
      const auto i = it - hyp.begin();
      const double dist = std::abs(*it - r);
      if (!used[static_cast<std::size_t>(i)] && dist < best_dist) {
        best = i;
        best_dist = dist;
      }
    }
    if (best >= 0) {
      used[static_cast<std::size_t>(best)] = true;
      ++c.n_hits;
    }
  }
  return c;
}

EvalReport metrics_from_pr(double precision, double recall) {
  EvalReport r;
  r.precision = precision;
  r.recall = recall;
  r.f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
  if (precision > 0) {
    r.os = recall / precision - 1;
    r.r1 = std::sqrt((1 - recall) * (1 - recall) + r.os * r.os);
    r.r2 = (-r.os + recall - 1) / std::sqrt(2.0);
    r.r_value = 1 - (std::abs(r.r1) + std::abs(r.r2)) / 2;
  } else {
    const double inf = std::numeric_limits<double>::infinity();
    r.degenerate = true;
    r.os = inf;
    r.r1 = inf;
    r.r2 = -inf;
    r.r_value = -inf;
  }
  return r;
}

EvalReport compute_metrics(const MatchCounts& counts) {
  if (counts.n_ref <= 0) throw Error(ErrorCode::kNoReferenceBoundaries, "no reference boundaries to score");
  const double p = counts.n_hyp > 0 ? static_cast<double>(counts.n_hits) / static_cast<double>(counts.n_hyp) : 0.0;
  const double r = static_cast<double>(counts.n_hits) / static_cast<double>(counts.n_ref);
  EvalReport report = metrics_from_pr(p, r);
  report.counts = counts;
  return report;
}

std::vector<double> reference_boundaries(const Alignment& alignment) {
  std::vector<double> edges;
  for (const auto& iv : alignment) {
    edges.push_back(iv.start_s);
    edges.push_back(iv.end_s);
  }
  std::sort(edges.begin(), edges.end());
  std::vector<double> unique;
  for (double e : edges)
    if (unique.empty() || e - unique.back() > 1e-6) unique.push_back(e);
  if (unique.size() <= 2) return {};
  return std::vector<double>(unique.begin() + 1, unique.end() - 1);
}

EvalReport evaluate_boundaries(const std::map<std::string, std::vector<double>>& refs,
                               const std::map<std::string, std::vector<double>>& hyps, double tol) {
  MatchCounts total;
  total.tolerance_s = tol;
  static const std::vector<double> empty;
  for (const auto& [id, ref] : refs) {
    auto it = hyps.find(id);
    total += match_boundaries(ref, it == hyps.end() ? empty : it->second, tol);
  }
  return compute_metrics(total);
}

double PairConfusion::accuracy(std::size_t left, std::size_t right) const {
  if (total[left][right] == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(hits[left][right]) / static_cast<double>(total[left][right]);
}

long PairConfusion::boundaries() const {
  long n = 0;
  for (const auto& row : total)
    for (long v : row) n += v;
  return n;
}

PairConfusion& PairConfusion::operator+=(const PairConfusion& other) {
  for (std::size_t i = 0; i < kClasses; ++i)
    for (std::size_t j = 0; j < kClasses; ++j) {
      hits[i][j] += other.hits[i][j];
      total[i][j] += other.total[i][j];
    }
  return *this;
}

PairConfusion pair_confusion(const Alignment& reference, std::span<const double> hyp, const LabelFoldTable& table,
                             double tol) {
  const auto& classes = broad_classes();
  auto class_index = [&](const std::string& label) {
    const auto& name = table.fold(label, FoldMode::kBroad);
    return static_cast<std::size_t>(std::find(classes.begin(), classes.end(), name) - classes.begin());
  };
  PairConfusion out;
  for (std::size_t i = 0; i + 1 < reference.size(); ++i) {
    const auto& a = reference[i];
    const auto& b = reference[i + 1];
    if (std::abs(a.end_s - b.start_s) > 1e-6) continue;
    const std::size_t l = class_index(a.label);
    const std::size_t r = class_index(b.label);
    const double t = a.end_s;
    auto lo = std::lower_bound(hyp.begin(), hyp.end(), t - tol - 1e-9);
    const bool hit = lo != hyp.end() && *lo <= t + tol + 1e-9;
    ++out.total[l][r];
    if (hit) ++out.hits[l][r];
  }
  return out;
}

std::string render_report(const EvalReport& r, const std::string& task) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%-6s %8s %8s %8s %8s %8s\n%-6s %8.2f %8.2f %8.2f %8.2f %8.2f\n", "task", "P", "R", "F1", "OS",
                "R-val", task.c_str(), 100 * r.precision, 100 * r.recall, 100 * r.f1, 100 * r.os, 100 * r.r_value);
  std::string out = buf;
  if (r.degenerate) out += "warning: precision is 0; OS and R-value are degenerate\n";
  return out;
}

void write_report(const std::filesystem::path& path, const EvalReport& r, const std::string& task) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + path.string());
  out.precision(10);
  out << "task=" << task << "\n"
      << "precision=" << r.precision << "\n"
      << "recall=" << r.recall << "\n"
      << "f1=" << r.f1 << "\n"
      << "os=" << r.os << "\n"
      << "r1=" << r.r1 << "\n"
      << "r2=" << r.r2 << "\n"
      << "r_value=" << r.r_value << "\n"
      << "n_hits=" << r.counts.n_hits << "\n"
      << "n_ref=" << r.counts.n_ref << "\n"
      << "n_hyp=" << r.counts.n_hyp << "\n"
      << "tolerance_s=" << r.counts.tolerance_s << "\n"
      << "degenerate=" << (r.degenerate ? 1 : 0) << "\n";
}

void write_pair_confusion_csv(const std::filesystem::path& path, const PairConfusion& c) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + path.string());
  const auto& classes = broad_classes();
  out << "left\right";
  for (const auto& name : classes) out << "," << name;
  out << "\n";
  char cell[32];
  for (std::size_t i = 0; i < PairConfusion::kClasses; ++i) {
    out << classes[i];
    for (std::size_t j = 0; j < PairConfusion::kClasses; ++j) {
      if (c.total[i][j] == 0) {
        out << ",";
      } else {
        std::snprintf(cell, sizeof(cell), ",%.2f", 100 * c.accuracy(i, j));
        out << cell;
      }
    }
    out << "\n";
  }
}

}  // namespace scpc

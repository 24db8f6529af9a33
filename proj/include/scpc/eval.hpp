// scpc/eval.hpp

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

#ifndef SCPC_EVAL_HPP_
#define SCPC_EVAL_HPP_

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "scpc/corpus.hpp"

namespace scpc {

inline constexpr double kMatchTolerance = 0.020;

struct MatchCounts {
  long n_hits = 0;
  long n_ref = 0;
  long n_hyp = 0;
  double tolerance_s = kMatchTolerance;

  MatchCounts& operator+=(const MatchCounts& other);
};

/// One-to-one matching: references in increasing order each take the nearest
/// unconsumed hypothesis within tol. Both lists must be sorted.
MatchCounts match_boundaries(std::span<const double> ref, std::span<const double> hyp,
                             double tol = kMatchTolerance);

struct EvalReport {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double os = 0;
  double r1 = 0;
  double r2 = 0;
  double r_value = 0;
  bool degenerate = false;  // precision 0: os, r1 infinite and r_value -inf
  MatchCounts counts;
};

/// Throws NoReferenceBoundaries when counts.n_ref == 0.
EvalReport compute_metrics(const MatchCounts& counts);

/// Same formulas starting from precision and recall in [0, 1].
EvalReport metrics_from_pr(double precision, double recall);

/// Interior edges of an alignment: every distinct interval start/end except
/// the first and last edge of the utterance.
std::vector<double> reference_boundaries(const Alignment& alignment);

/// Pooled counts over utterances; hyps are keyed by utterance id and missing
/// entries count as empty.
EvalReport evaluate_boundaries(const std::map<std::string, std::vector<double>>& refs,
                               const std::map<std::string, std::vector<double>>& hyps,
                               double tol = kMatchTolerance);

struct PairConfusion {
  static constexpr std::size_t kClasses = 10;
  std::array<std::array<long, kClasses>, kClasses> hits{};
  std::array<std::array<long, kClasses>, kClasses> total{};

  /// hits / total, or NaN for empty cells.
  double accuracy(std::size_t left, std::size_t right) const;
  long boundaries() const;
  PairConfusion& operator+=(const PairConfusion& other);
};

/// Boundaries between touching consecutive phones, bucketed by the broad
/// classes of the left and right phone; a hit is any hyp within tol.
PairConfusion pair_confusion(const Alignment& reference, std::span<const double> hyp,
                             const LabelFoldTable& table = LabelFoldTable::timit_default(),
                             double tol = kMatchTolerance);

void write_report(const std::filesystem::path& path, const EvalReport& report, const std::string& task);
std::string render_report(const EvalReport& report, const std::string& task);
void write_pair_confusion_csv(const std::filesystem::path& path, const PairConfusion& confusion);

}  // namespace scpc

#endif  // SCPC_EVAL_HPP_

// scpc/peaks.hpp

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

// Local-maximum picking with a topographic prominence floor.

#ifndef SCPC_PEAKS_HPP_
#define SCPC_PEAKS_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <vector>

namespace scpc {

/// Indices of local maxima of x. A flat top counts once, at its middle
/// (rounded down); the first and last samples are never peaks.
template <typename Derived>
std::vector<Eigen::Index> local_maxima(const Eigen::MatrixBase<Derived>& x) {
  std::vector<Eigen::Index> peaks;
  const Eigen::Index n = x.size();
  Eigen::Index i = 1;
  while (i < n - 1) {
    if (x(i - 1) < x(i)) {
      Eigen::Index ahead = i + 1;
      while (ahead < n - 1 && x(ahead) == x(i)) ++ahead;
      if (x(ahead) < x(i)) {
        peaks.push_back((i + ahead - 1) / 2);
        i = ahead;
      }
    }
    ++i;
  }
  return peaks;
}

/// Height of each peak above the higher of the two lowest points separating
/// it from strictly higher terrain (or the signal ends).
template <typename Derived>
std::vector<typename Derived::Scalar> peak_prominences(const Eigen::MatrixBase<Derived>& x,
                                                       const std::vector<Eigen::Index>& peaks) {
  using Scalar = typename Derived::Scalar;
  std::vector<Scalar> out;
  out.reserve(peaks.size());
  const Eigen::Index n = x.size();
  for (Eigen::Index p : peaks) {
    Scalar left_min = x(p);
    for (Eigen::Index i = p - 1; i >= 0 && x(i) <= x(p); --i) left_min = std::min(left_min, x(i));
    Scalar right_min = x(p);
    for (Eigen::Index i = p + 1; i < n && x(i) <= x(p); ++i) right_min = std::min(right_min, x(i));
    out.push_back(x(p) - std::max(left_min, right_min));
  }
  return out;
}

/// Local maxima whose prominence is at least min_prominence.
template <typename Derived>
std::vector<Eigen::Index> find_peaks(const Eigen::MatrixBase<Derived>& x, double min_prominence) {
  auto peaks = local_maxima(x);
  const auto prom = peak_prominences(x, peaks);
  std::vector<Eigen::Index> kept;
  for (std::size_t i = 0; i < peaks.size(); ++i)
    if (static_cast<double>(prom[i]) >= min_prominence) kept.push_back(peaks[i]);
  return kept;
}

}  // namespace scpc

#endif  // SCPC_PEAKS_HPP_

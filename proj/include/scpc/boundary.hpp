// scpc/boundary.hpp

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

// Differentiable boundary detection over adjacent-frame dissimilarities.
//
// The templated functions compute values only and work for any floating
// scalar; the Var overloads build the same quantities into the autodiff
// graph for training.

#ifndef SCPC_BOUNDARY_HPP_
#define SCPC_BOUNDARY_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>

#include "scpc/autograd.hpp"

namespace scpc {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Cosine similarity of consecutive rows: ds(t) = sim(z_t, z_{t+1}).
template <typename Derived>
VectorX<typename Derived::Scalar> adjacent_similarity(const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = z.rows() - 1;
  VectorX<Scalar> ds(std::max<Eigen::Index>(n, 0));
  const Scalar eps(1e-8);
  for (Eigen::Index t = 0; t < n; ++t) {
    const Scalar na = std::max(z.row(t).norm(), eps);
    const Scalar nb = std::max(z.row(t + 1).norm(), eps);
    ds(t) = z.row(t).dot(z.row(t + 1)) / (na * nb);
  }
  return ds;
}

/// d = 1 - minmax(ds); identically zero when ds is constant.
template <typename Derived>
VectorX<typename Derived::Scalar> minmax_dissimilarity(const Eigen::MatrixBase<Derived>& ds) {
  using Scalar = typename Derived::Scalar;
  if (ds.size() == 0) return VectorX<Scalar>();
  const Scalar lo = ds.minCoeff();
  const Scalar range = ds.maxCoeff() - lo;
  if (!(range > Scalar(1e-12))) return VectorX<Scalar>::Zero(ds.size());
  return (Scalar(1) - (ds.array() - lo) / range).matrix();
}

template <typename Derived>
VectorX<typename Derived::Scalar> adjacent_dissimilarity(const Eigen::MatrixBase<Derived>& z) {
  return minmax_dissimilarity(adjacent_similarity(z));
}

template <typename Scalar>
struct PeakScores {
  VectorX<Scalar> p1;
  VectorX<Scalar> p2;
  VectorX<Scalar> p;
};

/// Two-sided peak scores over d with zero padding beyond both ends:
///   p1_t = min(max(d_t - d_{t+1}, 0), max(d_t - d_{t-1}, 0))
///   p2_t = same with t +- 2
///   p_t  = min(max(max(p1_t, p2_t) - thres, 0), p1_t)
/// With use_p2 false the inner max(p1, p2) is replaced by p1.
template <typename Derived>
PeakScores<typename Derived::Scalar> peak_scores(const Eigen::MatrixBase<Derived>& d,
                                                 typename Derived::Scalar thres, bool use_p2 = true) {
  using Scalar = typename Derived::Scalar;
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = d.size();
  Array padded = Array::Zero(n + 4);
  padded.segment(2, n) = d.array();
  const auto centre = padded.segment(2, n);
  const Array zero = Array::Zero(n);
  PeakScores<Scalar> out;
  Array p1 = (centre - padded.segment(3, n)).max(zero).min((centre - padded.segment(1, n)).max(zero));
  Array p2 = (centre - padded.segment(4, n)).max(zero).min((centre - padded.segment(0, n)).max(zero));
  Array inner = use_p2 ? Array(p1.max(p2)) : p1;
  out.p = (inner - thres).max(zero).min(p1).matrix();
  out.p1 = p1.matrix();
  out.p2 = p2.matrix();
  return out;
}

inline constexpr double kSoftScale = 10.0;
inline constexpr double kHardScale = 1000.0;

/// Forward value of the straight-through boundary indicator, tanh(1000 p).
template <typename Derived>
VectorX<typename Derived::Scalar> hard_boundaries(const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  return (p.array() * Scalar(kHardScale)).tanh().matrix();
}

/// Number of segments delimited by interior boundaries: round(sum b) + 1.
template <typename Derived>
Eigen::Index segment_count(const Eigen::MatrixBase<Derived>& b) {
  return static_cast<Eigen::Index>(std::llround(static_cast<double>(b.sum()))) + 1;
}

// ---- autodiff --------------------------------------------------------------

/// Learned or fixed scalar threshold shared across utterances.
struct BoundaryThreshold {
  ad::Var value;
  bool learnable = false;
  double init = 0.05;

  static BoundaryThreshold make(double init, bool learnable);
  double get() const { return value.item(); }
  /// Projects back onto [0, 1]; call after each optimiser step.
  void clamp();
};

struct BoundaryVector {
  ad::Var b;             // forward tanh(1000 p), gradient of tanh(10 p)
  ad::Matrix b_soft;     // tanh(10 p)
  ad::Matrix b_hard;     // tanh(1000 p)
  ad::Matrix p;
  ad::Matrix p1;
  ad::Matrix p2;
};

/// (L-1) x 1 dissimilarities of an L x p frame matrix.
ad::Var adjacent_dissimilarity(const ad::Var& z);

/// Differentiable peak score p (w.r.t. d and thres); p1 and p2 are reported
/// by value through `p1_out` / `p2_out` when non-null.
ad::Var peak_scores(const ad::Var& d, const ad::Var& thres, bool use_p2, ad::Matrix* p1_out = nullptr,
                    ad::Matrix* p2_out = nullptr);

/// b = b_soft + sg(b_hard - b_soft).
ad::Var straight_through(const ad::Var& p);

/// Full detector: dissimilarity -> peaks -> straight-through indicators.
BoundaryVector detect_boundaries(const ad::Var& d, const BoundaryThreshold& thres, bool use_p2);

/// Writes `t d p1 p2 p b` rows with 6-decimal fixed point; t is the 1-based gap.
void write_score_dump(const std::filesystem::path& path, const ad::Matrix& d, const BoundaryVector& bounds);

}  // namespace scpc

#endif  // SCPC_BOUNDARY_HPP_

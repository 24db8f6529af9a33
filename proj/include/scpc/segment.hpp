// scpc/segment.hpp

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

#ifndef SCPC_SEGMENT_HPP_
#define SCPC_SEGMENT_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scpc/frame_encoder.hpp"

namespace scpc {

enum class RepMode { kAvg, kMax, kMid, kWavg };
enum class AggregatorMode { kRnn, kPreviousSegment };

const char* rep_mode_name(RepMode mode);
RepMode parse_rep_mode(const std::string& name);
const char* aggregator_mode_name(AggregatorMode mode);
AggregatorMode parse_aggregator_mode(const std::string& name);

inline constexpr double kWeightScale = 100.0;

using SegmentRanges = std::vector<std::pair<Index, Index>>;  // [start, end) frames

/// Contiguous frame ranges delimited by b (length L-1): frame i belongs to
/// segment round(b_0 + ... + b_{i-1}).
template <typename Derived>
SegmentRanges segment_ranges(const Eigen::MatrixBase<Derived>& b, Index frames) {
  SegmentRanges out;
  double cum = 0;
  Index current = 0;
  Index start = 0;
  for (Index i = 1; i < frames; ++i) {
    cum += static_cast<double>(b(i - 1));
    const auto id = static_cast<Index>(std::llround(cum));
    if (id != current) {
      out.emplace_back(start, i);
      start = i;
      current = id;
    }
  }
  out.emplace_back(start, frames);
  return out;
}

/// L x M segment-mean weights: column j holds 1 - tanh(scale |j - seg(i)|)
/// normalised to unit sum, seg(i) being the running sum of b before frame i.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> build_weight_matrix(
    const Eigen::MatrixBase<Derived>& b, Index frames, double scale = kWeightScale) {
  using Scalar = typename Derived::Scalar;
  const Index m = static_cast<Index>(std::llround(static_cast<double>(b.sum()))) + 1;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> w(frames, m);
  Scalar seg(0);
  for (Index i = 0; i < frames; ++i) {
    if (i > 0) seg += b(i - 1);
    for (Index j = 0; j < m; ++j) w(i, j) = Scalar(1) - std::tanh(Scalar(scale) * std::abs(Scalar(j) - seg));
  }
  for (Index j = 0; j < m; ++j) w.col(j) /= std::max(w.col(j).sum(), Scalar(1e-300));
  return w;
}

/// Autodiff version of build_weight_matrix; differentiable w.r.t. b.
Var segment_weights(const Var& b, Index frames, double scale = kWeightScale);

/// M x p pooled frames under `mode`. avg/wavg go through segment_weights and
/// stay differentiable w.r.t. b; max and mid use the hard segment ranges.
Var pool_segments(const Var& z, const Var& b, RepMode mode);

struct SegmentEncoderConfig {
  Index input_dim = 64;
  Index hidden = 256;
  Index output_dim = 256;
  Index context_hidden = 64;
};

/// Two-layer feed-forward map applied row-wise to pooled segments.
class SegmentEncoder {
 public:
  SegmentEncoder() = default;
  SegmentEncoder(const SegmentEncoderConfig& config, Rng& rng);

  Var forward(const Var& pooled) const;
  void visit(const std::string& prefix, const nn::TensorVisitor& fn);

 private:
  nn::Linear first_;
  nn::Linear second_;
};

/// Causal context over segments: GRU then a linear layer (rnn), or a linear
/// projection of the current segment alone (previous_segment).
class SegmentContext {
 public:
  SegmentContext() = default;
  SegmentContext(const SegmentEncoderConfig& config, AggregatorMode mode, Rng& rng);

  Var forward(const Var& s) const;
  void visit(const std::string& prefix, const nn::TensorVisitor& fn);
  AggregatorMode mode() const { return mode_; }

 private:
  AggregatorMode mode_ = AggregatorMode::kRnn;
  nn::Gru gru_;
  nn::Linear output_;
};

/// Next-segment loss for one utterance with explicit distractors:
/// negatives(t, j) indexes `pool` for predicting s_{t+1} from c_t.
Var nsc_loss(const Var& c, const Var& s, const Var& pool,
             const Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>& negatives);

struct NscResult {
  Var loss;          // undefined when no utterance qualified
  int used = 0;      // utterances with M >= 3
  int skipped = 0;   // utterances contributing zero
};

/// Averages the next-segment loss over utterances with at least three
/// segments; the others are skipped and counted.
NscResult nsc_loss(std::span<const Var> contexts, std::span<const Var> segments,
                   const NegativeSamplingPolicy& policy, Rng& rng);

}  // namespace scpc

#endif  // SCPC_SEGMENT_HPP_

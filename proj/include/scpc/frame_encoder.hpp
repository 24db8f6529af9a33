// scpc/frame_encoder.hpp

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

#ifndef SCPC_FRAME_ENCODER_HPP_
#define SCPC_FRAME_ENCODER_HPP_

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scpc/nn.hpp"

namespace scpc {

using ad::Index;
using ad::Matrix;
using ad::Real;
using ad::Var;
using nn::Rng;

inline constexpr double kFrameHop = 0.010;

struct FrameEncoderConfig {
  std::vector<Index> kernel_sizes{10, 8, 4, 4, 4};
  std::vector<Index> strides{5, 4, 2, 2, 2};
  Index channels = 256;
  Index projection_dim = 64;
  Real leaky_slope = 0.01;

  /// Throws InvalidConfig unless strides multiply to 160 and dims are positive.
  void validate() const;
  Index receptive_field() const;
  /// Frames produced from `samples` inputs; 0 below the receptive field.
  Index output_length(Index samples) const;
};

/// Nominal centre time in seconds of 0-based frame `t`.
double frame_center_s(Index t);
/// Timestamp in seconds of 0-based gap `g` (between frames g and g+1).
double gap_time_s(Index g);

struct FrameMatrix {
  Var z;  // L x p
  double hop_s = kFrameHop;
  std::string utterance_id;

  Index length() const { return z.rows(); }
};

/// Maps an input (waveform as T x 1, or precomputed features as L x D) to
/// L x p frame latents.
class FrameEncoder {
 public:
  virtual ~FrameEncoder() = default;

  /// Encodes a batch. Normalisation layers see all frames of the batch.
  virtual std::vector<Var> forward(std::span<const Matrix> inputs, bool training) = 0;
  virtual void visit(const std::string& prefix, const nn::TensorVisitor& fn) = 0;
  virtual Index output_dim() const = 0;
  /// Frames produced from an input with `rows` rows.
  virtual Index output_length(Index rows) const = 0;
  virtual Index min_input_rows() const = 0;
};

/// Five strided valid convolutions, each followed by batch normalisation and
/// a leaky rectifier, then a linear projection to p dimensions.
class ConvFrameEncoder : public FrameEncoder {
 public:
  ConvFrameEncoder(const FrameEncoderConfig& config, Rng& rng);

  std::vector<Var> forward(std::span<const Matrix> inputs, bool training) override;
  void visit(const std::string& prefix, const nn::TensorVisitor& fn) override;
  Index output_dim() const override { return config_.projection_dim; }
  Index output_length(Index rows) const override { return config_.output_length(rows); }
  Index min_input_rows() const override { return config_.receptive_field(); }

  /// Inference-mode encoding of one waveform. Throws TooShortUtterance.
  FrameMatrix encode(const Eigen::VectorXd& samples, const std::string& id = "");

  const FrameEncoderConfig& config() const { return config_; }

 private:
  FrameEncoderConfig config_;
  std::vector<nn::Conv1d> convs_;
  std::vector<nn::BatchNorm> norms_;
  nn::Linear projection_;
};

/// Three-layer feed-forward encoder over precomputed frame features
/// (in -> hidden -> hidden -> p), one output frame per input frame.
class MlpFrameEncoder : public FrameEncoder {
 public:
  MlpFrameEncoder(Index input_dim, Index hidden, Index output_dim, Rng& rng);

  std::vector<Var> forward(std::span<const Matrix> inputs, bool training) override;
  void visit(const std::string& prefix, const nn::TensorVisitor& fn) override;
  Index output_dim() const override { return layers_.back().out_dim(); }
  Index output_length(Index rows) const override { return rows; }
  Index min_input_rows() const override { return 1; }
  Index input_dim() const { return layers_.front().in_dim(); }

 private:
  std::vector<nn::Linear> layers_;
};

/// Waveform column vector as an encoder input.
Matrix waveform_input(const Eigen::VectorXd& samples);

// ---- next-frame classification ------------------------------------------

enum class NegativeMode { kSameUtterance, kMixedUtterance };

const char* negative_mode_name(NegativeMode mode);
NegativeMode parse_negative_mode(const std::string& name);

struct NegativeSamplingPolicy {
  int k = 1;
  NegativeMode mode = NegativeMode::kSameUtterance;
};

/// K indices drawn uniformly with replacement from [0, pool_size) \ {target}.
/// Throws EmptyPool when pool_size <= 1.
std::vector<Index> sample_negatives(Index pool_size, Index target, int k, Rng& rng);

/// Contrastive next-frame loss for one utterance with explicit distractors:
/// negatives(t, j) indexes `pool` and is the j-th distractor for predicting
/// frame t+1 from frame t (t = 0 .. L-2). Mean over t.
Var nfc_loss(const Var& z, const Var& pool, const Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>& negatives);

/// Samples distractors under `policy` and averages the per-utterance loss
/// over the batch. Same-utterance pools are the utterance itself; mixed pools
/// are all frames of the batch. Throws DegenerateUtterance when any L < 3.
Var nfc_loss(std::span<const Var> batch, const NegativeSamplingPolicy& policy, Rng& rng);

}  // namespace scpc

#endif  // SCPC_FRAME_ENCODER_HPP_

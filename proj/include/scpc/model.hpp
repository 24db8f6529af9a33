// scpc/model.hpp

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

// Full segmental model: frame encoder, boundary detector, segment encoder
// and segment context, plus an optional frame-level context network.

#ifndef SCPC_MODEL_HPP_
#define SCPC_MODEL_HPP_

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scpc/boundary.hpp"
#include "scpc/corpus.hpp"
#include "scpc/multistep.hpp"
#include "scpc/segment.hpp"

namespace scpc {

enum class Frontend { kWaveform, kFeatures };

const char* frontend_name(Frontend f);
Frontend parse_frontend(const std::string& name);

struct ModelConfig {
  Frontend frontend = Frontend::kWaveform;
  FrameEncoderConfig frame;
  Index feature_dim = 0;       // features frontend only
  Index feature_hidden = 256;  // features frontend only
  SegmentEncoderConfig segment;
  RepMode rep = RepMode::kAvg;
  AggregatorMode aggregator = AggregatorMode::kRnn;
  bool use_p2 = true;
  double thres_init = 0.05;
  bool learn_thres = false;
  int frame_context_steps = 0;  // 0 disables the frame context network
  Index frame_context_hidden = 64;

  void validate() const;
};

struct ModelOutput {
  std::vector<Var> z;
  std::vector<Var> d;
  std::vector<BoundaryVector> bounds;
  std::vector<SegmentRanges> ranges;
  std::vector<Var> pooled;
  std::vector<Var> s;
  std::vector<Var> c;
};

/// Inference-time traces for one utterance.
struct UtteranceAnalysis {
  Matrix z;
  Eigen::VectorXd d;
  Eigen::VectorXd p1, p2, p, b;
  SegmentRanges ranges;
  Matrix s;
  Matrix c;
  Eigen::VectorXd word_scores;  // 1 - sim(c_t, s_{t+1}), one per transition
};

class ScpcModel {
 public:
  ScpcModel(const ModelConfig& config, Rng& rng);

  /// Frames only.
  std::vector<Var> encode(std::span<const Matrix> inputs, bool training);

  /// Frames, boundaries and, when with_segments, the segment path.
  ModelOutput forward(std::span<const Matrix> inputs, bool training, bool with_segments);

  /// Segment path for given frames and boundary indicators.
  void segment_path(const Var& z, const Var& b, Var* pooled, Var* s, Var* c) const;

  UtteranceAnalysis analyze(const Matrix& input);

  /// Parameter groups: frame_encoder, segment_encoder, segment_context,
  /// frame_context (when enabled) and boundary.thres.
  void visit(const nn::TensorVisitor& fn);
  std::vector<Var> parameters();
  Index parameter_count();

  Matrix input_for(const Utterance& utt) const;
  Index min_input_rows() const { return frame_encoder_->min_input_rows(); }
  Index frames_for(Index rows) const { return frame_encoder_->output_length(rows); }

  const ModelConfig& config() const { return config_; }
  BoundaryThreshold& threshold() { return threshold_; }
  const FrameContextNetwork* frame_context() const {
    return config_.frame_context_steps > 0 ? &frame_context_ : nullptr;
  }

 private:
  ModelConfig config_;
  std::unique_ptr<FrameEncoder> frame_encoder_;
  BoundaryThreshold threshold_;
  SegmentEncoder segment_encoder_;
  SegmentContext segment_context_;
  FrameContextNetwork frame_context_;
};

/// Per-transition word score: 1 - cos(c_t, s_{t+1}).
Eigen::VectorXd word_scores(const Matrix& c, const Matrix& s);

}  // namespace scpc

#endif  // SCPC_MODEL_HPP_

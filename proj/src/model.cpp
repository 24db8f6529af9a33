// src/model.cpp

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

#include "scpc/model.hpp"

#include "scpc/error.hpp"

namespace scpc {

const char* frontend_name(Frontend f) { return f == Frontend::kWaveform ? "waveform" : "features"; }

Frontend parse_frontend(const std::string& name) {
  if (name == "waveform") return Frontend::kWaveform;
  if (name == "features") return Frontend::kFeatures;
  throw Error(ErrorCode::kInvalidConfig, "unknown frontend '" + name + "'");
}

void ModelConfig::validate() const {
  if (frontend == Frontend::kWaveform) frame.validate();
  if (frontend == Frontend::kFeatures && feature_dim <= 0)
    throw Error(ErrorCode::kInvalidConfig, "features frontend needs feature_dim > 0");
  if (frame.projection_dim <= 0 || segment.hidden <= 0 || segment.output_dim <= 0 || segment.context_hidden <= 0)
    throw Error(ErrorCode::kInvalidConfig, "layer widths must be positive");
  if (thres_init < 0 || thres_init > 1) throw Error(ErrorCode::kInvalidConfig, "thres_init must lie in [0, 1]");
  if (frame_context_steps < 0) throw Error(ErrorCode::kInvalidConfig, "frame_context_steps must be >= 0");
}

ScpcModel::ScpcModel(const ModelConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  if (config_.frontend == Frontend::kWaveform)
    frame_encoder_ = std::make_unique<ConvFrameEncoder>(config_.frame, rng);
  else
    frame_encoder_ = std::make_unique<MlpFrameEncoder>(config_.feature_dim, config_.feature_hidden,
                                                       config_.frame.projection_dim, rng);
  threshold_ = BoundaryThreshold::make(config_.thres_init, config_.learn_thres);
  config_.segment.input_dim = config_.frame.projection_dim;
  segment_encoder_ = SegmentEncoder(config_.segment, rng);
  segment_context_ = SegmentContext(config_.segment, config_.aggregator, rng);
  if (config_.frame_context_steps > 0)
    frame_context_ = FrameContextNetwork(config_.frame.projection_dim,
                                         {config_.frame_context_steps, config_.frame_context_hidden}, rng);
}

std::vector<Var> ScpcModel::encode(std::span<const Matrix> inputs, bool training) {
  return frame_encoder_->forward(inputs, training);
}

void ScpcModel::segment_path(const Var& z, const Var& b, Var* pooled, Var* s, Var* c) const {
  Var pooled_v = pool_segments(z, b, config_.rep);
  Var s_v = segment_encoder_.forward(pooled_v);
  if (pooled) *pooled = pooled_v;
  if (s) *s = s_v;
  if (c) *c = segment_context_.forward(s_v);
}

ModelOutput ScpcModel::forward(std::span<const Matrix> inputs, bool training, bool with_segments) {
  ModelOutput out;
  out.z = encode(inputs, training);
  for (const auto& z : out.z) {
    if (z.rows() < 2) throw Error(ErrorCode::kDegenerateUtterance, "need at least two frames");
    Var d = adjacent_dissimilarity(z);
    BoundaryVector bv = detect_boundaries(d, threshold_, config_.use_p2);
    out.ranges.push_back(segment_ranges(bv.b.value().col(0), z.rows()));
    if (with_segments) {
      Var pooled, s, c;
      segment_path(z, bv.b, &pooled, &s, &c);
      out.pooled.push_back(pooled);
      out.s.push_back(s);
      out.c.push_back(c);
    }
    out.d.push_back(d);
    out.bounds.push_back(std::move(bv));
  }
  return out;
}

Eigen::VectorXd word_scores(const Matrix& c, const Matrix& s) {
  const Index n = s.rows() - 1;
  Eigen::VectorXd out(std::max<Index>(n, 0));
  for (Index t = 0; t < n; ++t) {
    const double na = std::max(c.row(t).norm(), 1e-8);
    const double nb = std::max(s.row(t + 1).norm(), 1e-8);
    out(t) = 1.0 - c.row(t).dot(s.row(t + 1)) / (na * nb);
  }
  return out;
}

UtteranceAnalysis ScpcModel::analyze(const Matrix& input) {
  ad::NoGradGuard guard;
  auto out = forward(std::span<const Matrix>(&input, 1), false, true);
  UtteranceAnalysis a;
  a.z = out.z[0].value();
  a.d = out.d[0].value().col(0);
  const auto& bv = out.bounds[0];
  a.p1 = bv.p1.col(0);
  a.p2 = bv.p2.col(0);
  a.p = bv.p.col(0);
  a.b = bv.b.value().col(0);
  a.ranges = out.ranges[0];
  a.s = out.s[0].value();
  a.c = out.c[0].value();
  a.word_scores = word_scores(a.c, a.s);
  return a;
}

void ScpcModel::visit(const nn::TensorVisitor& fn) {
  frame_encoder_->visit("frame_encoder", fn);
  segment_encoder_.visit("segment_encoder", fn);
  segment_context_.visit("segment_context", fn);
  if (config_.frame_context_steps > 0) frame_context_.visit("frame_context", fn);
  fn("boundary.thres", threshold_.value);
}

std::vector<Var> ScpcModel::parameters() {
  std::vector<Var> out;
  visit([&](const std::string&, Var& v) {
    if (v.requires_grad()) out.push_back(v);
  });
  return out;
}

Index ScpcModel::parameter_count() {
  Index n = 0;
  for (const auto& p : parameters()) n += p.value().size();
  return n;
}

Matrix ScpcModel::input_for(const Utterance& utt) const {
  if (config_.frontend != Frontend::kWaveform)
    throw Error(ErrorCode::kInvalidConfig, "features frontend takes feature matrices, not waveforms");
  return waveform_input(utt.samples);
}

}  // namespace scpc

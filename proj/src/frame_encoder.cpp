// src/frame_encoder.cpp

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

#include "scpc/frame_encoder.hpp"

#include "scpc/corpus.hpp"
#include "scpc/error.hpp"

namespace scpc {

void FrameEncoderConfig::validate() const {
  if (kernel_sizes.empty() || kernel_sizes.size() != strides.size())
    throw Error(ErrorCode::kInvalidConfig, "kernel_sizes and strides must be non-empty and equal length");
  Index product = 1;
  for (std::size_t i = 0; i < strides.size(); ++i) {
    if (kernel_sizes[i] <= 0 || strides[i] <= 0)
      throw Error(ErrorCode::kInvalidConfig, "kernel sizes and strides must be positive");
    product *= strides[i];
  }
  if (product != 160) throw Error(ErrorCode::kInvalidConfig, "strides must multiply to 160");
  if (channels <= 0 || projection_dim <= 0)
    throw Error(ErrorCode::kInvalidConfig, "channels and projection_dim must be positive");
}

Index FrameEncoderConfig::receptive_field() const {
  Index field = 1;
  Index jump = 1;
  for (std::size_t i = 0; i < kernel_sizes.size(); ++i) {
    field += (kernel_sizes[i] - 1) * jump;
    jump *= strides[i];
  }
  return field;
}

Index FrameEncoderConfig::output_length(Index samples) const {
  Index n = samples;
  for (std::size_t i = 0; i < kernel_sizes.size(); ++i) {
    if (n < kernel_sizes[i]) return 0;
    n = (n - kernel_sizes[i]) / strides[i] + 1;
  }
  return n;
}

double frame_center_s(Index t) { return (160.0 * static_cast<double>(t) + 232.0) / kSampleRate; }

double gap_time_s(Index g) { return static_cast<double>(g + 1) * kFrameHop; }

Matrix waveform_input(const Eigen::VectorXd& samples) {
  Matrix m(samples.size(), 1);
  m.col(0) = samples;
  return m;
}

namespace {

std::vector<Var> split_rows(const Var& stacked, std::span<const Index> lengths) {
  std::vector<Var> out;
  Index start = 0;
  for (Index len : lengths) {
    out.push_back(ad::slice_rows(stacked, start, len));
    start += len;
  }
  return out;
}

}  // namespace

ConvFrameEncoder::ConvFrameEncoder(const FrameEncoderConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  Index in = 1;
  for (std::size_t i = 0; i < config_.kernel_sizes.size(); ++i) {
    convs_.emplace_back(in, config_.channels, config_.kernel_sizes[i], config_.strides[i], rng);
    norms_.emplace_back(config_.channels);
    in = config_.channels;
  }
  projection_ = nn::Linear(config_.channels, config_.projection_dim, rng);
}

std::vector<Var> ConvFrameEncoder::forward(std::span<const Matrix> inputs, bool training) {
  std::vector<Var> current;
  for (const auto& x : inputs) {
    if (x.rows() < config_.receptive_field())
      throw Error(ErrorCode::kTooShortUtterance,
                  std::to_string(x.rows()) + " samples, need " + std::to_string(config_.receptive_field()));
    current.push_back(ad::constant(x));
  }
  for (std::size_t layer = 0; layer < convs_.size(); ++layer) {
    std::vector<Var> conv_out;
    std::vector<Index> lengths;
    for (const auto& x : current) {
      conv_out.push_back(convs_[layer].forward(x));
      lengths.push_back(conv_out.back().rows());
    }
    Var stacked = conv_out.size() == 1 ? conv_out.front() : ad::vcat(conv_out);
    stacked = ad::leaky_relu(norms_[layer].forward(stacked, training), config_.leaky_slope);
    current = conv_out.size() == 1 ? std::vector<Var>{stacked} : split_rows(stacked, lengths);
  }
  std::vector<Index> lengths;
  for (const auto& x : current) lengths.push_back(x.rows());
  Var stacked = current.size() == 1 ? current.front() : ad::vcat(current);
  Var projected = projection_.forward(stacked);
  return current.size() == 1 ? std::vector<Var>{projected} : split_rows(projected, lengths);
}

void ConvFrameEncoder::visit(const std::string& prefix, const nn::TensorVisitor& fn) {
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    convs_[i].visit(prefix + ".conv" + std::to_string(i), fn);
    norms_[i].visit(prefix + ".norm" + std::to_string(i), fn);
  }
  projection_.visit(prefix + ".projection", fn);
}

FrameMatrix ConvFrameEncoder::encode(const Eigen::VectorXd& samples, const std::string& id) {
  ad::NoGradGuard guard;
  Matrix input = waveform_input(samples);
  auto out = forward(std::span<const Matrix>(&input, 1), false);
  return FrameMatrix{out.front(), kFrameHop, id};
}

MlpFrameEncoder::MlpFrameEncoder(Index input_dim, Index hidden, Index output_dim, Rng& rng) {
  layers_.emplace_back(input_dim, hidden, rng);
  layers_.emplace_back(hidden, hidden, rng);
  layers_.emplace_back(hidden, output_dim, rng);
}

std::vector<Var> MlpFrameEncoder::forward(std::span<const Matrix> inputs, bool /*training*/) {
  std::vector<Var> out;
  for (const auto& x : inputs) {
    if (x.cols() != input_dim())
      throw Error(ErrorCode::kInconsistentLengths, "feature dimension " + std::to_string(x.cols()) +
                                                       " does not match encoder input " +
                                                       std::to_string(input_dim()));
    Var h = ad::constant(x);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      h = layers_[i].forward(h);
      if (i + 1 < layers_.size()) h = ad::relu(h);
    }
    out.push_back(h);
  }
  return out;
}

void MlpFrameEncoder::visit(const std::string& prefix, const nn::TensorVisitor& fn) {
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].visit(prefix + ".layer" + std::to_string(i), fn);
}

// ---- next-frame classification ------------------------------------------

const char* negative_mode_name(NegativeMode mode) {
  return mode == NegativeMode::kSameUtterance ? "same_utterance" : "mixed_utterance";
}

NegativeMode parse_negative_mode(const std::string& name) {
  if (name == "same_utterance" || name == "same") return NegativeMode::kSameUtterance;
  if (name == "mixed_utterance" || name == "mixed") return NegativeMode::kMixedUtterance;
  throw Error(ErrorCode::kInvalidConfig, "unknown negative sampling mode '" + name + "'");
}

std::vector<Index> sample_negatives(Index pool_size, Index target, int k, Rng& rng) {
  if (pool_size <= 1) throw Error(ErrorCode::kEmptyPool, "need at least one non-target candidate");
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    // Uniform over pool_size - 1 slots, skipping the target.
    auto idx = static_cast<Index>(rng() % static_cast<std::uint64_t>(pool_size - 1));
    if (idx >= target) ++idx;
    out.push_back(idx);
  }
  return out;
}

Var nfc_loss(const Var& z, const Var& pool,
             const Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>& negatives) {
  const Index steps = z.rows() - 1;
  if (negatives.rows() != steps) throw std::invalid_argument("nfc_loss: one negative row per step expected");
  Var refs = ad::slice_rows(z, 0, steps);
  Var targets = ad::slice_rows(z, 1, steps);
  std::vector<Var> logits{ad::row_cosine(refs, targets)};
  for (Index j = 0; j < negatives.cols(); ++j) {
    std::vector<Index> idx(static_cast<std::size_t>(steps));
    for (Index t = 0; t < steps; ++t) idx[static_cast<std::size_t>(t)] = negatives(t, j);
    logits.push_back(ad::row_cosine(refs, ad::gather_rows(pool, idx)));
  }
  return ad::info_nce(ad::hcat(logits));
}

Var nfc_loss(std::span<const Var> batch, const NegativeSamplingPolicy& policy, Rng& rng) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyCorpus, "nfc_loss: empty batch");
  if (policy.k < 1) throw Error(ErrorCode::kInvalidConfig, "K must be at least 1");
  for (const auto& z : batch)
    if (z.rows() < 3)
      throw Error(ErrorCode::kDegenerateUtterance, "next-frame loss needs L >= 3, got " + std::to_string(z.rows()));
  Var pool;
  std::vector<Index> offsets;
  if (policy.mode == NegativeMode::kMixedUtterance) {
    pool = batch.size() == 1 ? batch.front() : ad::vcat(batch);
    Index off = 0;
    for (const auto& z : batch) {
      offsets.push_back(off);
      off += z.rows();
    }
  }
  std::vector<Var> losses;
  for (std::size_t u = 0; u < batch.size(); ++u) {
    const Var& z = batch[u];
    const Index steps = z.rows() - 1;
    Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> negatives(steps, policy.k);
    const bool mixed = policy.mode == NegativeMode::kMixedUtterance;
    const Index pool_size = mixed ? pool.rows() : z.rows();
    const Index offset = mixed ? offsets[u] : 0;
    for (Index t = 0; t < steps; ++t) {
      auto draws = sample_negatives(pool_size, offset + t + 1, policy.k, rng);
      for (int j = 0; j < policy.k; ++j) negatives(t, j) = draws[static_cast<std::size_t>(j)];
    }
    losses.push_back(nfc_loss(z, mixed ? pool : z, negatives));
  }
  Var total = losses.front();
  for (std::size_t i = 1; i < losses.size(); ++i) total = total + losses[i];
  return ad::scale(total, 1.0 / static_cast<Real>(losses.size()));
}

}  // namespace scpc

// src/segment.cpp

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

#include "scpc/segment.hpp"

#include "scpc/error.hpp"

namespace scpc {

const char* rep_mode_name(RepMode mode) {
  switch (mode) {
    case RepMode::kAvg: return "avg";
    case RepMode::kMax: return "max";
    case RepMode::kMid: return "mid";
    case RepMode::kWavg: return "wavg";
  }
  return "avg";
}

RepMode parse_rep_mode(const std::string& name) {
  if (name == "avg") return RepMode::kAvg;
  if (name == "max") return RepMode::kMax;
  if (name == "mid") return RepMode::kMid;
  if (name == "wavg") return RepMode::kWavg;
  throw Error(ErrorCode::kInvalidConfig, "unknown segment representation '" + name + "'");
}

const char* aggregator_mode_name(AggregatorMode mode) {
  return mode == AggregatorMode::kRnn ? "rnn" : "previous_segment";
}

AggregatorMode parse_aggregator_mode(const std::string& name) {
  if (name == "rnn") return AggregatorMode::kRnn;
  if (name == "previous_segment" || name == "previous") return AggregatorMode::kPreviousSegment;
  throw Error(ErrorCode::kInvalidConfig, "unknown aggregator '" + name + "'");
}

Var segment_weights(const Var& b, Index frames, double scale) {
  if (b.rows() != frames - 1) throw std::invalid_argument("segment_weights: b must have L-1 entries");
  const Eigen::VectorXd bv = b.value().col(0);
  Matrix w = build_weight_matrix(bv, frames, scale);
  const Index m = w.cols();
  // Keep the raw weights' column sums and running segment positions for backward.
  Eigen::VectorXd seg(frames);
  seg(0) = 0;
  for (Index i = 1; i < frames; ++i) seg(i) = seg(i - 1) + bv(i - 1);
  Eigen::VectorXd col_sum(m);
  for (Index j = 0; j < m; ++j) {
    double s = 0;
    for (Index i = 0; i < frames; ++i) s += 1.0 - std::tanh(scale * std::abs(static_cast<double>(j) - seg(i)));
    col_sum(j) = std::max(s, 1e-300);
  }
  return ad::make_result(std::move(w), {b}, [seg, col_sum, scale](ad::Node& node) {
    const Matrix& w = node.value;
    const Matrix& g = node.grad;
    const Index frames = w.rows();
    const Index m = w.cols();
    Eigen::VectorXd g_seg = Eigen::VectorXd::Zero(frames);
    for (Index j = 0; j < m; ++j) {
      const double inner = g.col(j).dot(w.col(j));
      for (Index i = 0; i < frames; ++i) {
        const double g_raw = (g(i, j) - inner) / col_sum(j);
        const double x = static_cast<double>(j) - seg(i);
        const double th = std::tanh(scale * std::abs(x));
        const double sign = (x > 0) - (x < 0);
        // raw = 1 - tanh(scale |x|), x = j - seg(i)
        g_seg(i) += g_raw * scale * (1 - th * th) * sign;
      }
    }
    // seg(i) = sum_{k < i} b_k
    Matrix g_b(frames - 1, 1);
    double acc = 0;
    for (Index k = frames - 2; k >= 0; --k) {
      acc += g_seg(k + 1);
      g_b(k, 0) = acc;
    }
    node.parents[0]->accumulate(g_b);
  });
}

Var pool_segments(const Var& z, const Var& b, RepMode mode) {
  const Index frames = z.rows();
  switch (mode) {
    case RepMode::kAvg:
      return ad::matmul(ad::transpose(segment_weights(b, frames)), z);
    case RepMode::kMax: {
      const auto ranges = segment_ranges(b.value().col(0), frames);
      return ad::segment_max(z, ranges);
    }
    case RepMode::kMid: {
      const auto ranges = segment_ranges(b.value().col(0), frames);
      std::vector<Index> mids;
      for (const auto& [start, end] : ranges) mids.push_back((start + end - 1) / 2);
      return ad::gather_rows(z, mids);
    }
    case RepMode::kWavg: {
      const auto ranges = segment_ranges(b.value().col(0), frames);
      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask =
          Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(frames, frames, false);
      for (const auto& [start, end] : ranges) mask.block(start, start, end - start, end - start).setConstant(true);
      Var attention = ad::masked_row_softmax(ad::matmul(z, ad::transpose(z)), mask);
      Var attended = ad::matmul(attention, z);
      return ad::matmul(ad::transpose(segment_weights(b, frames)), attended);
    }
  }
  throw std::logic_error("pool_segments: bad mode");
}

SegmentEncoder::SegmentEncoder(const SegmentEncoderConfig& config, Rng& rng)
    : first_(config.input_dim, config.hidden, rng), second_(config.hidden, config.output_dim, rng) {}

Var SegmentEncoder::forward(const Var& pooled) const { return second_.forward(ad::relu(first_.forward(pooled))); }

void SegmentEncoder::visit(const std::string& prefix, const nn::TensorVisitor& fn) {
  first_.visit(prefix + ".layer0", fn);
  second_.visit(prefix + ".layer1", fn);
}

SegmentContext::SegmentContext(const SegmentEncoderConfig& config, AggregatorMode mode, Rng& rng) : mode_(mode) {
  if (mode == AggregatorMode::kRnn) {
    gru_ = nn::Gru(config.output_dim, config.context_hidden, rng);
    output_ = nn::Linear(config.context_hidden, config.output_dim, rng);
  } else {
    output_ = nn::Linear(config.output_dim, config.output_dim, rng);
  }
}

Var SegmentContext::forward(const Var& s) const {
  if (mode_ == AggregatorMode::kRnn) return output_.forward(gru_.forward(s));
  return output_.forward(s);
}

void SegmentContext::visit(const std::string& prefix, const nn::TensorVisitor& fn) {
  if (mode_ == AggregatorMode::kRnn) gru_.visit(prefix + ".gru", fn);
  output_.visit(prefix + ".output", fn);
}

Var nsc_loss(const Var& c, const Var& s, const Var& pool,
             const Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>& negatives) {
  const Index steps = s.rows() - 1;
  if (c.rows() != s.rows() || negatives.rows() != steps)
    throw std::invalid_argument("nsc_loss: shape mismatch");
  Var refs = ad::slice_rows(c, 0, steps);
  Var targets = ad::slice_rows(s, 1, steps);
  std::vector<Var> logits{ad::row_cosine(refs, targets)};
  for (Index j = 0; j < negatives.cols(); ++j) {
    std::vector<Index> idx(static_cast<std::size_t>(steps));
    for (Index t = 0; t < steps; ++t) idx[static_cast<std::size_t>(t)] = negatives(t, j);
    logits.push_back(ad::row_cosine(refs, ad::gather_rows(pool, idx)));
  }
  return ad::info_nce(ad::hcat(logits));
}

NscResult nsc_loss(std::span<const Var> contexts, std::span<const Var> segments,
                   const NegativeSamplingPolicy& policy, Rng& rng) {
  if (contexts.size() != segments.size()) throw std::invalid_argument("nsc_loss: batch mismatch");
  NscResult result;
  std::vector<std::size_t> usable;
  for (std::size_t u = 0; u < segments.size(); ++u) {
    if (segments[u].rows() >= 3)
      usable.push_back(u);
    else
      ++result.skipped;
  }
  result.used = static_cast<int>(usable.size());
  if (usable.empty()) return result;

  const bool mixed = policy.mode == NegativeMode::kMixedUtterance;
  Var pool;
  std::vector<Index> offsets;
  if (mixed) {
    std::vector<Var> parts;
    Index off = 0;
    for (auto u : usable) {
      parts.push_back(segments[u]);
      offsets.push_back(off);
      off += segments[u].rows();
    }
    pool = parts.size() == 1 ? parts.front() : ad::vcat(parts);
  }
  std::vector<Var> losses;
  for (std::size_t k = 0; k < usable.size(); ++k) {
    const Var& s = segments[usable[k]];
    const Index steps = s.rows() - 1;
    const Index pool_size = mixed ? pool.rows() : s.rows();
    const Index offset = mixed ? offsets[k] : 0;
    Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> negatives(steps, policy.k);
    for (Index t = 0; t < steps; ++t) {
      auto draws = sample_negatives(pool_size, offset + t + 1, policy.k, rng);
      for (int j = 0; j < policy.k; ++j) negatives(t, j) = draws[static_cast<std::size_t>(j)];
    }
    losses.push_back(nsc_loss(contexts[usable[k]], s, mixed ? pool : s, negatives));
  }
  Var total = losses.front();
  for (std::size_t i = 1; i < losses.size(); ++i) total = total + losses[i];
  result.loss = ad::scale(total, 1.0 / static_cast<Real>(losses.size()));
  return result;
}

}  // namespace scpc

// src/multistep.cpp

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

#include "scpc/multistep.hpp"

#include <cmath>

#include "scpc/error.hpp"

namespace scpc {

FrameContextNetwork::FrameContextNetwork(Index frame_dim, const ContextualFrameConfig& config, Rng& rng) {
  if (config.steps < 1) throw Error(ErrorCode::kInvalidConfig, "frame context needs at least one step");
  gru_ = nn::Gru(frame_dim, config.context_hidden, rng);
  const Real bound = 1.0 / std::sqrt(static_cast<Real>(config.context_hidden));
  for (int m = 0; m < config.steps; ++m)
    maps_.emplace_back(nn::uniform_matrix(config.context_hidden, frame_dim, bound, rng), true);
}

Var FrameContextNetwork::forward(const Var& z) const { return gru_.forward(z); }

void FrameContextNetwork::visit(const std::string& prefix, const nn::TensorVisitor& fn) {
  gru_.visit(prefix + ".gru", fn);
  for (std::size_t m = 0; m < maps_.size(); ++m) fn(prefix + ".w" + std::to_string(m + 1), maps_[m]);
}

Var multistep_nfc_loss(const Var& z, const Var& c, std::span<const Var> maps, const Var& pool,
                       std::span<const IndexMatrix> negatives) {
  const auto steps = static_cast<Index>(maps.size());
  if (steps < 1 || static_cast<Index>(negatives.size()) != steps)
    throw std::invalid_argument("multistep_nfc_loss: one map and negative table per step");
  if (z.rows() <= steps)
    throw Error(ErrorCode::kDegenerateUtterance, "L = " + std::to_string(z.rows()) + " must exceed the step count");
  const Var ones = ad::constant(Matrix::Ones(z.cols(), 1));
  std::vector<Var> per_step;
  for (Index m = 1; m <= steps; ++m) {
    const Index n = z.rows() - m;
    const IndexMatrix& neg = negatives[static_cast<std::size_t>(m - 1)];
    if (neg.rows() != n) throw std::invalid_argument("multistep_nfc_loss: negative table has wrong length");
    Var projected = ad::matmul(ad::slice_rows(c, 0, n), maps[static_cast<std::size_t>(m - 1)]);
    auto logit = [&](const Var& cand) { return ad::matmul(ad::hadamard(projected, cand), ones); };
    std::vector<Var> logits{logit(ad::slice_rows(z, m, n))};
    for (Index j = 0; j < neg.cols(); ++j) {
      std::vector<Index> idx(static_cast<std::size_t>(n));
      for (Index t = 0; t < n; ++t) idx[static_cast<std::size_t>(t)] = neg(t, j);
      logits.push_back(logit(ad::gather_rows(pool, idx)));
    }
    per_step.push_back(ad::info_nce(ad::hcat(logits)));
  }
  Var total = per_step.front();
  for (std::size_t i = 1; i < per_step.size(); ++i) total = total + per_step[i];
  return ad::scale(total, 1.0 / static_cast<Real>(steps));
}

Var multistep_nfc_loss(std::span<const Var> batch, const FrameContextNetwork& context,
                       const NegativeSamplingPolicy& policy, Rng& rng) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyCorpus, "multistep_nfc_loss: empty batch");
  const int steps = context.steps();
  const bool mixed = policy.mode == NegativeMode::kMixedUtterance;
  Var pool;
  std::vector<Index> offsets;
  if (mixed) {
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
    if (z.rows() <= steps)
      throw Error(ErrorCode::kDegenerateUtterance,
                  "L = " + std::to_string(z.rows()) + " must exceed " + std::to_string(steps) + " steps");
    const Index pool_size = mixed ? pool.rows() : z.rows();
    const Index offset = mixed ? offsets[u] : 0;
    std::vector<IndexMatrix> negatives;
    for (int m = 1; m <= steps; ++m) {
      const Index n = z.rows() - m;
      IndexMatrix neg(n, policy.k);
      for (Index t = 0; t < n; ++t) {
        auto draws = sample_negatives(pool_size, offset + t + m, policy.k, rng);
        for (int j = 0; j < policy.k; ++j) neg(t, j) = draws[static_cast<std::size_t>(j)];
      }
      negatives.push_back(std::move(neg));
    }
    losses.push_back(multistep_nfc_loss(z, context.forward(z), context.maps(), mixed ? pool : z, negatives));
  }
  Var total = losses.front();
  for (std::size_t i = 1; i < losses.size(); ++i) total = total + losses[i];
  return ad::scale(total, 1.0 / static_cast<Real>(losses.size()));
}

}  // namespace scpc

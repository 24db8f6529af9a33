// scpc/multistep.hpp

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

// Frame-level context network and the multi-step bilinear contrastive loss.

#ifndef SCPC_MULTISTEP_HPP_
#define SCPC_MULTISTEP_HPP_

#include <span>
#include <string>
#include <vector>

#include "scpc/frame_encoder.hpp"

namespace scpc {

using IndexMatrix = Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>;

struct ContextualFrameConfig {
  int steps = 12;
  Index context_hidden = 64;
};

/// GRU over frames plus one bilinear map per prediction step.
class FrameContextNetwork {
 public:
  FrameContextNetwork() = default;
  FrameContextNetwork(Index frame_dim, const ContextualFrameConfig& config, Rng& rng);

  Var forward(const Var& z) const;  // L x hidden
  void visit(const std::string& prefix, const nn::TensorVisitor& fn);

  int steps() const { return static_cast<int>(maps_.size()); }
  std::span<const Var> maps() const { return maps_; }

 private:
  nn::Gru gru_;
  std::vector<Var> maps_;  // hidden x p each
};

/// Mean over m = 1..M of the contrastive term with logits c_t^T W_m z_{t+m};
/// negatives[m-1](t, j) indexes the rows of pool used as distractors.
Var multistep_nfc_loss(const Var& z, const Var& c, std::span<const Var> maps, const Var& pool,
                       std::span<const IndexMatrix> negatives);

/// Batch version drawing K distractors per target; averages over utterances.
/// Throws DegenerateUtterance when some L <= steps.
Var multistep_nfc_loss(std::span<const Var> batch, const FrameContextNetwork& context,
                       const NegativeSamplingPolicy& policy, Rng& rng);

}  // namespace scpc

#endif  // SCPC_MULTISTEP_HPP_

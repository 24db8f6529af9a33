// scpc/nn.hpp

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

#ifndef SCPC_NN_HPP_
#define SCPC_NN_HPP_

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "scpc/autograd.hpp"

namespace scpc::nn {

using ad::Index;
using ad::Matrix;
using ad::Real;
using ad::Var;
using Rng = std::mt19937_64;

/// Called once per tensor of a module. Trainable tensors have
/// var.requires_grad(); the rest are buffers (running statistics).
using TensorVisitor = std::function<void(const std::string& name, Var& var)>;

Matrix uniform_matrix(Index rows, Index cols, Real bound, Rng& rng);

/// Fully connected layer, y = x W + b with W stored in_dim x out_dim.
class Linear {
 public:
  Linear() = default;
  Linear(Index in_dim, Index out_dim, Rng& rng);

  Var forward(const Var& x) const;
  void visit(const std::string& prefix, const TensorVisitor& fn);

  Index in_dim() const { return weight_.rows(); }
  Index out_dim() const { return weight_.cols(); }

 private:
  Var weight_;
  Var bias_;
};

class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(Index in_channels, Index out_channels, Index kernel, Index stride, Rng& rng);

  Var forward(const Var& x) const;
  void visit(const std::string& prefix, const TensorVisitor& fn);

  Index kernel() const { return kernel_; }
  Index stride() const { return stride_; }
  /// Output length of a valid convolution over `length` inputs (0 if too short).
  Index output_length(Index length) const;

 private:
  Var weight_;
  Var bias_;
  Index kernel_ = 1;
  Index stride_ = 1;
};

/// Per-channel normalisation over rows. Training mode uses the statistics of
/// the rows it is given and updates running estimates; evaluation mode uses
/// the running estimates.
class BatchNorm {
 public:
  BatchNorm() = default;
  explicit BatchNorm(Index channels, Real momentum = 0.1, Real eps = 1e-5);

  Var forward(const Var& x, bool training);
  void visit(const std::string& prefix, const TensorVisitor& fn);

 private:
  Var gamma_;
  Var beta_;
  Var running_mean_;
  Var running_var_;
  Real momentum_ = 0.1;
  Real eps_ = 1e-5;
};

/// Single-layer GRU with zero initial state. forward() maps rows x_1..x_n
/// (n x in) to hidden states h_1..h_n (n x hidden), strictly causal.
class Gru {
 public:
  Gru() = default;
  Gru(Index in_dim, Index hidden, Rng& rng);

  Var forward(const Var& x) const;
  void visit(const std::string& prefix, const TensorVisitor& fn);
  Index hidden() const { return hidden_; }

 private:
  Linear input_;
  Linear recurrent_;
  Index hidden_ = 0;
};

/// Adam with bias correction. Parameters are held by reference (shared nodes).
class Adam {
 public:
  struct Options {
    Real lr = 1e-4;
    Real beta1 = 0.9;
    Real beta2 = 0.999;
    Real eps = 1e-8;
  };

  Adam(std::vector<Var> params, Options options);

  void zero_grad();
  /// Applies one update using the accumulated gradients.
  void step();
  /// Global L2 norm of the current gradients.
  Real grad_norm() const;
  /// Rescales gradients so their global norm is at most max_norm.
  void clip_grad_norm(Real max_norm);

  const Options& options() const { return options_; }
  long steps() const { return steps_; }

 private:
  std::vector<Var> params_;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
  Options options_;
  long steps_ = 0;
};

}  // namespace scpc::nn

#endif  // SCPC_NN_HPP_

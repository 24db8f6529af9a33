// scpc/autograd.hpp

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

// Tape-free reverse-mode differentiation over dense Eigen matrices.
//
// Every Var owns a node holding its value; nodes created from operands that
// require gradients also record their parents and a backward closure. The
// graph lives exactly as long as the root Var is referenced. Parameters are
// leaf Vars with requires_grad set; their gradients accumulate across
// backward() calls until zero_grad().
//
// Matrices are row-major: rows index time (frames, segments), columns index
// feature channels. This lets strided 1-D convolution view its input as an
// im2col matrix without copying.

#ifndef SCPC_AUTOGRAD_HPP_
#define SCPC_AUTOGRAD_HPP_

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace scpc::ad {

using Real = double;
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  /// Adds g into grad, allocating zeros on first use.
  void accumulate(const Eigen::Ref<const Matrix>& g);
  /// Gradient buffer, zero-initialised if nothing was accumulated yet.
  Matrix& grad_buffer();
};

class Var {
 public:
  Var() = default;
  explicit Var(Matrix value, bool requires_grad = false);

  static Var parameter(Matrix value) { return Var(std::move(value), true); }
  static Var scalar(Real v, bool requires_grad = false);

  const Matrix& value() const { return node_->value; }
  /// Mutable access, intended for parameter updates and loading.
  Matrix& mutable_value() { return node_->value; }
  const Matrix& grad() const;
  bool has_grad() const { return node_ && node_->grad.size() > 0; }
  void zero_grad();

  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  Real item() const { return node_->value(0, 0); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const { return static_cast<bool>(node_); }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  friend Var make_result(Matrix, std::initializer_list<Var>, std::function<void(Node&)>);
  friend Var make_result(Matrix, std::span<const Var>, std::function<void(Node&)>);
  std::shared_ptr<Node> node_;
};

/// Global switch for graph construction. Thread-local.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Creates an op result. The backward closure receives the result node; its
/// parents are node.parents in the order given here. Parents that do not
/// require gradients must be skipped by the closure (check requires_grad).
Var make_result(Matrix value, std::initializer_list<Var> parents,
                std::function<void(Node&)> backward_fn);
Var make_result(Matrix value, std::span<const Var> parents,
                std::function<void(Node&)> backward_fn);

/// Seeds d(root)/d(root) = 1 (root must be 1x1 unless seed is given) and
/// propagates through the graph in reverse topological order.
void backward(const Var& root);
void backward(const Var& root, const Matrix& seed);

// ---- elementwise and linear algebra -------------------------------------

Var constant(Matrix value);
Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator-(const Var& a);
Var hadamard(const Var& a, const Var& b);
Var scale(const Var& a, Real s);
Var add_scalar(const Var& a, Real s);
/// a (n x m) plus a broadcast row r (1 x m).
Var add_row(const Var& a, const Var& r);
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);

Var relu(const Var& a);
Var leaky_relu(const Var& a, Real slope);
Var tanh(const Var& a);
Var sigmoid(const Var& a);

Var sum(const Var& a);
Var mean(const Var& a);
/// Column means, 1 x cols.
Var mean_rows(const Var& a);

// ---- shape --------------------------------------------------------------

Var vcat(std::span<const Var> parts);
Var hcat(std::span<const Var> parts);
Var slice_rows(const Var& a, Index start, Index count);
Var slice_cols(const Var& a, Index start, Index count);
/// Rows of a in the given order; repeats allowed, gradients scatter-add.
Var gather_rows(const Var& a, std::span<const Index> indices);

// ---- model-specific -----------------------------------------------------

/// Cosine similarity between row i of a and row i of b; n x 1.
Var row_cosine(const Var& a, const Var& b);

/// Mean over rows of -log softmax(logits.row(i))[0]; column 0 holds the
/// positive candidate. Returns 1 x 1.
Var info_nce(const Var& logits);

/// Valid (unpadded) strided 1-D convolution.
///   x: T x c_in, weight: (kernel * c_in) x c_out laid out tap-major,
///   bias: 1 x c_out. Output: ((T - kernel) / stride + 1) x c_out.
Var conv1d(const Var& x, const Var& weight, const Var& bias, Index kernel, Index stride);

/// Row-wise softmax restricted to entries where mask is true; masked entries
/// get probability zero. Every row needs at least one unmasked entry.
Var masked_row_softmax(const Var& g, const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& mask);

/// Elementwise maximum over each contiguous row range [start, end); gradient
/// flows to the arg-max row of each column only.
Var segment_max(const Var& z, std::span<const std::pair<Index, Index>> ranges);

}  // namespace scpc::ad

#endif  // SCPC_AUTOGRAD_HPP_

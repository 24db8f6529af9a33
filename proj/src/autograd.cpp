// src/autograd.cpp

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

#include "scpc/autograd.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace scpc::ad {

namespace {
thread_local bool g_grad_enabled = true;

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}
}  // namespace

void Node::accumulate(const Eigen::Ref<const Matrix>& g) {
  if (grad.size() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

Matrix& Node::grad_buffer() {
  if (grad.size() == 0) grad = Matrix::Zero(value.rows(), value.cols());
  return grad;
}

Var::Var(Matrix value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Var Var::scalar(Real v, bool requires_grad) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return Var(std::move(m), requires_grad);
}

const Matrix& Var::grad() const {
  return node_->grad_buffer();
}

void Var::zero_grad() {
  if (node_) node_->grad.resize(0, 0);
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Var make_result(Matrix value, std::span<const Var> parents,
                std::function<void(Node&)> backward_fn) {
  Var out(std::move(value), false);
  if (!g_grad_enabled) return out;
  bool any = false;
  for (const auto& p : parents) any = any || p.requires_grad();
  if (!any) return out;
  out.node_->requires_grad = true;
  out.node_->parents.reserve(parents.size());
  for (const auto& p : parents) out.node_->parents.push_back(p.node());
  out.node_->backward_fn = std::move(backward_fn);
  return out;
}

Var make_result(Matrix value, std::initializer_list<Var> parents,
                std::function<void(Node&)> backward_fn) {
  return make_result(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                     std::move(backward_fn));
}

void backward(const Var& root) {
  if (root.rows() != 1 || root.cols() != 1)
    throw std::invalid_argument("backward: root must be a scalar");
  backward(root, Matrix::Ones(1, 1));
}

void backward(const Var& root, const Matrix& seed) {
  if (!root.requires_grad()) return;
  // Iterative post-order DFS for a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && !visited.count(parent)) {
        visited.insert(parent);
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root.node()->accumulate(seed);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && node->grad.size() > 0) node->backward_fn(*node);
  }
}

Var constant(Matrix value) { return Var(std::move(value), false); }

Var operator+(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  return make_result(a.value() + b.value(), {a, b}, [](Node& n) {
    for (auto& p : n.parents)
      if (p->requires_grad) p->accumulate(n.grad);
  });
}

Var operator-(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  return make_result(a.value() - b.value(), {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) n.parents[0]->accumulate(n.grad);
    if (n.parents[1]->requires_grad) n.parents[1]->accumulate(-n.grad);
  });
}

Var operator-(const Var& a) { return scale(a, -1.0); }

Var hadamard(const Var& a, const Var& b) {
  check_same_shape(a, b, "hadamard");
  return make_result(a.value().cwiseProduct(b.value()), {a, b}, [](Node& n) {
    Node* pa = n.parents[0].get();
    Node* pb = n.parents[1].get();
    if (pa->requires_grad) pa->accumulate(n.grad.cwiseProduct(pb->value));
    if (pb->requires_grad) pb->accumulate(n.grad.cwiseProduct(pa->value));
  });
}

Var scale(const Var& a, Real s) {
  return make_result(a.value() * s, {a}, [s](Node& n) { n.parents[0]->accumulate(n.grad * s); });
}

Var add_scalar(const Var& a, Real s) {
  return make_result(a.value().array() + s, {a},
                     [](Node& n) { n.parents[0]->accumulate(n.grad); });
}

Var add_row(const Var& a, const Var& r) {
  if (r.rows() != 1 || r.cols() != a.cols()) throw std::invalid_argument("add_row: shape mismatch");
  Matrix out = a.value().rowwise() + r.value().row(0);
  return make_result(std::move(out), {a, r}, [](Node& n) {
    if (n.parents[0]->requires_grad) n.parents[0]->accumulate(n.grad);
    if (n.parents[1]->requires_grad) n.parents[1]->accumulate(n.grad.colwise().sum());
  });
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  Matrix out = a.value() * b.value();
  return make_result(std::move(out), {a, b}, [](Node& n) {
    Node* pa = n.parents[0].get();
    Node* pb = n.parents[1].get();
    if (pa->requires_grad) pa->accumulate(n.grad * pb->value.transpose());
    if (pb->requires_grad) pb->accumulate(pa->value.transpose() * n.grad);
  });
}

Var transpose(const Var& a) {
  Matrix out = a.value().transpose();
  return make_result(std::move(out), {a},
                     [](Node& n) { n.parents[0]->accumulate(n.grad.transpose()); });
}

Var relu(const Var& a) { return leaky_relu(a, 0.0); }

Var leaky_relu(const Var& a, Real slope) {
  Matrix out = a.value().unaryExpr([slope](Real x) { return x > 0 ? x : slope * x; });
  return make_result(std::move(out), {a}, [slope](Node& n) {
    const Matrix& x = n.parents[0]->value;
    Matrix g = n.grad.binaryExpr(x, [slope](Real g, Real v) { return v > 0 ? g : slope * g; });
    n.parents[0]->accumulate(g);
  });
}

Var tanh(const Var& a) {
  Matrix out = a.value().array().tanh().matrix();
  return make_result(std::move(out), {a}, [](Node& n) {
    Matrix g = (n.grad.array() * (1.0 - n.value.array().square())).matrix();
    n.parents[0]->accumulate(g);
  });
}

Var sigmoid(const Var& a) {
  Matrix out = a.value().unaryExpr([](Real x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  });
  return make_result(std::move(out), {a}, [](Node& n) {
    Matrix g = (n.grad.array() * n.value.array() * (1.0 - n.value.array())).matrix();
    n.parents[0]->accumulate(g);
  });
}

Var sum(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return make_result(std::move(out), {a}, [](Node& n) {
    const Matrix& x = n.parents[0]->value;
    n.parents[0]->accumulate(Matrix::Constant(x.rows(), x.cols(), n.grad(0, 0)));
  });
}

Var mean(const Var& a) {
  const Real count = static_cast<Real>(a.value().size());
  return scale(sum(a), 1.0 / count);
}

Var mean_rows(const Var& a) {
  const Index rows = a.rows();
  Matrix out = a.value().colwise().mean();
  return make_result(std::move(out), {a}, [rows](Node& n) {
    Matrix g = n.grad.replicate(rows, 1) / static_cast<Real>(rows);
    n.parents[0]->accumulate(g);
  });
}

Var vcat(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("vcat: no inputs");
  Index rows = 0;
  const Index cols = parts.front().cols();
  for (const auto& p : parts) {
    if (p.cols() != cols) throw std::invalid_argument("vcat: column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return make_result(std::move(out), parts, [](Node& n) {
    Index r = 0;
    for (auto& p : n.parents) {
      const Index k = p->value.rows();
      if (p->requires_grad) p->accumulate(n.grad.middleRows(r, k));
      r += k;
    }
  });
}

Var hcat(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("hcat: no inputs");
  Index cols = 0;
  const Index rows = parts.front().rows();
  for (const auto& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("hcat: row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Index c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return make_result(std::move(out), parts, [](Node& n) {
    Index c = 0;
    for (auto& p : n.parents) {
      const Index k = p->value.cols();
      if (p->requires_grad) p->accumulate(n.grad.middleCols(c, k));
      c += k;
    }
  });
}

Var slice_rows(const Var& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.rows())
    throw std::out_of_range("slice_rows: range outside matrix");
  Matrix out = a.value().middleRows(start, count);
  return make_result(std::move(out), {a}, [start, count](Node& n) {
    n.parents[0]->grad_buffer().middleRows(start, count) += n.grad;
  });
}

Var slice_cols(const Var& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols())
    throw std::out_of_range("slice_cols: range outside matrix");
  Matrix out = a.value().middleCols(start, count);
  return make_result(std::move(out), {a}, [start, count](Node& n) {
    n.parents[0]->grad_buffer().middleCols(start, count) += n.grad;
  });
}

Var gather_rows(const Var& a, std::span<const Index> indices) {
  Matrix out(static_cast<Index>(indices.size()), a.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= a.rows())
      throw std::out_of_range("gather_rows: index outside matrix");
    out.row(static_cast<Index>(i)) = a.value().row(indices[i]);
  }
  std::vector<Index> idx(indices.begin(), indices.end());
  return make_result(std::move(out), {a}, [idx = std::move(idx)](Node& n) {
    Matrix& g = n.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i) g.row(idx[i]) += n.grad.row(static_cast<Index>(i));
  });
}

Var row_cosine(const Var& a, const Var& b) {
  check_same_shape(a, b, "row_cosine");
  constexpr Real kEps = 1e-8;
  const Index n_rows = a.rows();
  Eigen::VectorXd na(n_rows), nb(n_rows), dots(n_rows);
  Matrix out(n_rows, 1);
  for (Index i = 0; i < n_rows; ++i) {
    na(i) = std::max(a.value().row(i).norm(), kEps);
    nb(i) = std::max(b.value().row(i).norm(), kEps);
    dots(i) = a.value().row(i).dot(b.value().row(i));
    out(i, 0) = dots(i) / (na(i) * nb(i));
  }
  return make_result(std::move(out), {a, b}, [na, nb](Node& n) {
    Node* pa = n.parents[0].get();
    Node* pb = n.parents[1].get();
    const Index rows = n.value.rows();
    // d cos / d a = b / (|a||b|) - cos * a / |a|^2
    if (pa->requires_grad) {
      Matrix& g = pa->grad_buffer();
      for (Index i = 0; i < rows; ++i) {
        const Real c = n.value(i, 0);
        g.row(i) += n.grad(i, 0) *
                    (pb->value.row(i) / (na(i) * nb(i)) - c * pa->value.row(i) / (na(i) * na(i)));
      }
    }
    if (pb->requires_grad) {
      Matrix& g = pb->grad_buffer();
      for (Index i = 0; i < rows; ++i) {
        const Real c = n.value(i, 0);
        g.row(i) += n.grad(i, 0) *
                    (pa->value.row(i) / (na(i) * nb(i)) - c * pb->value.row(i) / (nb(i) * nb(i)));
      }
    }
  });
}

Var info_nce(const Var& logits) {
  const Index rows = logits.rows();
  if (rows == 0) throw std::invalid_argument("info_nce: no rows");
  Matrix probs(rows, logits.cols());
  Real total = 0;
  for (Index i = 0; i < rows; ++i) {
    const auto row = logits.value().row(i);
    const Real mx = row.maxCoeff();
    auto e = (row.array() - mx).exp();
    const Real z = e.sum();
    probs.row(i) = e / z;
    total += -(row(0) - mx - std::log(z));
  }
  Matrix out(1, 1);
  out(0, 0) = total / static_cast<Real>(rows);
  return make_result(std::move(out), {logits}, [probs = std::move(probs)](Node& n) {
    Matrix g = probs;
    g.col(0).array() -= 1.0;
    g *= n.grad(0, 0) / static_cast<Real>(g.rows());
    n.parents[0]->accumulate(g);
  });
}

Var conv1d(const Var& x, const Var& weight, const Var& bias, Index kernel, Index stride) {
  const Index t_in = x.rows();
  const Index c_in = x.cols();
  const Index c_out = weight.cols();
  if (weight.rows() != kernel * c_in) throw std::invalid_argument("conv1d: weight shape mismatch");
  if (bias.rows() != 1 || bias.cols() != c_out) throw std::invalid_argument("conv1d: bias shape mismatch");
  if (t_in < kernel) throw std::invalid_argument("conv1d: input shorter than kernel");
  const Index t_out = (t_in - kernel) / stride + 1;
  // Row-major storage makes row t of the im2col matrix the contiguous span
  // x[t * stride .. t * stride + kernel) of the input.
  using Strided = Eigen::Map<const Matrix, 0, Eigen::OuterStride<>>;
  Strided cols(x.value().data(), t_out, kernel * c_in, Eigen::OuterStride<>(stride * c_in));
  Matrix out = cols * weight.value();
  out.rowwise() += bias.value().row(0);
  return make_result(std::move(out), {x, weight, bias}, [kernel, stride, t_out](Node& n) {
    Node* px = n.parents[0].get();
    Node* pw = n.parents[1].get();
    Node* pb = n.parents[2].get();
    const Index c_in = px->value.cols();
    Strided cols(px->value.data(), t_out, kernel * c_in, Eigen::OuterStride<>(stride * c_in));
    if (pw->requires_grad) pw->accumulate(cols.transpose() * n.grad);
    if (pb->requires_grad) pb->accumulate(n.grad.colwise().sum());
    if (px->requires_grad) {
      Matrix dcols = n.grad * pw->value.transpose();
      Matrix& g = px->grad_buffer();
      const Index width = kernel * c_in;
      for (Index t = 0; t < t_out; ++t) {
        Eigen::Map<Eigen::Matrix<Real, 1, Eigen::Dynamic>> dst(g.data() + t * stride * c_in, width);
        dst += dcols.row(t);
      }
    }
  });
}

Var masked_row_softmax(const Var& g, const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& mask) {
  if (mask.rows() != g.rows() || mask.cols() != g.cols())
    throw std::invalid_argument("masked_row_softmax: mask shape mismatch");
  Matrix out = Matrix::Zero(g.rows(), g.cols());
  for (Index i = 0; i < g.rows(); ++i) {
    Real mx = -std::numeric_limits<Real>::infinity();
    for (Index j = 0; j < g.cols(); ++j)
      if (mask(i, j)) mx = std::max(mx, g.value()(i, j));
    if (!std::isfinite(mx)) throw std::invalid_argument("masked_row_softmax: fully masked row");
    Real z = 0;
    for (Index j = 0; j < g.cols(); ++j)
      if (mask(i, j)) z += (out(i, j) = std::exp(g.value()(i, j) - mx));
    out.row(i) /= z;
  }
  return make_result(std::move(out), {g}, [](Node& n) {
    // d x_j = y_j (g_j - sum_k y_k g_k); masked y_j are zero.
    Matrix dx(n.value.rows(), n.value.cols());
    for (Index i = 0; i < n.value.rows(); ++i) {
      const Real inner = n.value.row(i).dot(n.grad.row(i));
      dx.row(i) = n.value.row(i).cwiseProduct((n.grad.row(i).array() - inner).matrix());
    }
    n.parents[0]->accumulate(dx);
  });
}

Var segment_max(const Var& z, std::span<const std::pair<Index, Index>> ranges) {
  const Index m = static_cast<Index>(ranges.size());
  Matrix out(m, z.cols());
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> arg(m, z.cols());
  for (Index s = 0; s < m; ++s) {
    const auto [start, end] = ranges[static_cast<std::size_t>(s)];
    if (start < 0 || end > z.rows() || start >= end)
      throw std::out_of_range("segment_max: bad segment range");
    for (Index c = 0; c < z.cols(); ++c) {
      Index best = start;
      for (Index r = start + 1; r < end; ++r)
        if (z.value()(r, c) > z.value()(best, c)) best = r;
      arg(s, c) = best;
      out(s, c) = z.value()(best, c);
    }
  }
  return make_result(std::move(out), {z}, [arg](Node& n) {
    Matrix& g = n.parents[0]->grad_buffer();
    for (Index s = 0; s < arg.rows(); ++s)
      for (Index c = 0; c < arg.cols(); ++c) g(arg(s, c), c) += n.grad(s, c);
  });
}

}  // namespace scpc::ad

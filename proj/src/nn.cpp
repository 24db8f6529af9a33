// src/nn.cpp

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

#include "scpc/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace scpc::nn {

Matrix uniform_matrix(Index rows, Index cols, Real bound, Rng& rng) {
  std::uniform_real_distribution<Real> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Linear::Linear(Index in_dim, Index out_dim, Rng& rng) {
  const Real bound = 1.0 / std::sqrt(static_cast<Real>(in_dim));
  weight_ = Var::parameter(uniform_matrix(in_dim, out_dim, bound, rng));
  bias_ = Var::parameter(uniform_matrix(1, out_dim, bound, rng));
}

Var Linear::forward(const Var& x) const { return ad::add_row(ad::matmul(x, weight_), bias_); }

void Linear::visit(const std::string& prefix, const TensorVisitor& fn) {
  fn(prefix + ".weight", weight_);
  fn(prefix + ".bias", bias_);
}

Conv1d::Conv1d(Index in_channels, Index out_channels, Index kernel, Index stride, Rng& rng)
    : kernel_(kernel), stride_(stride) {
  const Real bound = 1.0 / std::sqrt(static_cast<Real>(in_channels * kernel));
  weight_ = Var::parameter(uniform_matrix(kernel * in_channels, out_channels, bound, rng));
  bias_ = Var::parameter(uniform_matrix(1, out_channels, bound, rng));
}

Var Conv1d::forward(const Var& x) const { return ad::conv1d(x, weight_, bias_, kernel_, stride_); }

void Conv1d::visit(const std::string& prefix, const TensorVisitor& fn) {
  fn(prefix + ".weight", weight_);
  fn(prefix + ".bias", bias_);
}

Index Conv1d::output_length(Index length) const {
  if (length < kernel_) return 0;
  return (length - kernel_) / stride_ + 1;
}

BatchNorm::BatchNorm(Index channels, Real momentum, Real eps)
    : gamma_(Var::parameter(Matrix::Ones(1, channels))),
      beta_(Var::parameter(Matrix::Zero(1, channels))),
      running_mean_(Matrix::Zero(1, channels)),
      running_var_(Matrix::Ones(1, channels)),
      momentum_(momentum),
      eps_(eps) {}

Var BatchNorm::forward(const Var& x, bool training) {
  const Index rows = x.rows();
  Matrix mu;
  Matrix var;
  if (training) {
    if (rows < 2) throw std::invalid_argument("BatchNorm: need at least two rows in training mode");
    mu = x.value().colwise().mean();
    var = (x.value().rowwise() - mu.row(0)).array().square().colwise().mean().matrix();
    const Real unbias = static_cast<Real>(rows) / static_cast<Real>(rows - 1);
    running_mean_.mutable_value() = (1 - momentum_) * running_mean_.value() + momentum_ * mu;
    running_var_.mutable_value() = (1 - momentum_) * running_var_.value() + momentum_ * var * unbias;
  } else {
    mu = running_mean_.value();
    var = running_var_.value();
  }
  Eigen::Array<Real, 1, Eigen::Dynamic> inv_std = (var.array() + eps_).rsqrt();
  Matrix xhat = ((x.value().rowwise() - mu.row(0)).array().rowwise() * inv_std).matrix();
  Matrix out = ((xhat.array().rowwise() * gamma_.value().row(0).array()).rowwise() +
                beta_.value().row(0).array())
                   .matrix();
  return ad::make_result(
      std::move(out), {x, gamma_, beta_},
      [xhat = std::move(xhat), inv_std, training](ad::Node& n) {
        ad::Node* px = n.parents[0].get();
        ad::Node* pg = n.parents[1].get();
        ad::Node* pb = n.parents[2].get();
        if (pg->requires_grad) pg->accumulate(n.grad.cwiseProduct(xhat).colwise().sum());
        if (pb->requires_grad) pb->accumulate(n.grad.colwise().sum());
        if (!px->requires_grad) return;
        Eigen::Array<Real, 1, Eigen::Dynamic> gamma = pg->value.row(0).array();
        Matrix dxhat = (n.grad.array().rowwise() * gamma).matrix();
        if (!training) {
          px->accumulate((dxhat.array().rowwise() * inv_std).matrix());
          return;
        }
        const Real count = static_cast<Real>(n.grad.rows());
        Eigen::Array<Real, 1, Eigen::Dynamic> mean_d = dxhat.colwise().sum().array() / count;
        Eigen::Array<Real, 1, Eigen::Dynamic> mean_dx =
            dxhat.cwiseProduct(xhat).colwise().sum().array() / count;
        Matrix dx = (((dxhat.array().rowwise() - mean_d) -
                      (xhat.array().rowwise() * mean_dx))
                         .rowwise() *
                     inv_std)
                        .matrix();
        px->accumulate(dx);
      });
}

void BatchNorm::visit(const std::string& prefix, const TensorVisitor& fn) {
  fn(prefix + ".gamma", gamma_);
  fn(prefix + ".beta", beta_);
  fn(prefix + ".running_mean", running_mean_);
  fn(prefix + ".running_var", running_var_);
}

Gru::Gru(Index in_dim, Index hidden, Rng& rng)
    : input_(in_dim, 3 * hidden, rng), recurrent_(hidden, 3 * hidden, rng), hidden_(hidden) {}

Var Gru::forward(const Var& x) const {
  const Index n = x.rows();
  const Index h = hidden_;
  Var projected = input_.forward(x);  // n x 3h, gate order r | z | n
  Var state(Matrix::Zero(1, h));
  std::vector<Var> states;
  states.reserve(static_cast<std::size_t>(n));
  for (Index t = 0; t < n; ++t) {
    Var xt = ad::slice_rows(projected, t, 1);
    Var ht = recurrent_.forward(state);
    Var r = ad::sigmoid(ad::slice_cols(xt, 0, h) + ad::slice_cols(ht, 0, h));
    Var z = ad::sigmoid(ad::slice_cols(xt, h, h) + ad::slice_cols(ht, h, h));
    Var cand = ad::tanh(ad::slice_cols(xt, 2 * h, h) + ad::hadamard(r, ad::slice_cols(ht, 2 * h, h)));
    // h' = (1 - z) * cand + z * h
    state = cand + ad::hadamard(z, state - cand);
    states.push_back(state);
  }
  return ad::vcat(states);
}

void Gru::visit(const std::string& prefix, const TensorVisitor& fn) {
  input_.visit(prefix + ".input", fn);
  recurrent_.visit(prefix + ".recurrent", fn);
}

Adam::Adam(std::vector<Var> params, Options options)
    : params_(std::move(params)), options_(options) {
  for (const auto& p : params_) {
    first_.push_back(Matrix::Zero(p.rows(), p.cols()));
    second_.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

Real Adam::grad_norm() const {
  Real total = 0;
  for (const auto& p : params_)
    if (p.has_grad()) total += p.grad().squaredNorm();
  return std::sqrt(total);
}

void Adam::clip_grad_norm(Real max_norm) {
  const Real norm = grad_norm();
  if (norm <= max_norm || norm == 0) return;
  const Real factor = max_norm / norm;
  for (auto& p : params_)
    if (p.has_grad()) p.node()->grad *= factor;
}

void Adam::step() {
  ++steps_;
  const Real c1 = 1 - std::pow(options_.beta1, static_cast<Real>(steps_));
  const Real c2 = 1 - std::pow(options_.beta2, static_cast<Real>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].has_grad()) continue;
    const Matrix& g = params_[i].grad();
    first_[i] = options_.beta1 * first_[i] + (1 - options_.beta1) * g;
    second_[i] = options_.beta2 * second_[i] + (1 - options_.beta2) * g.cwiseAbs2();
    params_[i].mutable_value().array() -=
        options_.lr * (first_[i].array() / c1) / ((second_[i].array() / c2).sqrt() + options_.eps);
  }
}

}  // namespace scpc::nn

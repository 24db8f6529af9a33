// src/boundary.cpp

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

#include "scpc/boundary.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "scpc/error.hpp"

namespace scpc {

using ad::Index;
using ad::Matrix;
using ad::Real;
using ad::Var;

BoundaryThreshold BoundaryThreshold::make(double init, bool learnable) {
  BoundaryThreshold t;
  t.init = init;
  t.learnable = learnable;
  t.value = Var::scalar(init, learnable);
  return t;
}

void BoundaryThreshold::clamp() {
  auto& v = value.mutable_value();
  v(0, 0) = std::clamp(v(0, 0), 0.0, 1.0);
}

Var adjacent_dissimilarity(const Var& z) {
  const Index n = z.rows() - 1;
  if (n < 1) throw Error(ErrorCode::kDegenerateUtterance, "dissimilarity needs at least two frames");
  Var ds = ad::row_cosine(ad::slice_rows(z, 0, n), ad::slice_rows(z, 1, n));
  Index lo_idx = 0;
  Index hi_idx = 0;
  const Real lo = ds.value().col(0).minCoeff(&lo_idx);
  const Real hi = ds.value().col(0).maxCoeff(&hi_idx);
  const Real range = hi - lo;
  if (!(range > 1e-12)) return ad::make_result(Matrix::Zero(n, 1), {ds}, [](ad::Node&) {});
  Matrix d = (1.0 - (ds.value().array() - lo) / range).matrix();
  return ad::make_result(std::move(d), {ds}, [lo, range, lo_idx, hi_idx](ad::Node& node) {
    const Matrix& s = node.parents[0]->value;
    Matrix g = -node.grad / range;
    // d_i = 1 - (s_i - lo) / (hi - lo); lo and hi are s at their arg indices.
    Real d_lo = 0;
    Real d_hi = 0;
    for (Index i = 0; i < s.rows(); ++i) {
      const Real u = (s(i, 0) - lo) / range;
      d_lo += node.grad(i, 0) * (1.0 - u) / range;
      d_hi += node.grad(i, 0) * u / range;
    }
    g(lo_idx, 0) += d_lo;
    g(hi_idx, 0) += d_hi;
    node.parents[0]->accumulate(g);
  });
}

namespace {

// A value that is, locally, a linear function of at most two entries of d
// and of the threshold. Every step of the peak formula selects one of its
// operands or zero, so forms never grow beyond that.
struct Form {
  Real value = 0;
  Index i0 = -1;
  Real c0 = 0;
  Index i1 = -1;
  Real c1 = 0;
  Real dthres = 0;
};

Form entry(const Matrix& d, Index i) {
  if (i < 0 || i >= d.rows()) return Form{};
  return Form{d(i, 0), i, 1.0, -1, 0, 0};
}

Form minus(const Form& a, const Form& b) {
  // a is always a single entry here; b is a single entry or padding.
  Form out = a;
  out.value = a.value - b.value;
  if (b.i0 >= 0) {
    out.i1 = b.i0;
    out.c1 = -b.c0;
  }
  return out;
}

Form relu(const Form& a) { return a.value > 0 ? a : Form{}; }
Form min_of(const Form& a, const Form& b) { return b.value < a.value ? b : a; }
Form max_of(const Form& a, const Form& b) { return b.value > a.value ? b : a; }

Form peak_form(const Matrix& d, Index t, Real thres, bool use_p2) {
  const Form c = entry(d, t);
  const Form p1 = min_of(relu(minus(c, entry(d, t + 1))), relu(minus(c, entry(d, t - 1))));
  const Form p2 = min_of(relu(minus(c, entry(d, t + 2))), relu(minus(c, entry(d, t - 2))));
  Form inner = use_p2 ? max_of(p1, p2) : p1;
  inner.value -= thres;
  inner.dthres -= 1.0;
  return min_of(relu(inner), p1);
}

}  // namespace

Var peak_scores(const Var& d, const Var& thres, bool use_p2, Matrix* p1_out, Matrix* p2_out) {
  const Real t = thres.item();
  const auto scores = peak_scores(d.value().col(0), t, use_p2);
  if (p1_out) *p1_out = scores.p1;
  if (p2_out) *p2_out = scores.p2;
  Matrix p = scores.p;
  return ad::make_result(std::move(p), {d, thres}, [use_p2](ad::Node& node) {
    ad::Node* pd = node.parents[0].get();
    ad::Node* pt = node.parents[1].get();
    const Matrix& dv = pd->value;
    const Real thres_v = pt->value(0, 0);
    Matrix gd = Matrix::Zero(dv.rows(), 1);
    Real gt = 0;
    for (Index i = 0; i < dv.rows(); ++i) {
      const Real g = node.grad(i, 0);
      if (g == 0) continue;
      const Form f = peak_form(dv, i, thres_v, use_p2);
      if (f.i0 >= 0) gd(f.i0, 0) += g * f.c0;
      if (f.i1 >= 0) gd(f.i1, 0) += g * f.c1;
      gt += g * f.dthres;
    }
    if (pd->requires_grad) pd->accumulate(gd);
    if (pt->requires_grad) pt->accumulate(Matrix::Constant(1, 1, gt));
  });
}

Var straight_through(const Var& p) {
  Matrix hard = (p.value().array() * kHardScale).tanh().matrix();
  return ad::make_result(std::move(hard), {p}, [](ad::Node& node) {
    const Matrix& pv = node.parents[0]->value;
    Matrix g = (node.grad.array() * kSoftScale * (1.0 - (pv.array() * kSoftScale).tanh().square())).matrix();
    node.parents[0]->accumulate(g);
  });
}

BoundaryVector detect_boundaries(const Var& d, const BoundaryThreshold& thres, bool use_p2) {
  BoundaryVector out;
  Var p = peak_scores(d, thres.value, use_p2, &out.p1, &out.p2);
  out.p = p.value();
  out.b_soft = (out.p.array() * kSoftScale).tanh().matrix();
  out.b_hard = (out.p.array() * kHardScale).tanh().matrix();
  out.b = straight_through(p);
  return out;
}

void write_score_dump(const std::filesystem::path& path, const Matrix& d, const BoundaryVector& bounds) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + path.string());
  char line[160];
  for (Index t = 0; t < d.rows(); ++t) {
    std::snprintf(line, sizeof(line), "%lld %.6f %.6f %.6f %.6f %.6f\n", static_cast<long long>(t + 1), d(t, 0),
                  bounds.p1(t, 0), bounds.p2(t, 0), bounds.p(t, 0), bounds.b.value()(t, 0));
    out << line;
  }
}

}  // namespace scpc

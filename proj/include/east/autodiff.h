// Copyright 2026 The EAsT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EAST_AUTODIFF_H_
#define EAST_AUTODIFF_H_

// Tape-based reverse-mode differentiation over dense matrices.
//
// A Tape records every operation applied to its Vars. Calling Backward() on a
// 1x1 result walks the tape in reverse recording order and accumulates
// gradients into every node that (transitively) depends on a Variable leaf.
// Constant leaves never receive gradient. A tape is single-threaded; use one
// tape per computation.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "east/matrix.h"

namespace east {

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  const Matrix& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  // Value of a 1x1 node.
  double scalar() const;
};

class Tape {
 public:
  // Receives the gradient of the output node; must call Accumulate() for each
  // parent that needs it.
  using Backprop = std::function<void(Tape&, const Matrix&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Constant(Matrix value);
  Var Variable(Matrix value);

  // Adds a node computed from `parents`. The node requires grad iff any
  // parent does; otherwise `backprop` is dropped.
  Var Record(Matrix value, std::initializer_list<Var> parents, Backprop backprop);
  Var Record(Matrix value, std::span<const Var> parents, Backprop backprop);

  void Accumulate(Var target, const Matrix& contribution);
  void Backward(Var root);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  // Gradient of the last Backward root w.r.t. v; zeros when v was not reached.
  const Matrix& grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backprop backprop;
  };

  std::vector<Node> nodes_;
  mutable Matrix zeros_scratch_;
};

namespace ad {

Var MatMul(Var a, Var b);
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Div(Var a, Var b);
Var Scale(Var a, double factor);
// factor * a + shift, elementwise.
Var Affine(Var a, double factor, double shift);
// x (r x c) plus bias (1 x c) added to every row.
Var AddRowBroadcast(Var x, Var bias);
Var Relu(Var a);
Var Sigmoid(Var a);
Var Sqrt(Var a);
Var Abs(Var a);
// 1x1 sum / mean of all entries.
Var Sum(Var a);
Var Mean(Var a);
// Output row r is input row indices[r]; backward scatter-adds.
Var GatherRows(Var x, std::span<const std::size_t> indices);

// `x` stacks `segments` blocks of `frames` rows each. Each block is averaged
// over consecutive windows of `factor` rows; the trailing window may be short.
// Output stacks segments blocks of ceil(frames / factor) rows.
Var SegmentMeanPool(Var x, std::size_t segments, std::size_t frames, std::size_t factor);
// Mean over each block of `frames` rows; output is segments x cols.
Var SegmentMean(Var x, std::size_t segments, std::size_t frames);

// n x n matrix of row-to-row Euclidean distances. Forward values are exact;
// the backward pass divides by sqrt(d^2 + 1e-12) so coincident rows get a
// zero gradient instead of NaN.
Var PairwiseEuclidean(Var x);
// n x n matrix of 1 - cos(row_i, row_j). Throws ZeroVector on a row with norm
// below 1e-12.
Var PairwiseCosineDistance(Var x);
// a_ij - mean_i. - mean_.j + mean_.. for square a.
Var DoubleCenter(Var a);
// Mean over entries with mask != 0 of softplus(z) - y * z, i.e. binary cross
// entropy between targets y in [0, 1] and sigmoid(z). Throws EmptyMask.
Var BceWithLogits(Var logits, const Matrix& targets, const Matrix& mask);

}  // namespace ad

// Overflow-safe logistic function 1 / (1 + e^-z).
double Sigmoid(double z);

// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps) for every
// entry of x. Throws NonFiniteValue if any evaluation is not finite.
Matrix FiniteDiffGradient(const std::function<double(const Matrix&)>& f,
                          const Matrix& x, double eps = 1e-5);

}  // namespace east

#endif  // EAST_AUTODIFF_H_

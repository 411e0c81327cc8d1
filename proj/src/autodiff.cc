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

#include "east/autodiff.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "east/errors.h"

namespace east {
namespace {

constexpr double kDistanceSmoothing = 1e-12;
constexpr double kMinNorm = 1e-12;

double StableSigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double Softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

template <typename Fn>
Matrix Map(const Matrix& a, Fn fn) {
  Matrix out = a;
  for (double& v : out.values()) v = fn(v);
  return out;
}

void RequireSquare(const Matrix& a, const char* op) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(op) + ": matrix is not square");
  }
}

// Unit rows and their norms; throws ZeroVector on a (near) zero row.
void NormalizeRows(const Matrix& x, Matrix& unit, std::vector<double>& norms) {
  unit = x;
  norms.assign(x.rows(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double sq = 0.0;
    for (double v : x.row(i)) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm < kMinNorm) {
      throw Error(ErrorCode::kZeroVector, "row " + std::to_string(i) + " has zero norm");
    }
    norms[i] = norm;
    for (double& v : unit.row(i)) v /= norm;
  }
}

}  // namespace

double Sigmoid(double z) { return StableSigmoid(z); }

const Matrix& Var::value() const { return tape->value(*this); }
const Matrix& Var::grad() const { return tape->grad(*this); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) {
    throw Error(ErrorCode::kDimensionMismatch, "scalar() on a non-1x1 node");
  }
  return v(0, 0);
}

Var Tape::Constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), false, nullptr});
  return Var{this, nodes_.size() - 1};
}

Var Tape::Variable(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), true, nullptr});
  return Var{this, nodes_.size() - 1};
}

Var Tape::Record(Matrix value, std::initializer_list<Var> parents, Backprop backprop) {
  return Record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                std::move(backprop));
}

Var Tape::Record(Matrix value, std::span<const Var> parents, Backprop backprop) {
  bool needs_grad = false;
  for (const Var& p : parents) {
    if (p.tape != this) {
      throw Error(ErrorCode::kDimensionMismatch, "operands belong to different tapes");
    }
    needs_grad = needs_grad || nodes_[p.id].requires_grad;
  }
  if (!needs_grad) backprop = nullptr;
  nodes_.push_back(Node{std::move(value), Matrix(), needs_grad, std::move(backprop)});
  return Var{this, nodes_.size() - 1};
}

void Tape::Accumulate(Var target, const Matrix& contribution) {
  Node& node = nodes_[target.id];
  if (!node.requires_grad) return;
  if (node.grad.empty()) {
    node.grad = Matrix(node.value.rows(), node.value.cols());
  }
  if (!node.grad.SameShape(contribution)) {
    throw Error(ErrorCode::kDimensionMismatch, "gradient shape mismatch");
  }
  auto g = node.grad.values();
  auto c = contribution.values();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += c[i];
}

void Tape::Backward(Var root) {
  if (root.tape != this || nodes_[root.id].value.size() != 1) {
    throw Error(ErrorCode::kDimensionMismatch, "Backward() requires a 1x1 node on this tape");
  }
  for (Node& n : nodes_) n.grad = Matrix();
  if (!nodes_[root.id].requires_grad) return;
  nodes_[root.id].grad = Matrix(1, 1, 1.0);
  for (std::size_t i = root.id + 1; i-- > 0;) {
    if (!nodes_[i].backprop || nodes_[i].grad.empty()) continue;
    // Parents always have smaller ids, so this node's gradient is final here.
    const Matrix g = nodes_[i].grad;
    nodes_[i].backprop(*this, g);
  }
}

const Matrix& Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (!n.grad.empty()) return n.grad;
  zeros_scratch_ = Matrix(n.value.rows(), n.value.cols());
  return zeros_scratch_;
}

namespace ad {

Var MatMul(Var a, Var b) {
  Matrix out = east::MatMul(a.value(), b.value());
  return a.tape->Record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.Accumulate(a, MatMulTransB(g, b.value()));
    if (t.requires_grad(b)) t.Accumulate(b, MatMulTransA(a.value(), g));
  });
}

Var Add(Var a, Var b) {
  return a.tape->Record(east::Add(a.value(), b.value()), {a, b},
                        [a, b](Tape& t, const Matrix& g) {
                          t.Accumulate(a, g);
                          t.Accumulate(b, g);
                        });
}

Var Sub(Var a, Var b) {
  return a.tape->Record(east::Sub(a.value(), b.value()), {a, b},
                        [a, b](Tape& t, const Matrix& g) {
                          t.Accumulate(a, g);
                          if (t.requires_grad(b)) t.Accumulate(b, east::Scale(g, -1.0));
                        });
}

Var Mul(Var a, Var b) {
  return a.tape->Record(Hadamard(a.value(), b.value()), {a, b},
                        [a, b](Tape& t, const Matrix& g) {
                          if (t.requires_grad(a)) t.Accumulate(a, Hadamard(g, b.value()));
                          if (t.requires_grad(b)) t.Accumulate(b, Hadamard(g, a.value()));
                        });
}

Var Div(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (!av.SameShape(bv)) throw Error(ErrorCode::kDimensionMismatch, "div: shapes differ");
  Matrix out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] /= bv.values()[i];
  return a.tape->Record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    const auto av = a.value().values();
    const auto bv = b.value().values();
    if (t.requires_grad(a)) {
      Matrix ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i) ga.values()[i] /= bv[i];
      t.Accumulate(a, ga);
    }
    if (t.requires_grad(b)) {
      Matrix gb = g;
      for (std::size_t i = 0; i < gb.size(); ++i) {
        gb.values()[i] = -gb.values()[i] * av[i] / (bv[i] * bv[i]);
      }
      t.Accumulate(b, gb);
    }
  });
}

Var Scale(Var a, double factor) { return Affine(a, factor, 0.0); }

Var Affine(Var a, double factor, double shift) {
  Matrix out = Map(a.value(), [&](double v) { return factor * v + shift; });
  return a.tape->Record(std::move(out), {a}, [a, factor](Tape& t, const Matrix& g) {
    t.Accumulate(a, east::Scale(g, factor));
  });
}

Var AddRowBroadcast(Var x, Var bias) {
  const Matrix& xv = x.value();
  const Matrix& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != xv.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "bias must be 1 x cols(x)");
  }
  Matrix out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bv(0, c);
  }
  return x.tape->Record(std::move(out), {x, bias}, [x, bias](Tape& t, const Matrix& g) {
    t.Accumulate(x, g);
    if (t.requires_grad(bias)) {
      Matrix gb(1, g.cols());
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
      }
      t.Accumulate(bias, gb);
    }
  });
}

Var Relu(Var a) {
  Matrix out = Map(a.value(), [](double v) { return v > 0.0 ? v : 0.0; });
  return a.tape->Record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    Matrix ga = g;
    const auto av = a.value().values();
    // Subgradient at 0 is 0.
    for (std::size_t i = 0; i < ga.size(); ++i) {
      if (!(av[i] > 0.0)) ga.values()[i] = 0.0;
    }
    t.Accumulate(a, ga);
  });
}

Var Sigmoid(Var a) {
  return a.tape->Record(Map(a.value(), StableSigmoid), {a}, [a](Tape& t, const Matrix& g) {
    Matrix ga = g;
    const auto av = a.value().values();
    for (std::size_t i = 0; i < ga.size(); ++i) {
      const double s = StableSigmoid(av[i]);
      ga.values()[i] *= s * (1.0 - s);
    }
    t.Accumulate(a, ga);
  });
}

Var Sqrt(Var a) {
  return a.tape->Record(Map(a.value(), [](double v) { return std::sqrt(v); }), {a},
                        [a](Tape& t, const Matrix& g) {
                          Matrix ga = g;
                          const auto av = a.value().values();
                          for (std::size_t i = 0; i < ga.size(); ++i) {
                            ga.values()[i] *= 0.5 / std::sqrt(av[i]);
                          }
                          t.Accumulate(a, ga);
                        });
}

Var Abs(Var a) {
  return a.tape->Record(Map(a.value(), [](double v) { return std::abs(v); }), {a},
                        [a](Tape& t, const Matrix& g) {
                          Matrix ga = g;
                          const auto av = a.value().values();
                          for (std::size_t i = 0; i < ga.size(); ++i) {
                            const double sign = av[i] > 0.0 ? 1.0 : (av[i] < 0.0 ? -1.0 : 0.0);
                            ga.values()[i] *= sign;
                          }
                          t.Accumulate(a, ga);
                        });
}

Var Sum(Var a) {
  return a.tape->Record(Matrix(1, 1, a.value().Sum()), {a}, [a](Tape& t, const Matrix& g) {
    t.Accumulate(a, Matrix(a.rows(), a.cols(), g(0, 0)));
  });
}

Var Mean(Var a) {
  const double count = static_cast<double>(a.value().size());
  return a.tape->Record(Matrix(1, 1, a.value().Sum() / count), {a},
                        [a, count](Tape& t, const Matrix& g) {
                          t.Accumulate(a, Matrix(a.rows(), a.cols(), g(0, 0) / count));
                        });
}

Var GatherRows(Var x, std::span<const std::size_t> indices) {
  const Matrix& xv = x.value();
  Matrix out(indices.size(), xv.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= xv.rows()) {
      throw Error(ErrorCode::kDimensionMismatch, "gather index out of range");
    }
    std::copy(xv.row(indices[r]).begin(), xv.row(indices[r]).end(), out.row(r).begin());
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return x.tape->Record(std::move(out), {x}, [x, idx = std::move(idx)](Tape& t, const Matrix& g) {
    Matrix gx(x.rows(), x.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      auto dst = gx.row(idx[r]);
      auto src = g.row(r);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
    }
    t.Accumulate(x, gx);
  });
}

Var SegmentMeanPool(Var x, std::size_t segments, std::size_t frames, std::size_t factor) {
  const Matrix& xv = x.value();
  if (factor == 0 || frames == 0 || xv.rows() != segments * frames) {
    throw Error(ErrorCode::kDimensionMismatch, "segment pooling: bad shape or factor");
  }
  const std::size_t out_frames = (frames + factor - 1) / factor;
  const std::size_t cols = xv.cols();
  Matrix out(segments * out_frames, cols);
  for (std::size_t s = 0; s < segments; ++s) {
    for (std::size_t o = 0; o < out_frames; ++o) {
      const std::size_t begin = o * factor;
      const std::size_t end = std::min(frames, begin + factor);
      auto dst = out.row(s * out_frames + o);
      for (std::size_t f = begin; f < end; ++f) {
        auto src = xv.row(s * frames + f);
        for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
      }
      const double inv = 1.0 / static_cast<double>(end - begin);
      for (double& v : dst) v *= inv;
    }
  }
  return x.tape->Record(
      std::move(out), {x}, [x, segments, frames, factor, out_frames](Tape& t, const Matrix& g) {
        Matrix gx(x.rows(), x.cols());
        for (std::size_t s = 0; s < segments; ++s) {
          for (std::size_t o = 0; o < out_frames; ++o) {
            const std::size_t begin = o * factor;
            const std::size_t end = std::min(frames, begin + factor);
            const double inv = 1.0 / static_cast<double>(end - begin);
            auto src = g.row(s * out_frames + o);
            for (std::size_t f = begin; f < end; ++f) {
              auto dst = gx.row(s * frames + f);
              for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c] * inv;
            }
          }
        }
        t.Accumulate(x, gx);
      });
}

Var SegmentMean(Var x, std::size_t segments, std::size_t frames) {
  return SegmentMeanPool(x, segments, frames, frames);
}

Var PairwiseEuclidean(Var x) {
  const Matrix& xv = x.value();
  const std::size_t n = xv.rows();
  Matrix sq(n, n);
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double acc = 0.0;
      auto ri = xv.row(i);
      auto rj = xv.row(j);
      for (std::size_t c = 0; c < ri.size(); ++c) {
        const double d = ri[c] - rj[c];
        acc += d * d;
      }
      sq(i, j) = sq(j, i) = acc;
      out(i, j) = out(j, i) = std::sqrt(acc);
    }
  }
  return x.tape->Record(std::move(out), {x}, [x, sq = std::move(sq)](Tape& t, const Matrix& g) {
    const Matrix& xv = x.value();
    const std::size_t n = xv.rows();
    Matrix gx(n, xv.cols());
    for (std::size_t i = 0; i < n; ++i) {
      auto gi = gx.row(i);
      auto ri = xv.row(i);
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double w = (g(i, j) + g(j, i)) / std::sqrt(sq(i, j) + kDistanceSmoothing);
        auto rj = xv.row(j);
        for (std::size_t c = 0; c < gi.size(); ++c) gi[c] += w * (ri[c] - rj[c]);
      }
    }
    t.Accumulate(x, gx);
  });
}

Var PairwiseCosineDistance(Var x) {
  Matrix unit;
  std::vector<double> norms;
  NormalizeRows(x.value(), unit, norms);
  const std::size_t n = unit.rows();
  Matrix similarity = MatMulTransB(unit, unit);
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out(i, j) = i == j ? 0.0 : 1.0 - similarity(i, j);
  }
  return x.tape->Record(
      std::move(out), {x},
      [x, unit = std::move(unit), norms = std::move(norms),
       similarity = std::move(similarity)](Tape& t, const Matrix& g) {
        const std::size_t n = unit.rows();
        Matrix gx(n, unit.cols());
        // d(u_i . u_j)/dx_i = (u_j - s_ij u_i) / |x_i|.
        for (std::size_t i = 0; i < n; ++i) {
          auto gi = gx.row(i);
          auto ui = unit.row(i);
          for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double w = -(g(i, j) + g(j, i)) / norms[i];
            const double s = similarity(i, j);
            auto uj = unit.row(j);
            for (std::size_t c = 0; c < gi.size(); ++c) gi[c] += w * (uj[c] - s * ui[c]);
          }
        }
        t.Accumulate(x, gx);
      });
}

namespace {

Matrix DoubleCenterValues(const Matrix& a) {
  const std::size_t n = a.rows();
  std::vector<double> row_mean(n, 0.0);
  std::vector<double> col_mean(n, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      row_mean[i] += a(i, j);
      col_mean[j] += a(i, j);
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    grand += row_mean[i];
    row_mean[i] *= inv_n;
    col_mean[i] *= inv_n;
  }
  grand *= inv_n * inv_n;
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out(i, j) = a(i, j) - row_mean[i] - col_mean[j] + grand;
    }
  }
  return out;
}

}  // namespace

Var DoubleCenter(Var a) {
  RequireSquare(a.value(), "double_center");
  // The map is J a J with symmetric J, so it is its own adjoint.
  return a.tape->Record(DoubleCenterValues(a.value()), {a}, [a](Tape& t, const Matrix& g) {
    t.Accumulate(a, DoubleCenterValues(g));
  });
}

Var BceWithLogits(Var logits, const Matrix& targets, const Matrix& mask) {
  const Matrix& z = logits.value();
  if (!z.SameShape(targets) || !z.SameShape(mask)) {
    throw Error(ErrorCode::kDimensionMismatch, "logits, targets and mask must share a shape");
  }
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (mask.values()[i] == 0.0) continue;
    const double zi = z.values()[i];
    total += Softplus(zi) - targets.values()[i] * zi;
    ++count;
  }
  if (count == 0) throw Error(ErrorCode::kEmptyMask, "no observed labels in batch");
  const double inv = 1.0 / static_cast<double>(count);
  return logits.tape->Record(
      Matrix(1, 1, total * inv), {logits},
      [logits, targets, mask, inv](Tape& t, const Matrix& g) {
        const Matrix& z = logits.value();
        Matrix gz(z.rows(), z.cols());
        for (std::size_t i = 0; i < z.size(); ++i) {
          if (mask.values()[i] == 0.0) continue;
          gz.values()[i] = g(0, 0) * inv * (StableSigmoid(z.values()[i]) - targets.values()[i]);
        }
        t.Accumulate(logits, gz);
      });
}

}  // namespace ad

Matrix FiniteDiffGradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                          double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidConfig, "eps must be positive");
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double original = probe.values()[i];
    probe.values()[i] = original + eps;
    const double plus = f(probe);
    probe.values()[i] = original - eps;
    const double minus = f(probe);
    probe.values()[i] = original;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw Error(ErrorCode::kNonFiniteValue,
                  "function is not finite near entry " + std::to_string(i));
    }
    grad.values()[i] = (plus - minus) / (2.0 * eps);
  }
  return grad;
}

}  // namespace east

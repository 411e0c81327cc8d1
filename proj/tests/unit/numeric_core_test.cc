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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "east/autodiff.h"
#include "east/errors.h"
#include "east/matrix.h"
#include "oracles.h"

namespace east {
namespace {

template <typename Fn>
ErrorCode CodeOf(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an east::Error";
  return ErrorCode::kIoError;
}

TEST(MatrixTest, MatMulExamples) {
  const Matrix m{{1, 2}, {3, 4}};
  EXPECT_EQ(MatMul(Matrix::Identity(2), m), m);
  EXPECT_EQ(MatMul(Matrix{{1, 0}}, Matrix{{5}, {7}}), (Matrix{{5}}));
  EXPECT_EQ(MatMul(m, Matrix{{5, 6}, {7, 8}}), (Matrix{{19, 22}, {43, 50}}));
}

TEST(MatrixTest, ShapeErrors) {
  EXPECT_EQ(CodeOf([] { MatMul(Matrix(2, 3), Matrix(2, 3)); }), ErrorCode::kDimensionMismatch);
  EXPECT_EQ(CodeOf([] { Add(Matrix(2, 3), Matrix(3, 2)); }), ErrorCode::kDimensionMismatch);
  EXPECT_EQ(CodeOf([] { Hadamard(Matrix(1, 3), Matrix(1, 2)); }),
            ErrorCode::kDimensionMismatch);
  EXPECT_EQ(CodeOf([] { Matrix(2, 2, std::vector<double>{1, 2, 3}); }),
            ErrorCode::kDimensionMismatch);
}

TEST(MatrixTest, TransposedProductsAgree) {
  const Matrix a = oracle::RandomMatrix(4, 3, -2, 2, 1);
  const Matrix b = oracle::RandomMatrix(4, 5, -2, 2, 2);
  const Matrix c = oracle::RandomMatrix(6, 3, -2, 2, 3);
  EXPECT_LT(MaxAbsDiff(MatMulTransA(a, b), MatMul(Transpose(a), b)), 1e-14);
  EXPECT_LT(MaxAbsDiff(MatMulTransB(a, c), MatMul(a, Transpose(c))), 1e-14);
}

TEST(MatrixTest, MatMulIsAssociative) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix a = oracle::RandomMatrix(3, 4, -2, 2, 10 * seed);
    const Matrix b = oracle::RandomMatrix(4, 5, -2, 2, 10 * seed + 1);
    const Matrix c = oracle::RandomMatrix(5, 2, -2, 2, 10 * seed + 2);
    EXPECT_LT(MaxAbsDiff(MatMul(MatMul(a, b), c), MatMul(a, MatMul(b, c))), 1e-12);
  }
}

TEST(MatrixTest, SliceAndStack) {
  const Matrix m{{1, 2}, {3, 4}, {5, 6}};
  const std::vector<Matrix> parts = {SliceRows(m, 0, 1), SliceRows(m, 1, 3)};
  EXPECT_EQ(VStack(parts), m);
  EXPECT_EQ(Scale(Matrix{{1, 2, 3}}, 2.0), (Matrix{{2, 4, 6}}));
}

TEST(AutodiffTest, ElementwiseExamples) {
  Tape tape;
  const Var x = tape.Constant(Matrix{{-1, 0, 2}});
  EXPECT_EQ(ad::Relu(x).value(), (Matrix{{0, 0, 2}}));
  EXPECT_EQ(ad::Sigmoid(tape.Constant(Matrix{{0}})).scalar(), 0.5);
  EXPECT_EQ(ad::Scale(tape.Constant(Matrix{{1, 2, 3}}), 2.0).value(), (Matrix{{2, 4, 6}}));
}

TEST(AutodiffTest, ReluSubgradientAtZeroIsZero) {
  Tape tape;
  const Var x = tape.Variable(Matrix{{-1, 0, 2}});
  tape.Backward(ad::Sum(ad::Relu(x)));
  EXPECT_EQ(x.grad(), (Matrix{{0, 0, 1}}));
}

TEST(AutodiffTest, SigmoidIsStableForLargeInputs) {
  EXPECT_EQ(Sigmoid(-800.0), 0.0);
  EXPECT_EQ(Sigmoid(800.0), 1.0);
  EXPECT_TRUE(std::isfinite(Sigmoid(-1e308)));
}

TEST(AutodiffTest, FiniteDiffExamples) {
  const Matrix at3 = FiniteDiffGradient([](const Matrix& x) { return x(0, 0) * x(0, 0); },
                                        Matrix{{3}}, 1e-5);
  EXPECT_NEAR(at3(0, 0), 6.0, 1e-8);
  const Matrix ones = FiniteDiffGradient([](const Matrix& x) { return x.Sum(); },
                                         oracle::RandomMatrix(3, 2, -2, 2, 4));
  EXPECT_LT(MaxAbsDiff(ones, Matrix(3, 2, 1.0)), 1e-9);
}

TEST(AutodiffTest, FiniteDiffRejectsNonFinite) {
  EXPECT_EQ(CodeOf([] {
              FiniteDiffGradient([](const Matrix& x) { return std::log(x(0, 0)); },
                                 Matrix{{0}});
            }),
            ErrorCode::kNonFiniteValue);
}

TEST(AutodiffTest, ConstantsReceiveNoGradient) {
  Tape tape;
  const Var a = tape.Constant(Matrix{{1, 2}});
  const Var b = tape.Variable(Matrix{{3, 4}});
  tape.Backward(ad::Sum(ad::Mul(a, b)));
  EXPECT_FALSE(tape.requires_grad(a));
  EXPECT_EQ(a.grad(), Matrix(1, 2));
  EXPECT_EQ(b.grad(), (Matrix{{1, 2}}));
}

TEST(AutodiffTest, BackwardNeedsScalarRoot) {
  Tape tape;
  const Var x = tape.Variable(Matrix(2, 2, 1.0));
  EXPECT_EQ(CodeOf([&] { tape.Backward(x); }), ErrorCode::kDimensionMismatch);
}

// Every differentiable op against central differences on inputs in [-2, 2].
struct OpCase {
  const char* name;
  std::size_t rows, cols;
  std::function<Var(Tape&, Var)> fn;
};

class OpGradientTest : public ::testing::TestWithParam<int> {};

std::vector<OpCase> Ops() {
  const Matrix other = oracle::RandomMatrix(3, 4, 0.5, 2.0, 77);
  const Matrix right = oracle::RandomMatrix(4, 2, -2.0, 2.0, 78);
  const std::vector<std::size_t> gather = {2, 0, 2, 1};
  return {
      {"matmul", 3, 4, [=](Tape& t, Var x) { return ad::MatMul(x, t.Constant(right)); }},
      {"add", 3, 4, [=](Tape& t, Var x) { return ad::Add(x, t.Constant(other)); }},
      {"sub", 3, 4, [=](Tape& t, Var x) { return ad::Sub(t.Constant(other), x); }},
      {"mul", 3, 4, [](Tape&, Var x) { return ad::Mul(x, x); }},
      {"div", 3, 4, [=](Tape& t, Var x) { return ad::Div(x, t.Constant(other)); }},
      {"div_denominator", 3, 4,
       [=](Tape& t, Var x) { return ad::Div(t.Constant(other), ad::Affine(x, 0.1, 3.0)); }},
      {"affine", 3, 4, [](Tape&, Var x) { return ad::Affine(x, -1.5, 0.25); }},
      {"row_broadcast", 3, 4,
       [=](Tape& t, Var x) {
         const std::vector<std::size_t> second = {1};
         return ad::AddRowBroadcast(t.Constant(other), ad::GatherRows(x, second));
       }},
      {"sigmoid", 3, 4, [](Tape&, Var x) { return ad::Sigmoid(x); }},
      {"sqrt", 3, 4, [](Tape&, Var x) { return ad::Sqrt(ad::Affine(x, 1.0, 3.0)); }},
      {"mean", 3, 4, [](Tape&, Var x) { return ad::Mean(ad::Mul(x, x)); }},
      {"gather", 3, 4, [=](Tape&, Var x) { return ad::GatherRows(x, gather); }},
      {"segment_pool", 6, 2, [](Tape&, Var x) { return ad::SegmentMeanPool(x, 2, 3, 2); }},
      {"segment_mean", 6, 2, [](Tape&, Var x) { return ad::SegmentMean(x, 3, 2); }},
      {"double_center", 3, 3, [](Tape&, Var x) { return ad::DoubleCenter(x); }},
      {"cosine", 3, 4, [](Tape&, Var x) { return ad::PairwiseCosineDistance(x); }},
      {"euclidean", 3, 4, [](Tape&, Var x) { return ad::PairwiseEuclidean(x); }},
  };
}

TEST_P(OpGradientTest, MatchesFiniteDifferences) {
  const OpCase op = Ops()[GetParam()];
  // A fixed random weighting turns every op into a scalar.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix x0 = oracle::RandomMatrix(op.rows, op.cols, -2.0, 2.0, 100 + seed);
    Matrix weights;
    {
      Tape probe;
      const Matrix out = op.fn(probe, probe.Constant(x0)).value();
      weights = oracle::RandomMatrix(out.rows(), out.cols(), -1.0, 1.0, 200 + seed);
    }
    auto scalar = [&](Tape& t, Var x) {
      return ad::Sum(ad::Mul(op.fn(t, x), t.Constant(weights)));
    };
    Tape tape;
    const Var x = tape.Variable(x0);
    tape.Backward(scalar(tape, x));
    const Matrix numeric = FiniteDiffGradient(
        [&](const Matrix& p) {
          Tape t;
          return scalar(t, t.Constant(p)).scalar();
        },
        x0);
    EXPECT_LT(oracle::RelativeError(x.grad(), numeric, 1e-6), 1e-4) << op.name;
  }
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradientTest, ::testing::Range(0, 17),
                         [](const ::testing::TestParamInfo<int>& info) {
                           return std::string(Ops()[info.param].name);
                         });

TEST(AutodiffTest, AbsAndReluGradientsAwayFromKinks) {
  Matrix x0 = oracle::RandomMatrix(4, 4, -2.0, 2.0, 5);
  for (double& v : x0.values()) {
    if (std::abs(v) < 1e-3) v = 0.5;
  }
  for (auto op : {ad::Abs, ad::Relu}) {
    Tape tape;
    const Var x = tape.Variable(x0);
    tape.Backward(ad::Sum(ad::Mul(op(x), x)));
    const Matrix numeric = FiniteDiffGradient(
        [&](const Matrix& p) {
          Tape t;
          const Var v = t.Constant(p);
          return ad::Sum(ad::Mul(op(v), v)).scalar();
        },
        x0);
    EXPECT_LT(oracle::RelativeError(x.grad(), numeric, 1e-6), 1e-4);
  }
}

TEST(ErrorTest, MessagesCarryNameAndOffset) {
  const FormatError e(42, "bad magic");
  EXPECT_EQ(e.code(), ErrorCode::kFormatError);
  EXPECT_EQ(e.offset(), 42u);
  EXPECT_NE(std::string(e.what()).find("FormatError"), std::string::npos);
  EXPECT_NE(std::string(e.what()).find("42"), std::string::npos);
}

TEST(ErrorTest, WarningSinkCanBeReplaced) {
  std::vector<std::string> seen;
  const WarningSink previous =
      SetWarningSink([&](std::string_view m) { seen.emplace_back(m); });
  Warn("hello");
  SetWarningSink(previous);
  ASSERT_EQ(seen.size(), 1u);
  EXPECT_EQ(seen[0], "hello");
}

}  // namespace
}  // namespace east

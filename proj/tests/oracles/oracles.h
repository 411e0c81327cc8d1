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

#ifndef EAST_TESTS_ORACLES_ORACLES_H_
#define EAST_TESTS_ORACLES_ORACLES_H_

// Independent reference implementations used only to check the library.
// Everything here is written as direct loops over the textbook definitions
// and shares no code path with src/.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "east/matrix.h"
#include "east/models.h"

namespace east::oracle {

// Naive double loop over the definitions: a_ij = |l_i - l_j|, double
// centering with row/column/grand means, V^2 sums, 1 - V^2(l,v)/sqrt(...).
// Rows of `student` and `teacher` are the n samples of one frame.
double DcorLossSingleFrame(const Matrix& student, const Matrix& teacher);

// Per-clip sequences, aligned by repeating frames of the shorter sequence
// (index floor(i * short / long)), evaluated frame by frame and averaged.
double DcorLoss(std::span<const Matrix> student_maps, std::span<const Matrix> teacher_seqs);
double CosDiffLoss(std::span<const Matrix> student_maps, std::span<const Matrix> teacher_seqs);

// Precision at each positive, ranks by (score desc, index asc), by counting.
double AveragePrecision(std::span<const double> scores, std::span<const double> labels);
// Exhaustive positive/negative pair enumeration with ties worth 1/2.
double RocAuc(std::span<const double> scores, std::span<const double> labels);
// Confusion-matrix count on observed entries; (F1_pos + F1_neg) / 2.
double ClassF1(std::span<const double> scores, std::span<const double> labels,
               std::span<const double> mask, double threshold);

// Smallest |pre-activation| over every ReLU of the student on the stacked
// input, recomputed with plain loops.
double MinPreActivationMargin(const StudentNet& net, const Matrix& input,
                              std::size_t batch_size, std::size_t frames);

// max_i |a_i - b_i| / max(max_i |b_i|, floor).
double RelativeError(const Matrix& actual, const Matrix& expected, double floor = 1e-8);

// Uniform entries in [lo, hi).
Matrix RandomMatrix(std::size_t rows, std::size_t cols, double lo, double hi,
                    std::uint64_t seed);
// Random orthogonal n x n matrix (Gram-Schmidt on Gaussian columns).
Matrix RandomOrthogonal(std::size_t n, std::uint64_t seed);
// Smallest pairwise row distance.
double MinRowDistance(const Matrix& x);

}  // namespace east::oracle

#endif  // EAST_TESTS_ORACLES_ORACLES_H_

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

#ifndef EAST_DISTANCE_H_
#define EAST_DISTANCE_H_

// Distance measures between student feature maps and teacher embeddings.
//
// Batches are stacked clip-major: row i * frames + t holds frame t of clip i.
// Both measures are evaluated independently per aligned time frame over the
// n clips of the batch and then averaged over frames with equal weight.

#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "east/autodiff.h"
#include "east/matrix.h"

namespace east {

enum class MeasureKind { kCosDiff, kDistanceCorrelation };

std::string_view MeasureName(MeasureKind kind);
// Accepts "cosdiff"/"cos-diff" and "dcor"/"distance-correlation".
MeasureKind ParseMeasure(std::string_view name);

// V^2 denominators below this mark a collapsed batch.
inline constexpr double kDegenerateVarianceThreshold = 1e-14;

// Source frame for each of `long_frames` output frames when stretching a
// sequence of `short_frames`: floor(i * short / long).
std::vector<std::size_t> StretchIndices(std::size_t short_frames, std::size_t long_frames);

// Repeats frames of the shorter sequence so both have max(T_s, T_t) frames.
// Throws EmptySequence if either has no frames.
std::pair<Matrix, Matrix> AlignTime(const Matrix& student, const Matrix& teacher);

// 1 - u.w / (|u||w|). Throws ZeroVector if either norm is below 1e-12.
double CosineDistance(std::span<const double> u, std::span<const double> w);

// Plain-value versions of the distance-correlation building blocks.
Matrix PairwiseEuclidean(const Matrix& x);
Matrix DoubleCenter(const Matrix& a);
// (1/n^2) sum_ij A_ij B_ij.
double DistanceCovarianceSq(const Matrix& centered_a, const Matrix& centered_b);

// Student side is differentiable; teacher side is constant.
struct AlignedBatch {
  Var student;     // (n * frames) x C_s
  Matrix teacher;  // (n * frames) x C_t
  std::size_t batch_size = 0;
  std::size_t frames = 0;
};

// Mean over frames of the mean over pairs i < j of
// |d_cos(l_i, l_j) - d_cos(v_i, v_j)|. In [0, 2].
Var CosDiffLoss(const AlignedBatch& batch);
// Mean over frames of 1 - V^2(l, v) / sqrt(V^2(l, l) V^2(v, v)). In [0, 1].
// Throws DegenerateBatch when a frame has identical student or teacher rows.
Var DistanceCorrelationLoss(const AlignedBatch& batch);

// Aligns stacked student taps (batch_size * student_frames rows) with stacked
// teacher embeddings (batch_size * teacher_frames rows) and evaluates the
// chosen measure. Gradient flows only into `student`.
Var RegularizationLoss(MeasureKind measure, Var student, std::size_t student_frames,
                       const Matrix& teacher, std::size_t teacher_frames,
                       std::size_t batch_size);

// List form: one feature map and one embedding sequence per clip. All clips
// must share their frame counts (RaggedBatch otherwise).
double RegularizationLoss(MeasureKind measure, std::span<const Matrix> student_maps,
                          std::span<const Matrix> teacher_sequences);

}  // namespace east

#endif  // EAST_DISTANCE_H_

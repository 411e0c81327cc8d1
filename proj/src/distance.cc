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

#include "east/distance.h"

#include <cmath>
#include <string>

#include "east/errors.h"

namespace east {
namespace {

void RequireBatch(std::size_t n) {
  if (n < 2) {
    throw Error(ErrorCode::kBatchTooSmall,
                "need at least 2 samples, got " + std::to_string(n));
  }
}

std::vector<std::size_t> FrameRows(std::size_t batch_size, std::size_t frames, std::size_t t) {
  std::vector<std::size_t> rows(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) rows[i] = i * frames + t;
  return rows;
}

Matrix GatherPlain(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto src = x.row(rows[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

// Row indices that stretch every clip from `frames` to `target` frames.
std::vector<std::size_t> StretchBatchRows(std::size_t batch_size, std::size_t frames,
                                          std::size_t target) {
  const auto per_clip = StretchIndices(frames, target);
  std::vector<std::size_t> rows;
  rows.reserve(batch_size * target);
  for (std::size_t i = 0; i < batch_size; ++i) {
    for (std::size_t j : per_clip) rows.push_back(i * frames + j);
  }
  return rows;
}

void RequireAlignedShapes(const AlignedBatch& batch) {
  RequireBatch(batch.batch_size);
  const std::size_t rows = batch.batch_size * batch.frames;
  if (batch.frames == 0) throw Error(ErrorCode::kEmptySequence, "batch has no frames");
  if (batch.student.rows() != rows || batch.teacher.rows() != rows) {
    throw Error(ErrorCode::kDimensionMismatch,
                "aligned batch expects " + std::to_string(rows) + " stacked rows");
  }
}

Var FrameAverage(const std::vector<Var>& per_frame) {
  Var total = per_frame.front();
  for (std::size_t t = 1; t < per_frame.size(); ++t) total = ad::Add(total, per_frame[t]);
  return ad::Scale(total, 1.0 / static_cast<double>(per_frame.size()));
}

}  // namespace

std::string_view MeasureName(MeasureKind kind) {
  return kind == MeasureKind::kCosDiff ? "cosdiff" : "dcor";
}

MeasureKind ParseMeasure(std::string_view name) {
  if (name == "cosdiff" || name == "cos-diff") return MeasureKind::kCosDiff;
  if (name == "dcor" || name == "distance-correlation") return MeasureKind::kDistanceCorrelation;
  throw Error(ErrorCode::kInvalidConfig, "unknown measure '" + std::string(name) + "'");
}

std::vector<std::size_t> StretchIndices(std::size_t short_frames, std::size_t long_frames) {
  if (short_frames == 0 || long_frames == 0) {
    throw Error(ErrorCode::kEmptySequence, "sequence has no frames");
  }
  std::vector<std::size_t> idx(long_frames);
  for (std::size_t i = 0; i < long_frames; ++i) idx[i] = i * short_frames / long_frames;
  return idx;
}

std::pair<Matrix, Matrix> AlignTime(const Matrix& student, const Matrix& teacher) {
  if (student.rows() == 0 || teacher.rows() == 0) {
    throw Error(ErrorCode::kEmptySequence, "cannot align an empty sequence");
  }
  const std::size_t target = std::max(student.rows(), teacher.rows());
  auto stretch = [target](const Matrix& m) {
    if (m.rows() == target) return m;
    const auto idx = StretchIndices(m.rows(), target);
    return GatherPlain(m, idx);
  };
  return {stretch(student), stretch(teacher)};
}

double CosineDistance(std::span<const double> u, std::span<const double> w) {
  if (u.size() != w.size()) throw Error(ErrorCode::kDimensionMismatch, "vector lengths differ");
  double dot = 0.0, uu = 0.0, ww = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * w[i];
    uu += u[i] * u[i];
    ww += w[i] * w[i];
  }
  const double nu = std::sqrt(uu);
  const double nw = std::sqrt(ww);
  if (nu < 1e-12 || nw < 1e-12) throw Error(ErrorCode::kZeroVector, "zero-norm vector");
  return 1.0 - dot / (nu * nw);
}

Matrix PairwiseEuclidean(const Matrix& x) {
  RequireBatch(x.rows());
  Tape tape;
  return ad::PairwiseEuclidean(tape.Constant(x)).value();
}

Matrix DoubleCenter(const Matrix& a) {
  Tape tape;
  return ad::DoubleCenter(tape.Constant(a)).value();
}

double DistanceCovarianceSq(const Matrix& centered_a, const Matrix& centered_b) {
  if (!centered_a.SameShape(centered_b) || centered_a.rows() != centered_a.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "dcov needs two equal square matrices");
  }
  const double n = static_cast<double>(centered_a.rows());
  double acc = 0.0;
  for (std::size_t i = 0; i < centered_a.size(); ++i) {
    acc += centered_a.values()[i] * centered_b.values()[i];
  }
  return acc / (n * n);
}

Var CosDiffLoss(const AlignedBatch& batch) {
  RequireAlignedShapes(batch);
  Tape& tape = *batch.student.tape;
  const std::size_t n = batch.batch_size;
  // Unordered pairs i < j.
  Matrix upper(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) upper(i, j) = 1.0;
  }
  const Var pair_mask = tape.Constant(std::move(upper));
  const double pairs = static_cast<double>(n * (n - 1) / 2);

  std::vector<Var> per_frame;
  for (std::size_t t = 0; t < batch.frames; ++t) {
    const auto rows = FrameRows(n, batch.frames, t);
    const Var student_dist = ad::PairwiseCosineDistance(ad::GatherRows(batch.student, rows));
    Tape scratch;
    const Var teacher_dist =
        tape.Constant(ad::PairwiseCosineDistance(scratch.Constant(GatherPlain(batch.teacher, rows)))
                          .value());
    const Var diff = ad::Abs(ad::Sub(student_dist, teacher_dist));
    per_frame.push_back(ad::Scale(ad::Sum(ad::Mul(diff, pair_mask)), 1.0 / pairs));
  }
  return FrameAverage(per_frame);
}

Var DistanceCorrelationLoss(const AlignedBatch& batch) {
  RequireAlignedShapes(batch);
  Tape& tape = *batch.student.tape;
  const std::size_t n = batch.batch_size;
  const double inv_n2 = 1.0 / static_cast<double>(n * n);

  std::vector<Var> per_frame;
  for (std::size_t t = 0; t < batch.frames; ++t) {
    const auto rows = FrameRows(n, batch.frames, t);
    const Matrix teacher_centered = DoubleCenter(PairwiseEuclidean(GatherPlain(batch.teacher, rows)));
    const double teacher_var = DistanceCovarianceSq(teacher_centered, teacher_centered);
    if (teacher_var < kDegenerateVarianceThreshold) {
      throw Error(ErrorCode::kDegenerateBatch,
                  "teacher rows are identical in frame " + std::to_string(t));
    }
    const Var student_centered =
        ad::DoubleCenter(ad::PairwiseEuclidean(ad::GatherRows(batch.student, rows)));
    const Var student_var = ad::Scale(ad::Sum(ad::Mul(student_centered, student_centered)), inv_n2);
    if (student_var.scalar() < kDegenerateVarianceThreshold) {
      throw Error(ErrorCode::kDegenerateBatch,
                  "student rows are identical in frame " + std::to_string(t));
    }
    const Var cross = ad::Scale(
        ad::Sum(ad::Mul(student_centered, tape.Constant(teacher_centered))), inv_n2);
    const Var r2 = ad::Div(cross, ad::Sqrt(ad::Scale(student_var, teacher_var)));
    per_frame.push_back(ad::Affine(r2, -1.0, 1.0));
  }
  return FrameAverage(per_frame);
}

Var RegularizationLoss(MeasureKind measure, Var student, std::size_t student_frames,
                       const Matrix& teacher, std::size_t teacher_frames,
                       std::size_t batch_size) {
  RequireBatch(batch_size);
  if (student_frames == 0 || teacher_frames == 0) {
    throw Error(ErrorCode::kEmptySequence, "sequence has no frames");
  }
  if (student.rows() != batch_size * student_frames ||
      teacher.rows() != batch_size * teacher_frames) {
    throw Error(ErrorCode::kDimensionMismatch, "stacked rows do not match batch layout");
  }
  const std::size_t frames = std::max(student_frames, teacher_frames);
  AlignedBatch batch{student, teacher, batch_size, frames};
  if (student_frames < frames) {
    batch.student = ad::GatherRows(student, StretchBatchRows(batch_size, student_frames, frames));
  }
  if (teacher_frames < frames) {
    batch.teacher = GatherPlain(teacher, StretchBatchRows(batch_size, teacher_frames, frames));
  }
  return measure == MeasureKind::kCosDiff ? CosDiffLoss(batch) : DistanceCorrelationLoss(batch);
}

double RegularizationLoss(MeasureKind measure, std::span<const Matrix> student_maps,
                          std::span<const Matrix> teacher_sequences) {
  if (student_maps.size() != teacher_sequences.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "student and teacher batch sizes differ");
  }
  RequireBatch(student_maps.size());
  if (measure == MeasureKind::kDistanceCorrelation && student_maps.size() < 3) {
    Warn("distance correlation is identically 0 for batches of 2; use at least 3");
  }
  const std::size_t ts = student_maps.front().rows();
  const std::size_t tt = teacher_sequences.front().rows();
  for (std::size_t i = 0; i < student_maps.size(); ++i) {
    if (student_maps[i].rows() != ts || teacher_sequences[i].rows() != tt) {
      throw Error(ErrorCode::kRaggedBatch,
                  "clip " + std::to_string(i) + " has a different frame count");
    }
  }
  Tape tape;
  const Var student = tape.Constant(VStack(student_maps));
  return RegularizationLoss(measure, student, ts, VStack(teacher_sequences), tt,
                            student_maps.size())
      .scalar();
}

}  // namespace east

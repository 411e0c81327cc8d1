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

#ifndef EAST_LOSSES_H_
#define EAST_LOSSES_H_

#include <optional>
#include <string_view>
#include <vector>

#include "east/autodiff.h"
#include "east/matrix.h"

namespace east {

// n x K binary targets with a same-shaped observation mask (1 = observed).
struct LabelBatch {
  Matrix targets;
  Matrix mask;

  // Throws DimensionMismatch on shape disagreement and InvalidConfig on
  // non-binary entries.
  void Validate() const;
};

struct CompositeWeights {
  double lambda = 0.5;
  double alpha = 0.5;
  double temperature = 2.0;

  // Throws WeightOutOfRange.
  void Validate() const;
};

// The seven training systems.
enum class SystemKind {
  kBaseline,
  kTeacherLR,
  kKD,
  kEastCosDiff,
  kEastFinal,
  kEastAll,
  kEastKD,
};

std::string_view SystemName(SystemKind kind);
// Names as printed by SystemName(): baseline, teacher-lr, kd, east-cosdiff,
// east-final, east-all, east-kd.
SystemKind ParseSystem(std::string_view name);
bool UsesRegularizer(SystemKind kind);
bool UsesDistillation(SystemKind kind);

// Mean binary cross entropy over observed entries. Throws EmptyMask.
Var MaskedBce(Var logits, const LabelBatch& labels);

// temperature^2 * mean over observed entries of BCE(sigmoid(t / T), sigmoid(s / T)).
// teacher_logits are constants.
Var KdLoss(Var student_logits, const Matrix& teacher_logits, double temperature,
           const Matrix& mask);

// (1 - lambda) * pred + lambda * reg. Throws WeightOutOfRange.
Var CompositeLoss(Var pred, Var reg, double lambda);

// Loss components available for one batch. reg_by_stage is ordered from the
// first stage to the final one.
struct LossTerms {
  std::optional<Var> pred;
  std::optional<Var> kd;
  std::vector<Var> reg_by_stage;
};

// Combines the terms required by `system`:
//   Baseline          pred
//   KD                (1 - a) pred + a kd
//   EAsT Cos-Diff/Final  (1 - l) pred + l reg_final
//   EAsT All          (1 - l) pred + l mean(reg_by_stage)
//   EAsT KD           (1 - l) [(1 - a) pred + a kd] + l reg_final
// Throws MissingComponent when a required term is absent; Teacher_LR has no
// student loss and is rejected with InvalidConfig.
Var SystemLoss(SystemKind system, const CompositeWeights& weights, const LossTerms& terms);

}  // namespace east

#endif  // EAST_LOSSES_H_

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

#include "east/losses.h"

#include <string>

#include "east/errors.h"

namespace east {
namespace {

bool IsBinary(const Matrix& m) {
  for (double v : m.values()) {
    if (v != 0.0 && v != 1.0) return false;
  }
  return true;
}

void RequireUnitInterval(double value, const char* name) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw Error(ErrorCode::kWeightOutOfRange,
                std::string(name) + " must lie in [0, 1], got " + std::to_string(value));
  }
}

Var Require(const std::optional<Var>& term, const char* name, SystemKind system) {
  if (!term) {
    throw Error(ErrorCode::kMissingComponent, std::string(SystemName(system)) +
                                                  " requires the " + name + " term");
  }
  return *term;
}

Var FinalStage(const LossTerms& terms, SystemKind system) {
  if (terms.reg_by_stage.empty()) {
    throw Error(ErrorCode::kMissingComponent,
                std::string(SystemName(system)) + " requires a regularization term");
  }
  return terms.reg_by_stage.back();
}

Var Blend(Var a, Var b, double weight_b) {
  return ad::Add(ad::Scale(a, 1.0 - weight_b), ad::Scale(b, weight_b));
}

}  // namespace

void LabelBatch::Validate() const {
  if (!targets.SameShape(mask)) {
    throw Error(ErrorCode::kDimensionMismatch, "targets and mask shapes differ");
  }
  if (!IsBinary(targets) || !IsBinary(mask)) {
    throw Error(ErrorCode::kInvalidConfig, "targets and mask must be binary");
  }
}

void CompositeWeights::Validate() const {
  RequireUnitInterval(lambda, "lambda");
  RequireUnitInterval(alpha, "alpha");
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::kWeightOutOfRange, "temperature must be positive");
  }
}

std::string_view SystemName(SystemKind kind) {
  switch (kind) {
    case SystemKind::kBaseline: return "baseline";
    case SystemKind::kTeacherLR: return "teacher-lr";
    case SystemKind::kKD: return "kd";
    case SystemKind::kEastCosDiff: return "east-cosdiff";
    case SystemKind::kEastFinal: return "east-final";
    case SystemKind::kEastAll: return "east-all";
    case SystemKind::kEastKD: return "east-kd";
  }
  return "unknown";
}

SystemKind ParseSystem(std::string_view name) {
  for (SystemKind kind :
       {SystemKind::kBaseline, SystemKind::kTeacherLR, SystemKind::kKD, SystemKind::kEastCosDiff,
        SystemKind::kEastFinal, SystemKind::kEastAll, SystemKind::kEastKD}) {
    if (SystemName(kind) == name) return kind;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown system '" + std::string(name) + "'");
}

bool UsesRegularizer(SystemKind kind) {
  return kind == SystemKind::kEastCosDiff || kind == SystemKind::kEastFinal ||
         kind == SystemKind::kEastAll || kind == SystemKind::kEastKD;
}

bool UsesDistillation(SystemKind kind) {
  return kind == SystemKind::kKD || kind == SystemKind::kEastKD;
}

Var MaskedBce(Var logits, const LabelBatch& labels) {
  return ad::BceWithLogits(logits, labels.targets, labels.mask);
}

Var KdLoss(Var student_logits, const Matrix& teacher_logits, double temperature,
           const Matrix& mask) {
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::kWeightOutOfRange, "temperature must be positive");
  }
  if (!student_logits.value().SameShape(teacher_logits)) {
    throw Error(ErrorCode::kDimensionMismatch, "student and teacher logits differ in shape");
  }
  const double inv_t = 1.0 / temperature;
  // Same arithmetic as the student path so equal logits give equal probabilities.
  Matrix soft_targets = teacher_logits;
  for (double& v : soft_targets.values()) v = Sigmoid(inv_t * v + 0.0);
  const Var scaled = ad::Scale(student_logits, inv_t);
  return ad::Scale(ad::BceWithLogits(scaled, soft_targets, mask), temperature * temperature);
}

Var CompositeLoss(Var pred, Var reg, double lambda) {
  RequireUnitInterval(lambda, "lambda");
  return Blend(pred, reg, lambda);
}

Var SystemLoss(SystemKind system, const CompositeWeights& weights, const LossTerms& terms) {
  weights.Validate();
  switch (system) {
    case SystemKind::kBaseline:
      return Require(terms.pred, "prediction", system);
    case SystemKind::kTeacherLR:
      throw Error(ErrorCode::kInvalidConfig, "teacher-lr is trained on embeddings, not a student");
    case SystemKind::kKD:
      return Blend(Require(terms.pred, "prediction", system), Require(terms.kd, "kd", system),
                   weights.alpha);
    case SystemKind::kEastCosDiff:
    case SystemKind::kEastFinal:
      return CompositeLoss(Require(terms.pred, "prediction", system), FinalStage(terms, system),
                           weights.lambda);
    case SystemKind::kEastAll: {
      const Var pred = Require(terms.pred, "prediction", system);
      FinalStage(terms, system);
      Var total = terms.reg_by_stage.front();
      for (std::size_t s = 1; s < terms.reg_by_stage.size(); ++s) {
        total = ad::Add(total, terms.reg_by_stage[s]);
      }
      const Var mean = ad::Scale(total, 1.0 / static_cast<double>(terms.reg_by_stage.size()));
      return CompositeLoss(pred, mean, weights.lambda);
    }
    case SystemKind::kEastKD: {
      const Var distilled = Blend(Require(terms.pred, "prediction", system),
                                  Require(terms.kd, "kd", system), weights.alpha);
      return CompositeLoss(distilled, FinalStage(terms, system), weights.lambda);
    }
  }
  throw Error(ErrorCode::kInvalidConfig, "unhandled system");
}

}  // namespace east

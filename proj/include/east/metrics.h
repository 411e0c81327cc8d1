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

#ifndef EAST_METRICS_H_
#define EAST_METRICS_H_

// Multi-label evaluation: mean average precision, the positive/negative
// averaged macro F1 and ROC-AUC. Labels are 0/1 doubles.

#include <optional>
#include <span>
#include <vector>

#include "east/losses.h"
#include "east/matrix.h"

namespace east {

inline constexpr double kDefaultF1Threshold = 0.4;

// Uninterpolated AP: rank by descending score (ties by ascending index) and
// average precision@rank over the positives. Throws NoPositives.
double AveragePrecision(std::span<const double> scores, std::span<const double> labels);

// P(score of random positive > score of random negative), ties count 1/2.
// Throws SingleClass unless both classes are present.
double RocAuc(std::span<const double> scores, std::span<const double> labels);

// Per class: mean of F1 on the positive labels and F1 with polarity flipped,
// over observed entries, predicting positive when score > threshold. A zero
// denominator gives F1 = 0. Returns nullopt for a class with no observed
// entries.
std::optional<double> ClassF1(std::span<const double> scores, std::span<const double> labels,
                              std::span<const double> mask, double threshold);

struct ClassMetrics {
  std::optional<double> average_precision;
  std::optional<double> f1;
  std::optional<double> roc_auc;
};

struct MetricsReport {
  double mean_average_precision = 0.0;
  double macro_f1 = 0.0;
  double roc_auc = 0.0;
  // A class without the required observed labels is absent from the
  // corresponding aggregate.
  std::vector<ClassMetrics> per_class;
};

// Macro F1 over the classes (columns) of an n x K score matrix. Classes
// without observed entries are skipped with a warning.
double MacroF1(const Matrix& scores, const Matrix& labels, const Matrix& mask,
               double threshold = kDefaultF1Threshold);

// Full report on n x K probabilities, using observed entries only. Throws
// NoPositives if no class has an observed positive.
MetricsReport Evaluate(const Matrix& scores, const LabelBatch& labels,
                       double threshold = kDefaultF1Threshold);

}  // namespace east

#endif  // EAST_METRICS_H_

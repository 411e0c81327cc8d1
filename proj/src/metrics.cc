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

#include "east/metrics.h"

#include <algorithm>
#include <numeric>
#include <string>

#include "east/errors.h"

namespace east {
namespace {

void RequireSameLength(std::size_t a, std::size_t b) {
  if (a != b) throw Error(ErrorCode::kDimensionMismatch, "scores and labels differ in length");
}

double F1(std::size_t hits, std::size_t false_pos, std::size_t false_neg) {
  const std::size_t denominator = 2 * hits + false_pos + false_neg;
  return denominator == 0 ? 0.0 : 2.0 * static_cast<double>(hits) / static_cast<double>(denominator);
}

std::vector<double> Column(const Matrix& m, std::size_t k) {
  std::vector<double> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = m(i, k);
  return out;
}

double MeanOf(const std::vector<ClassMetrics>& per_class,
              std::optional<double> ClassMetrics::*field) {
  double total = 0.0;
  std::size_t count = 0;
  for (const ClassMetrics& c : per_class) {
    if (c.*field) {
      total += *(c.*field);
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

}  // namespace

double AveragePrecision(std::span<const double> scores, std::span<const double> labels) {
  RequireSameLength(scores.size(), labels.size());
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double precision_sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]] != 0.0) {
      ++hits;
      precision_sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  if (hits == 0) throw Error(ErrorCode::kNoPositives, "no positive labels");
  return precision_sum / static_cast<double>(hits);
}

double RocAuc(std::span<const double> scores, std::span<const double> labels) {
  RequireSameLength(scores.size(), labels.size());
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Mann-Whitney U from mid-ranks (1-based, ties share their average rank).
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t begin = 0; begin < order.size();) {
    std::size_t end = begin + 1;
    while (end < order.size() && scores[order[end]] == scores[order[begin]]) ++end;
    const double mid_rank = 0.5 * static_cast<double>(begin + 1 + end);
    for (std::size_t r = begin; r < end; ++r) {
      if (labels[order[r]] != 0.0) {
        positive_rank_sum += mid_rank;
        ++positives;
      }
    }
    begin = end;
  }
  const std::size_t negatives = order.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw Error(ErrorCode::kSingleClass, "ROC-AUC needs both positive and negative labels");
  }
  const double p = static_cast<double>(positives);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

std::optional<double> ClassF1(std::span<const double> scores, std::span<const double> labels,
                              std::span<const double> mask, double threshold) {
  RequireSameLength(scores.size(), labels.size());
  RequireSameLength(scores.size(), mask.size());
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "threshold must lie in (0, 1)");
  }
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0, observed = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (mask[i] == 0.0) continue;
    ++observed;
    const bool predicted = scores[i] > threshold;
    const bool actual = labels[i] != 0.0;
    if (predicted && actual) ++tp;
    else if (predicted) ++fp;
    else if (actual) ++fn;
    else ++tn;
  }
  if (observed == 0) return std::nullopt;
  // Flipping polarity swaps the roles of false positives and false negatives.
  return 0.5 * (F1(tp, fp, fn) + F1(tn, fn, fp));
}

double MacroF1(const Matrix& scores, const Matrix& labels, const Matrix& mask, double threshold) {
  if (!scores.SameShape(labels) || !scores.SameShape(mask)) {
    throw Error(ErrorCode::kDimensionMismatch, "scores, labels and mask must share a shape");
  }
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < scores.cols(); ++k) {
    const auto f1 = ClassF1(Column(scores, k), Column(labels, k), Column(mask, k), threshold);
    if (!f1) {
      Warn("class " + std::to_string(k) + " has no observed labels; skipped in macro F1");
      continue;
    }
    total += *f1;
    ++count;
  }
  if (count == 0) throw Error(ErrorCode::kEmptyMask, "no class has observed labels");
  return total / static_cast<double>(count);
}

MetricsReport Evaluate(const Matrix& scores, const LabelBatch& labels, double threshold) {
  labels.Validate();
  if (!scores.SameShape(labels.targets)) {
    throw Error(ErrorCode::kDimensionMismatch, "scores and labels differ in shape");
  }
  MetricsReport report;
  bool any_positive = false;
  for (std::size_t k = 0; k < scores.cols(); ++k) {
    std::vector<double> s, y;
    for (std::size_t i = 0; i < scores.rows(); ++i) {
      if (labels.mask(i, k) == 0.0) continue;
      s.push_back(scores(i, k));
      y.push_back(labels.targets(i, k));
    }
    ClassMetrics c;
    const std::size_t positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1.0));
    if (positives > 0) {
      c.average_precision = AveragePrecision(s, y);
      any_positive = true;
    }
    if (positives > 0 && positives < y.size()) c.roc_auc = RocAuc(s, y);
    if (!y.empty()) {
      const std::vector<double> ones(y.size(), 1.0);
      c.f1 = ClassF1(s, y, ones, threshold);
    }
    report.per_class.push_back(c);
  }
  if (!any_positive) throw Error(ErrorCode::kNoPositives, "no class has an observed positive");
  report.mean_average_precision = MeanOf(report.per_class, &ClassMetrics::average_precision);
  report.macro_f1 = MeanOf(report.per_class, &ClassMetrics::f1);
  report.roc_auc = MeanOf(report.per_class, &ClassMetrics::roc_auc);
  return report;
}

}  // namespace east

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

#ifndef EAST_TRAINER_H_
#define EAST_TRAINER_H_

// Deterministic mini-batch training for every system. The lambda search and
// the limited-training-data experiment are built on top of it.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "east/data.h"
#include "east/distance.h"
#include "east/losses.h"
#include "east/metrics.h"
#include "east/models.h"

namespace east {

struct SystemConfig {
  SystemKind system = SystemKind::kBaseline;
  CompositeWeights weights;
  MeasureKind measure = MeasureKind::kDistanceCorrelation;
  // Empty means DefaultStages(input channels).
  std::vector<StageSpec> stages;
  std::size_t epochs = 60;
  std::size_t batch_size = 16;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  TeacherFitOptions teacher_fit;

  // Applies variant rules (Cos-Diff always uses the cosine measure) and
  // validates ranges. Throws InvalidConfig / WeightOutOfRange.
  SystemConfig Normalized() const;
};

// Two framewise stages of width 32, each halving the frame rate.
std::vector<StageSpec> DefaultStages(std::size_t input_channels);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_map = 0.0;
};

struct TrainResult {
  SystemConfig config;
  StudentNet model;                  // empty for Teacher_LR
  std::optional<TeacherLR> teacher;  // set for Teacher_LR
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_map = 0.0;
  // Steps skipped because the regularizer was undefined on the batch.
  std::size_t skipped_batches = 0;
  MetricsReport test;
};

// Trains one system. KD and EAsT_KD need `teacher`; Teacher_LR fits its own
// head on the training embeddings. `test` may be empty, in which case the
// reported test metrics are those of the validation set.
// Errors: MissingComponent; DegenerateBatch (message carries epoch and batch).
TrainResult TrainSystem(const SystemConfig& config, const Dataset& train, const Dataset& val,
                        const Dataset& test, const TeacherLR* teacher = nullptr);

// Sigmoid probabilities of a student on every clip of `data`.
Matrix PredictProbabilities(const StudentNet& net, const Dataset& data);
Matrix PredictProbabilities(const TeacherLR& teacher, const Dataset& data);

struct SweepRow {
  double lambda = 0.0;
  double val_map = 0.0;
  double test_map = 0.0;
  std::size_t best_epoch = 0;
};

struct SweepResult {
  double best_lambda = 0.0;
  std::vector<SweepRow> rows;  // ascending lambda, duplicates removed
};

inline const std::vector<double> kDefaultLambdaGrid = {0.1, 0.2, 0.3, 0.4, 0.5,
                                                       0.6, 0.7, 0.8, 0.9};

// One run per distinct lambda; best = highest val mAP, ties to smaller lambda.
// Runs are independent and may execute on `threads` workers without changing
// the result.
SweepResult SweepLambda(const SystemConfig& base, std::span<const double> grid,
                        const Dataset& train, const Dataset& val, const Dataset& test,
                        const TeacherLR* teacher = nullptr, std::size_t threads = 1);

struct LimitedRow {
  SystemKind system = SystemKind::kBaseline;
  double fraction = 1.0;
  std::uint64_t seed = 0;
  double test_map = 0.0;
};

// The systems compared under reduced training data.
inline constexpr SystemKind kLimitedDataSystems[] = {
    SystemKind::kBaseline, SystemKind::kKD, SystemKind::kEastCosDiff, SystemKind::kEastFinal};

// For every fraction and seed: split `data` with `split` (seed and limit
// overridden), fit the KD teacher on the limited train set, then train the
// four systems with `base` hyper-parameters and the run seed. Rows are ordered
// by fraction, seed, system.
std::vector<LimitedRow> LimitedDataExperiment(const SystemConfig& base, const Dataset& data,
                                              const SplitSpec& split,
                                              std::span<const double> fractions,
                                              std::span<const std::uint64_t> seeds,
                                              std::size_t threads = 1);

// Worker count from EAST_THREADS (default 1).
std::size_t ThreadsFromEnvironment();

// TSV writers; metrics use 4 decimal places.
void WriteSweepTsv(std::ostream& out, const SweepResult& result);
void WriteLimitedTsv(std::ostream& out, std::span<const LimitedRow> rows);
// One JSON object per line: {"epoch":..,"train_loss":..,"val_mAP":..}.
void WriteHistory(std::ostream& out, std::span<const EpochRecord> history);
std::string FormatMetric(double value);

}  // namespace east

#endif  // EAST_TRAINER_H_

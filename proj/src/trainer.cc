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

#include "east/trainer.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "east/errors.h"
#include "east/random.h"

namespace east {
namespace {

constexpr std::uint64_t kInitStream = 10;
constexpr std::uint64_t kShuffleStream = 11;

// Runs fn(0..count-1) on up to `threads` workers. The first exception is
// rethrown after all workers finish.
template <typename Fn>
void RunIndexed(std::size_t count, std::size_t threads, Fn fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& worker : workers) worker.join();
  if (failure) std::rethrow_exception(failure);
}

std::size_t UniformFrames(const std::vector<Matrix>& seqs, std::span<const std::size_t> idx) {
  const std::size_t frames = seqs[idx.front()].rows();
  for (std::size_t i : idx) {
    if (seqs[i].rows() != frames) {
      throw Error(ErrorCode::kRaggedBatch, "clips in a batch differ in frame count");
    }
  }
  return frames;
}

struct StackedBatch {
  Matrix frames;
  std::size_t clip_frames = 0;
  Matrix teacher;
  std::size_t teacher_frames = 0;
};

StackedBatch Stack(const Dataset& data, std::span<const std::size_t> idx, bool with_teacher) {
  std::vector<Matrix> frames;
  frames.reserve(idx.size());
  for (std::size_t i : idx) frames.push_back(data.clips[i].frames);
  StackedBatch batch;
  std::vector<std::size_t> local(idx.size());
  std::iota(local.begin(), local.end(), std::size_t{0});
  batch.clip_frames = UniformFrames(frames, local);
  batch.frames = VStack(frames);
  if (with_teacher) {
    std::vector<Matrix> teacher;
    teacher.reserve(idx.size());
    for (std::size_t i : idx) teacher.push_back(data.teacher[i]);
    batch.teacher_frames = UniformFrames(teacher, local);
    batch.teacher = VStack(teacher);
  }
  return batch;
}

// Consecutive chunks of `size`; a trailing single clip joins the previous
// chunk so every batch has at least two clips.
std::vector<std::span<const std::size_t>> Chunk(std::span<const std::size_t> order,
                                                std::size_t size) {
  std::vector<std::span<const std::size_t>> chunks;
  for (std::size_t begin = 0; begin < order.size(); begin += size) {
    std::size_t end = std::min(order.size(), begin + size);
    if (order.size() - end == 1) end = order.size();
    chunks.push_back(order.subspan(begin, end - begin));
    if (end == order.size()) break;
  }
  return chunks;
}

bool HasObservedLabel(const LabelBatch& labels) {
  for (double v : labels.mask.values()) {
    if (v != 0.0) return true;
  }
  return false;
}

double ValidationMap(const Matrix& probabilities, const Dataset& data) {
  return Evaluate(probabilities, Labels(data)).mean_average_precision;
}

Matrix SigmoidAll(Matrix logits) {
  for (double& v : logits.values()) v = Sigmoid(v);
  return logits;
}

TrainResult TrainTeacherSystem(const SystemConfig& config, const Dataset& train,
                               const Dataset& val, const Dataset& test) {
  TrainResult result;
  result.config = config;
  result.teacher = TeacherFit(train.teacher, Labels(train), config.teacher_fit);
  result.best_epoch = config.teacher_fit.epochs;
  result.best_val_map = ValidationMap(PredictProbabilities(*result.teacher, val), val);
  const Dataset& eval = test.size() > 0 ? test : val;
  result.test = Evaluate(PredictProbabilities(*result.teacher, eval), Labels(eval));
  return result;
}

}  // namespace

std::vector<StageSpec> DefaultStages(std::size_t input_channels) {
  return {StageSpec{input_channels, 32, 2}, StageSpec{32, 32, 2}};
}

SystemConfig SystemConfig::Normalized() const {
  SystemConfig out = *this;
  if (out.system == SystemKind::kEastCosDiff) out.measure = MeasureKind::kCosDiff;
  out.weights.Validate();
  if (out.batch_size < 2) {
    throw Error(ErrorCode::kInvalidConfig, "batch size must be at least 2");
  }
  if (!(out.learning_rate > 0.0) || !(out.momentum >= 0.0 && out.momentum < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "learning rate must be > 0 and momentum in [0, 1)");
  }
  if (out.epochs == 0) throw Error(ErrorCode::kInvalidConfig, "epochs must be positive");
  if (UsesRegularizer(out.system) && out.measure == MeasureKind::kDistanceCorrelation &&
      out.batch_size < 3) {
    Warn("distance correlation with batches of 2 is always 0; use a batch size of at least 3");
  }
  return out;
}

Matrix PredictProbabilities(const StudentNet& net, const Dataset& data) {
  if (data.size() == 0) return Matrix(0, net.num_classes());
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const StackedBatch batch = Stack(data, all, false);
  Tape tape;
  const StudentOutputs out =
      StudentForward(tape, net, batch.frames, data.size(), batch.clip_frames, false);
  return SigmoidAll(out.logits.value());
}

Matrix PredictProbabilities(const TeacherLR& teacher, const Dataset& data) {
  Matrix logits(data.size(), teacher.weights.cols());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Matrix row = TeacherPredictLogits(teacher, data.teacher[i]);
    std::copy(row.values().begin(), row.values().end(), logits.row(i).begin());
  }
  return SigmoidAll(std::move(logits));
}

TrainResult TrainSystem(const SystemConfig& raw_config, const Dataset& train, const Dataset& val,
                        const Dataset& test, const TeacherLR* teacher) {
  const SystemConfig config = raw_config.Normalized();
  if (train.size() < 2) throw Error(ErrorCode::kEmptyDataset, "need at least 2 training clips");
  if (val.size() == 0) throw Error(ErrorCode::kEmptyDataset, "validation set is empty");
  if (config.system == SystemKind::kTeacherLR) {
    return TrainTeacherSystem(config, train, val, test);
  }
  const bool distill = UsesDistillation(config.system);
  const bool regularize = UsesRegularizer(config.system);
  if (distill && teacher == nullptr) {
    throw Error(ErrorCode::kMissingComponent,
                std::string(SystemName(config.system)) + " needs a fitted teacher model");
  }
  if (regularize && train.teacher.size() != train.size()) {
    throw Error(ErrorCode::kMissingComponent,
                std::string(SystemName(config.system)) + " needs teacher embeddings");
  }

  const std::vector<StageSpec> stages =
      config.stages.empty() ? DefaultStages(train.input_channels) : config.stages;
  StudentNet net = StudentNet::Initialize(train.input_channels, stages, train.num_classes,
                                          DeriveSeed(config.seed, kInitStream));
  Matrix teacher_logits;
  if (distill) {
    teacher_logits = Matrix(train.size(), train.num_classes);
    for (std::size_t i = 0; i < train.size(); ++i) {
      const Matrix row = TeacherPredictLogits(*teacher, train.teacher[i]);
      std::copy(row.values().begin(), row.values().end(), teacher_logits.row(i).begin());
    }
  }

  std::vector<Matrix> velocity;
  for (const Matrix* p : net.Parameters()) velocity.emplace_back(p->rows(), p->cols());

  TrainResult result;
  result.config = config;
  result.best_val_map = -1.0;
  StudentNet best = net;
  std::size_t stale_epochs = 0;
  Rng shuffle_rng(DeriveSeed(config.seed, kShuffleStream));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.Shuffle(std::span<std::size_t>(order));
    const auto batches = Chunk(order, config.batch_size);
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto idx = batches[b];
      const LabelBatch labels = Labels(train, idx);
      if (!HasObservedLabel(labels)) {
        Warn("skipping batch " + std::to_string(b) + " of epoch " + std::to_string(epoch) +
             ": no observed labels");
        continue;
      }
      const StackedBatch batch = Stack(train, idx, regularize);
      Tape tape;
      const StudentOutputs out =
          StudentForward(tape, net, batch.frames, idx.size(), batch.clip_frames, true);
      LossTerms terms;
      terms.pred = MaskedBce(out.logits, labels);
      if (distill) {
        Matrix batch_teacher(idx.size(), train.num_classes);
        for (std::size_t r = 0; r < idx.size(); ++r) {
          auto src = teacher_logits.row(idx[r]);
          std::copy(src.begin(), src.end(), batch_teacher.row(r).begin());
        }
        terms.kd = KdLoss(out.logits, batch_teacher, config.weights.temperature, labels.mask);
      }
      if (regularize) {
        // A collapsed batch or an all-zero tap row leaves the regularizer
        // undefined. The step is skipped rather than aborting the run.
        try {
          const std::size_t first =
              config.system == SystemKind::kEastAll ? 0 : out.taps.size() - 1;
          for (std::size_t s = first; s < out.taps.size(); ++s) {
            terms.reg_by_stage.push_back(RegularizationLoss(config.measure, out.taps[s],
                                                            out.tap_frames[s], batch.teacher,
                                                            batch.teacher_frames, idx.size()));
          }
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kDegenerateBatch && e.code() != ErrorCode::kZeroVector) {
            throw;
          }
          if (result.skipped_batches++ == 0) {
            Warn("skipping batch " + std::to_string(b) + " of epoch " + std::to_string(epoch) +
                 ": " + e.what());
          }
          continue;
        }
      }
      const Var loss = SystemLoss(config.system, config.weights, terms);
      tape.Backward(loss);
      loss_sum += loss.scalar();
      ++loss_count;

      const std::vector<Matrix*> params = net.Parameters();
      for (std::size_t p = 0; p < params.size(); ++p) {
        const Matrix& grad = out.parameters[p].grad();
        auto v = velocity[p].values();
        auto w = params[p]->values();
        auto g = grad.values();
        for (std::size_t i = 0; i < w.size(); ++i) {
          v[i] = config.momentum * v[i] + g[i];
          w[i] -= config.learning_rate * v[i];
        }
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_count == 0 ? 0.0 : loss_sum / static_cast<double>(loss_count);
    record.val_map = ValidationMap(PredictProbabilities(net, val), val);
    result.history.push_back(record);
    if (record.val_map > result.best_val_map) {
      result.best_val_map = record.val_map;
      result.best_epoch = epoch;
      best = net;
      stale_epochs = 0;
    } else if (config.patience > 0 && ++stale_epochs >= config.patience) {
      break;
    }
  }

  if (result.skipped_batches > 1) {
    Warn(std::to_string(result.skipped_batches) +
         " batches skipped in total because the regularizer was undefined");
  }
  result.model = std::move(best);
  const Dataset& eval = test.size() > 0 ? test : val;
  result.test = Evaluate(PredictProbabilities(result.model, eval), Labels(eval));
  return result;
}

SweepResult SweepLambda(const SystemConfig& base, std::span<const double> grid,
                        const Dataset& train, const Dataset& val, const Dataset& test,
                        const TeacherLR* teacher, std::size_t threads) {
  if (grid.empty()) throw Error(ErrorCode::kInvalidConfig, "lambda grid is empty");
  std::vector<double> lambdas(grid.begin(), grid.end());
  for (double l : lambdas) {
    if (!(l >= 0.0 && l <= 1.0)) {
      throw Error(ErrorCode::kWeightOutOfRange, "lambda " + std::to_string(l) + " outside [0, 1]");
    }
  }
  std::sort(lambdas.begin(), lambdas.end());
  lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());

  SweepResult result;
  result.rows.resize(lambdas.size());
  RunIndexed(lambdas.size(), threads, [&](std::size_t i) {
    SystemConfig config = base;
    config.weights.lambda = lambdas[i];
    const TrainResult run = TrainSystem(config, train, val, test, teacher);
    result.rows[i] = SweepRow{lambdas[i], run.best_val_map, run.test.mean_average_precision,
                              run.best_epoch};
  });
  double best_val = -1.0;
  for (const SweepRow& row : result.rows) {
    if (row.val_map > best_val) {
      best_val = row.val_map;
      result.best_lambda = row.lambda;
    }
  }
  return result;
}

std::vector<LimitedRow> LimitedDataExperiment(const SystemConfig& base, const Dataset& data,
                                              const SplitSpec& split,
                                              std::span<const double> fractions,
                                              std::span<const std::uint64_t> seeds,
                                              std::size_t threads) {
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) {
      throw Error(ErrorCode::kInvalidConfig, "fractions must lie in (0, 1]");
    }
  }
  constexpr std::size_t kSystems = std::size(kLimitedDataSystems);
  const std::size_t runs = fractions.size() * seeds.size();
  std::vector<LimitedRow> rows(runs * kSystems);
  RunIndexed(runs, threads, [&](std::size_t run) {
    const double fraction = fractions[run / seeds.size()];
    const std::uint64_t seed = seeds[run % seeds.size()];
    SplitSpec spec = split;
    spec.seed = seed;
    spec.limit_fraction = fraction;
    const SplitIndices parts = Split(data.size(), spec);
    const Dataset train = data.Subset(parts.train);
    const Dataset val = data.Subset(parts.val);
    const Dataset test = data.Subset(parts.test);
    const TeacherLR teacher = TeacherFit(train.teacher, Labels(train), base.teacher_fit);
    for (std::size_t s = 0; s < kSystems; ++s) {
      SystemConfig config = base;
      config.system = kLimitedDataSystems[s];
      config.seed = seed;
      const TrainResult result = TrainSystem(config, train, val, test, &teacher);
      rows[run * kSystems + s] =
          LimitedRow{config.system, fraction, seed, result.test.mean_average_precision};
    }
  });
  return rows;
}

std::size_t ThreadsFromEnvironment() {
  const char* raw = std::getenv("EAST_THREADS");
  if (raw == nullptr || *raw == '\0') return 1;
  char* end = nullptr;
  const unsigned long value = std::strtoul(raw, &end, 10);
  if (end == raw || *end != '\0' || value == 0) {
    throw Error(ErrorCode::kInvalidConfig, "EAST_THREADS must be a positive integer");
  }
  return static_cast<std::size_t>(value);
}

std::string FormatMetric(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.4f", value);
  return buffer;
}

void WriteSweepTsv(std::ostream& out, const SweepResult& result) {
  out << "lambda\tval_mAP\ttest_mAP\tbest_epoch\tselected\n";
  for (const SweepRow& row : result.rows) {
    char lambda[32];
    std::snprintf(lambda, sizeof(lambda), "%.4g", row.lambda);
    out << lambda << '\t' << FormatMetric(row.val_map) << '\t' << FormatMetric(row.test_map)
        << '\t' << row.best_epoch << '\t' << (row.lambda == result.best_lambda ? 1 : 0) << '\n';
  }
}

void WriteLimitedTsv(std::ostream& out, std::span<const LimitedRow> rows) {
  out << "system\tfraction\tseed\tmAP\n";
  for (const LimitedRow& row : rows) {
    char fraction[32];
    std::snprintf(fraction, sizeof(fraction), "%.2f", row.fraction);
    out << SystemName(row.system) << '\t' << fraction << '\t' << row.seed << '\t'
        << FormatMetric(row.test_map) << '\n';
  }
}

void WriteHistory(std::ostream& out, std::span<const EpochRecord> history) {
  char buffer[160];
  for (const EpochRecord& r : history) {
    std::snprintf(buffer, sizeof(buffer),
                  "{\"epoch\":%zu,\"train_loss\":%.17g,\"val_mAP\":%.17g}\n", r.epoch,
                  r.train_loss, r.val_map);
    out << buffer;
  }
}

}  // namespace east

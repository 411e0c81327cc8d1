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

#include "east/models.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "binary_io.h"
#include "east/errors.h"
#include "east/random.h"

namespace east {
namespace {

constexpr std::string_view kStudentMagic = "EASM";
constexpr std::string_view kTeacherMagic = "EASL";
constexpr std::uint32_t kTeacherVersion = 1;

std::size_t PooledFrames(std::size_t frames, std::size_t pool) { return (frames + pool - 1) / pool; }

void ValidateArchitecture(std::size_t input_channels, std::span<const StageSpec> stages,
                          std::size_t num_classes) {
  if (input_channels == 0 || num_classes == 0) {
    throw Error(ErrorCode::kInvalidConfig, "input channels and classes must be positive");
  }
  std::size_t channels = input_channels;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const StageSpec& spec = stages[s];
    if (spec.in_channels != channels) {
      throw Error(ErrorCode::kInvalidConfig, "stage " + std::to_string(s) + " expects " +
                                                 std::to_string(spec.in_channels) +
                                                 " channels but receives " +
                                                 std::to_string(channels));
    }
    if (spec.out_channels == 0 || spec.temporal_pool == 0) {
      throw Error(ErrorCode::kInvalidConfig,
                  "stage " + std::to_string(s) + " needs positive width and pooling");
    }
    channels = spec.out_channels;
  }
}

void FillUniform(Matrix& m, double bound, Rng& rng) {
  for (double& v : m.values()) v = rng.Uniform(-bound, bound);
}

void WriteMatrix(internal::ByteWriter& w, const Matrix& m) {
  for (double v : m.values()) w.F64(v);
}

void ReadMatrix(internal::ByteReader& r, Matrix& m) {
  for (double& v : m.values()) v = r.F64("parameters");
}

std::uint32_t CheckedU32(std::size_t v) {
  if (v > UINT32_MAX) throw Error(ErrorCode::kInvalidConfig, "value exceeds u32 range");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

StudentNet::StudentNet(std::size_t input_channels, std::vector<StageSpec> stages,
                       std::size_t num_classes)
    : input_channels_(input_channels), num_classes_(num_classes), stages_(std::move(stages)) {
  ValidateArchitecture(input_channels_, stages_, num_classes_);
  for (const StageSpec& spec : stages_) {
    stage_layers_.push_back(
        LinearLayer{Matrix(spec.in_channels, spec.out_channels), Matrix(1, spec.out_channels)});
  }
  head_ = LinearLayer{Matrix(final_channels(), num_classes_), Matrix(1, num_classes_)};
}

StudentNet StudentNet::Initialize(std::size_t input_channels, std::vector<StageSpec> stages,
                                  std::size_t num_classes, std::uint64_t seed) {
  StudentNet net(input_channels, std::move(stages), num_classes);
  Rng rng(seed);
  auto init = [&rng](LinearLayer& layer) {
    const double bound = std::sqrt(1.0 / static_cast<double>(layer.weight.rows()));
    FillUniform(layer.weight, bound, rng);
    FillUniform(layer.bias, bound, rng);
  };
  for (LinearLayer& layer : net.stage_layers_) init(layer);
  init(net.head_);
  return net;
}

std::size_t StudentNet::final_channels() const {
  return stages_.empty() ? input_channels_ : stages_.back().out_channels;
}

std::vector<Matrix*> StudentNet::Parameters() {
  std::vector<Matrix*> params;
  for (LinearLayer& layer : stage_layers_) {
    params.push_back(&layer.weight);
    params.push_back(&layer.bias);
  }
  params.push_back(&head_.weight);
  params.push_back(&head_.bias);
  return params;
}

std::vector<const Matrix*> StudentNet::Parameters() const {
  std::vector<const Matrix*> params;
  for (const LinearLayer& layer : stage_layers_) {
    params.push_back(&layer.weight);
    params.push_back(&layer.bias);
  }
  params.push_back(&head_.weight);
  params.push_back(&head_.bias);
  return params;
}

std::vector<std::size_t> StudentNet::TapFrames(std::size_t input_frames) const {
  std::vector<std::size_t> frames;
  std::size_t t = input_frames;
  for (const StageSpec& spec : stages_) {
    t = PooledFrames(t, spec.temporal_pool);
    frames.push_back(t);
  }
  return frames;
}

std::vector<StageSpec> ParseStages(const std::string& text) {
  std::vector<StageSpec> stages;
  std::stringstream list(text);
  std::string item;
  while (std::getline(list, item, ',')) {
    if (item.empty()) continue;
    StageSpec spec;
    unsigned long in = 0, out = 0, pool = 1;
    const int got = std::sscanf(item.c_str(), "%lu:%lu:%lu", &in, &out, &pool);
    if (got < 2) throw Error(ErrorCode::kInvalidConfig, "bad stage spec '" + item + "'");
    spec.in_channels = in;
    spec.out_channels = out;
    spec.temporal_pool = pool;
    stages.push_back(spec);
  }
  return stages;
}

std::string FormatStages(std::span<const StageSpec> stages) {
  std::string out;
  for (const StageSpec& s : stages) {
    if (!out.empty()) out += ',';
    out += std::to_string(s.in_channels) + ':' + std::to_string(s.out_channels) + ':' +
           std::to_string(s.temporal_pool);
  }
  return out;
}

StudentOutputs StudentForward(Tape& tape, const StudentNet& net, const Matrix& input,
                              std::size_t batch_size, std::size_t frames, bool trainable) {
  if (input.cols() != net.input_channels()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "input has " + std::to_string(input.cols()) + " channels, net expects " +
                    std::to_string(net.input_channels()));
  }
  if (batch_size == 0 || frames == 0 || input.rows() != batch_size * frames) {
    throw Error(ErrorCode::kDimensionMismatch, "input rows do not match batch layout");
  }
  StudentOutputs out;
  for (const Matrix* p : net.Parameters()) {
    out.parameters.push_back(trainable ? tape.Variable(*p) : tape.Constant(*p));
  }
  Var x = tape.Constant(input);
  std::size_t t = frames;
  for (std::size_t s = 0; s < net.stages().size(); ++s) {
    const Var weight = out.parameters[2 * s];
    const Var bias = out.parameters[2 * s + 1];
    Var h = ad::Relu(ad::AddRowBroadcast(ad::MatMul(x, weight), bias));
    const std::size_t pool = net.stages()[s].temporal_pool;
    if (pool > 1) h = ad::SegmentMeanPool(h, batch_size, t, pool);
    t = PooledFrames(t, pool);
    out.taps.push_back(h);
    out.tap_frames.push_back(t);
    x = h;
  }
  const Var pooled = ad::SegmentMean(x, batch_size, t);
  const std::size_t head = 2 * net.stages().size();
  out.logits = ad::AddRowBroadcast(ad::MatMul(pooled, out.parameters[head]),
                                   out.parameters[head + 1]);
  return out;
}

ClipPrediction StudentForward(const StudentNet& net, const Matrix& input) {
  Tape tape;
  StudentOutputs outputs = StudentForward(tape, net, input, 1, input.rows(), false);
  ClipPrediction prediction{outputs.logits.value(), {}};
  for (const Var& tap : outputs.taps) prediction.taps.push_back(tap.value());
  return prediction;
}

std::size_t ParamCount(const StudentNet& net, bool include_head) {
  std::size_t total = 0;
  for (const LinearLayer& layer : net.stage_layers()) {
    total += layer.weight.size() + layer.bias.size();
  }
  if (include_head) total += net.head().weight.size() + net.head().bias.size();
  return total;
}

double ThroughputBench(const StudentNet& net, std::size_t frames, std::size_t channels,
                       double seconds) {
  if (!(seconds > 0.0)) throw Error(ErrorCode::kInvalidConfig, "seconds must be positive");
  if (channels != net.input_channels()) {
    throw Error(ErrorCode::kDimensionMismatch, "benchmark channels differ from the net input");
  }
  Rng rng(0);
  Matrix input(frames, channels);
  for (double& v : input.values()) v = rng.Normal();

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  std::size_t iterations = 0;
  double elapsed = 0.0;
  do {
    ClipPrediction p = StudentForward(net, input);
    if (!std::isfinite(p.logits(0, 0))) {
      throw Error(ErrorCode::kNonFiniteValue, "benchmark produced non-finite logits");
    }
    ++iterations;
    elapsed = std::chrono::duration<double>(Clock::now() - start).count();
  } while (elapsed < seconds);
  return static_cast<double>(iterations) / elapsed;
}

void WriteComplexityTable(std::ostream& out, std::span<const ComplexityRow> rows) {
  out << "model\tParameters (M)\tIteration / s\n";
  char buffer[64];
  for (const ComplexityRow& row : rows) {
    std::snprintf(buffer, sizeof(buffer), "%.2f\t%.1f",
                  static_cast<double>(row.parameters) / 1e6, row.iterations_per_second);
    out << row.model << '\t' << buffer << '\n';
  }
}

std::string SerializeStudent(const StudentNet& net) {
  internal::ByteWriter w;
  w.Bytes(kStudentMagic);
  w.U32(kCheckpointVersion);
  w.U32(CheckedU32(net.input_channels()));
  w.U32(CheckedU32(net.stages().size()));
  for (const StageSpec& s : net.stages()) {
    w.U32(CheckedU32(s.in_channels));
    w.U32(CheckedU32(s.out_channels));
    w.U32(CheckedU32(s.temporal_pool));
  }
  w.U32(CheckedU32(net.num_classes()));
  for (const Matrix* p : net.Parameters()) WriteMatrix(w, *p);
  return w.Release();
}

StudentNet DeserializeStudent(std::string_view bytes) {
  internal::ByteReader r(bytes);
  if (r.Bytes(4, "magic") != kStudentMagic) throw FormatError(0, "not a student checkpoint");
  const std::uint64_t version_offset = r.offset();
  const std::uint32_t version = r.U32("version");
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kVersionMismatch, "checkpoint version " + std::to_string(version) +
                                                 " at offset " +
                                                 std::to_string(version_offset));
  }
  const std::size_t input_channels = r.U32("input channels");
  const std::size_t stage_count = r.U32("stage count");
  r.Need(stage_count * 12, "stage descriptors");
  std::vector<StageSpec> stages(stage_count);
  for (StageSpec& s : stages) {
    s.in_channels = r.U32("stage in");
    s.out_channels = r.U32("stage out");
    s.temporal_pool = r.U32("stage pool");
  }
  const std::uint64_t arch_end = r.offset();
  const std::size_t classes = r.U32("classes");
  StudentNet net;
  try {
    net = StudentNet(input_channels, std::move(stages), classes);
  } catch (const Error& e) {
    throw FormatError(arch_end, std::string("invalid architecture: ") + e.what());
  }
  r.Need(ParamCount(net, true) * 8, "parameters");
  for (Matrix* p : net.Parameters()) ReadMatrix(r, *p);
  if (!r.AtEnd()) throw FormatError(r.offset(), "trailing bytes after parameters");
  return net;
}

void SaveStudent(const StudentNet& net, const std::string& path) {
  internal::WriteFileBytes(path, SerializeStudent(net));
}

StudentNet LoadStudent(const std::string& path) {
  return DeserializeStudent(internal::ReadFileBytes(path));
}

Matrix TimeMeans(std::span<const Matrix> sequences) {
  if (sequences.empty()) throw Error(ErrorCode::kEmptyDataset, "no sequences");
  const std::size_t channels = sequences.front().cols();
  Matrix out(sequences.size(), channels);
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const Matrix& seq = sequences[i];
    if (seq.cols() != channels || seq.rows() == 0) {
      throw Error(ErrorCode::kDimensionMismatch, "sequence " + std::to_string(i) +
                                                     " has an unexpected shape");
    }
    auto dst = out.row(i);
    for (std::size_t t = 0; t < seq.rows(); ++t) {
      auto src = seq.row(t);
      for (std::size_t c = 0; c < channels; ++c) dst[c] += src[c];
    }
    const double inv = 1.0 / static_cast<double>(seq.rows());
    for (double& v : dst) v *= inv;
  }
  return out;
}

TeacherLR TeacherFit(std::span<const Matrix> embeddings, const LabelBatch& labels,
                     const TeacherFitOptions& options) {
  if (embeddings.empty()) throw Error(ErrorCode::kEmptyDataset, "no training embeddings");
  labels.Validate();
  if (labels.targets.rows() != embeddings.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one label row per embedding is required");
  }
  const Matrix features = TimeMeans(embeddings);
  const std::size_t classes = labels.targets.cols();
  TeacherLR teacher{Matrix(features.cols(), classes), Matrix(1, classes)};
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    Tape tape;
    const Var w = tape.Variable(teacher.weights);
    const Var b = tape.Variable(teacher.bias);
    const Var logits = ad::AddRowBroadcast(ad::MatMul(tape.Constant(features), w), b);
    const Var loss = MaskedBce(logits, labels);
    tape.Backward(loss);
    teacher.weights = Sub(teacher.weights, Scale(w.grad(), options.learning_rate));
    teacher.bias = Sub(teacher.bias, Scale(b.grad(), options.learning_rate));
  }
  // An epoch count of zero still has to reject an empty mask.
  if (options.epochs == 0) {
    Tape tape;
    MaskedBce(tape.Constant(Matrix(features.rows(), classes)), labels);
  }
  return teacher;
}

Matrix TeacherPredictLogits(const TeacherLR& teacher, const Matrix& embedding) {
  if (embedding.cols() != teacher.weights.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "embedding has " +
                                                   std::to_string(embedding.cols()) +
                                                   " channels, teacher expects " +
                                                   std::to_string(teacher.weights.rows()));
  }
  const Matrix mean = TimeMeans(std::span<const Matrix>(&embedding, 1));
  return Add(MatMul(mean, teacher.weights), teacher.bias);
}

std::string SerializeTeacher(const TeacherLR& teacher) {
  internal::ByteWriter w;
  w.Bytes(kTeacherMagic);
  w.U32(kTeacherVersion);
  w.U32(CheckedU32(teacher.weights.rows()));
  w.U32(CheckedU32(teacher.weights.cols()));
  WriteMatrix(w, teacher.weights);
  WriteMatrix(w, teacher.bias);
  return w.Release();
}

TeacherLR DeserializeTeacher(std::string_view bytes) {
  internal::ByteReader r(bytes);
  if (r.Bytes(4, "magic") != kTeacherMagic) throw FormatError(0, "not a teacher file");
  const std::uint32_t version = r.U32("version");
  if (version != kTeacherVersion) {
    throw Error(ErrorCode::kVersionMismatch, "teacher version " + std::to_string(version));
  }
  const std::size_t channels = r.U32("channels");
  const std::size_t classes = r.U32("classes");
  r.Need((channels + 1) * classes * 8, "parameters");
  TeacherLR teacher{Matrix(channels, classes), Matrix(1, classes)};
  ReadMatrix(r, teacher.weights);
  ReadMatrix(r, teacher.bias);
  if (!r.AtEnd()) throw FormatError(r.offset(), "trailing bytes after parameters");
  return teacher;
}

void SaveTeacher(const TeacherLR& teacher, const std::string& path) {
  internal::WriteFileBytes(path, SerializeTeacher(teacher));
}

TeacherLR LoadTeacher(const std::string& path) {
  return DeserializeTeacher(internal::ReadFileBytes(path));
}

}  // namespace east

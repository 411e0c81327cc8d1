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

#ifndef EAST_MODELS_H_
#define EAST_MODELS_H_

// Stage-tapped student networks, the logistic-regression teacher head and
// complexity accounting.
//
// A student is a stack of framewise linear + ReLU stages, each followed by
// mean pooling over time. Every stage output is exposed as a tap so that
// embedding regularization can be attached to the final stage or to all of
// them. Logits come from a linear head on the time-averaged final tap.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "east/autodiff.h"
#include "east/losses.h"
#include "east/matrix.h"

namespace east {

struct StageSpec {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t temporal_pool = 1;

  friend bool operator==(const StageSpec&, const StageSpec&) = default;
};

// y = x W + b with W stored in_features x out_features and b as 1 x out.
struct LinearLayer {
  Matrix weight;
  Matrix bias;

  friend bool operator==(const LinearLayer&, const LinearLayer&) = default;
};

class StudentNet {
 public:
  StudentNet() = default;
  // All parameters zero. Throws InvalidConfig on inconsistent channel chains
  // or a zero pooling factor.
  StudentNet(std::size_t input_channels, std::vector<StageSpec> stages, std::size_t num_classes);

  // Fan-in uniform init U(-sqrt(1/C_in), sqrt(1/C_in)) for weights and biases.
  static StudentNet Initialize(std::size_t input_channels, std::vector<StageSpec> stages,
                               std::size_t num_classes, std::uint64_t seed);

  std::size_t input_channels() const { return input_channels_; }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t final_channels() const;
  const std::vector<StageSpec>& stages() const { return stages_; }

  std::vector<LinearLayer>& stage_layers() { return stage_layers_; }
  const std::vector<LinearLayer>& stage_layers() const { return stage_layers_; }
  LinearLayer& head() { return head_; }
  const LinearLayer& head() const { return head_; }

  // Stage weights and biases in declaration order, then the head.
  std::vector<Matrix*> Parameters();
  std::vector<const Matrix*> Parameters() const;

  // Frame count of each tap for an input of `input_frames` frames.
  std::vector<std::size_t> TapFrames(std::size_t input_frames) const;

  friend bool operator==(const StudentNet&, const StudentNet&) = default;

 private:
  std::size_t input_channels_ = 0;
  std::size_t num_classes_ = 0;
  std::vector<StageSpec> stages_;
  std::vector<LinearLayer> stage_layers_;
  LinearLayer head_;
};

// Parses "16:32:2,32:32:2" as in:out:pool stage triples (pool optional).
std::vector<StageSpec> ParseStages(const std::string& text);
std::string FormatStages(std::span<const StageSpec> stages);

struct StudentOutputs {
  Var logits;                          // batch_size x K
  std::vector<Var> taps;               // stage s: (batch_size * tap_frames[s]) x C_s
  std::vector<std::size_t> tap_frames;
  std::vector<Var> parameters;         // same order as StudentNet::Parameters()
};

// Batched forward pass on `input`, which stacks batch_size clips of `frames`
// rows each. Parameters enter the tape as Variables when `trainable`, else as
// constants. Throws DimensionMismatch on channel or layout disagreement.
StudentOutputs StudentForward(Tape& tape, const StudentNet& net, const Matrix& input,
                              std::size_t batch_size, std::size_t frames, bool trainable);

struct ClipPrediction {
  Matrix logits;              // 1 x K
  std::vector<Matrix> taps;   // frames x channels per stage
};

// Single-clip inference on a T x C_in input.
ClipPrediction StudentForward(const StudentNet& net, const Matrix& input);

// Number of scalar parameters in the stages, plus the head when requested.
std::size_t ParamCount(const StudentNet& net, bool include_head);

// Forward passes per second on a synthetic frames x channels input, measured
// for at least `seconds` of wall time.
double ThroughputBench(const StudentNet& net, std::size_t frames = 1000,
                       std::size_t channels = 128, double seconds = 1.0);

struct ComplexityRow {
  std::string model;
  std::size_t parameters = 0;  // backbone only
  double iterations_per_second = 0.0;
};

// TSV with header "model\tParameters (M)\tIteration / s"; parameters in
// millions to 2 decimals, rate to 1 decimal.
void WriteComplexityTable(std::ostream& out, std::span<const ComplexityRow> rows);

// Student checkpoint: magic "EASM", version u32, architecture descriptor
// (input channels, stage count, per stage in/out/pool, classes; all u32) and
// the parameters as little-endian f64 in declaration order.
inline constexpr std::uint32_t kCheckpointVersion = 1;
std::string SerializeStudent(const StudentNet& net);
StudentNet DeserializeStudent(std::string_view bytes);
void SaveStudent(const StudentNet& net, const std::string& path);
StudentNet LoadStudent(const std::string& path);

// Logistic regression on time-averaged teacher embeddings.
struct TeacherLR {
  Matrix weights;  // C_t x K
  Matrix bias;     // 1 x K

  friend bool operator==(const TeacherLR&, const TeacherLR&) = default;
};

struct TeacherFitOptions {
  std::size_t epochs = 500;
  double learning_rate = 0.1;
};

// Full-batch gradient descent on masked BCE from zero initialization.
// labels has one row per embedding sequence. Throws EmptyDataset or EmptyMask.
TeacherLR TeacherFit(std::span<const Matrix> embeddings, const LabelBatch& labels,
                     const TeacherFitOptions& options = {});

// weights^T * time_mean(embedding) + bias, as a 1 x K row.
Matrix TeacherPredictLogits(const TeacherLR& teacher, const Matrix& embedding);

// Time mean of each sequence stacked into an n x C_t matrix.
Matrix TimeMeans(std::span<const Matrix> sequences);

// Teacher head file: magic "EASL", version u32, C_t u32, K u32, then weights
// and bias as little-endian f64.
std::string SerializeTeacher(const TeacherLR& teacher);
TeacherLR DeserializeTeacher(std::string_view bytes);
void SaveTeacher(const TeacherLR& teacher, const std::string& path);
TeacherLR LoadTeacher(const std::string& path);

}  // namespace east

#endif  // EAST_MODELS_H_

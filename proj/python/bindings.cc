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

// Python bindings. Matrices cross the boundary as 2-D float64 NumPy arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "east/autodiff.h"
#include "east/data.h"
#include "east/distance.h"
#include "east/errors.h"
#include "east/losses.h"
#include "east/metrics.h"
#include "east/models.h"
#include "east/trainer.h"

namespace py = pybind11;

namespace east {
namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix ToMatrix(const Array& array) {
  if (array.ndim() == 1) {
    // A 1-D array is one row.
    return Matrix(1, array.shape(0), std::vector<double>(array.data(), array.data() + array.size()));
  }
  if (array.ndim() != 2) throw Error(ErrorCode::kDimensionMismatch, "expected a 2-D array");
  return Matrix(array.shape(0), array.shape(1),
                std::vector<double>(array.data(), array.data() + array.size()));
}

Array ToArray(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

std::vector<Matrix> ToMatrices(const std::vector<Array>& arrays) {
  std::vector<Matrix> out;
  out.reserve(arrays.size());
  for (const Array& a : arrays) out.push_back(ToMatrix(a));
  return out;
}

std::vector<double> ToVector(const Array& array) {
  return std::vector<double>(array.data(), array.data() + array.size());
}

// Loss value and its gradient with respect to each student clip.
py::tuple RegularizationWithGrad(const std::string& measure, const std::vector<Array>& student,
                                 const std::vector<Array>& teacher) {
  const std::vector<Matrix> s = ToMatrices(student);
  const std::vector<Matrix> t = ToMatrices(teacher);
  if (s.empty() || s.size() != t.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "student and teacher batches differ in size");
  }
  const std::size_t sf = s.front().rows(), tf = t.front().rows();
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i].rows() != sf || t[i].rows() != tf) {
      throw Error(ErrorCode::kRaggedBatch, "clips in a batch differ in frame count");
    }
  }
  Tape tape;
  const Var x = tape.Variable(VStack(s));
  const Var loss = RegularizationLoss(ParseMeasure(measure), x, sf, VStack(t), tf, s.size());
  tape.Backward(loss);
  py::list grads;
  for (std::size_t i = 0; i < s.size(); ++i) {
    grads.append(ToArray(SliceRows(x.grad(), i * sf, (i + 1) * sf)));
  }
  return py::make_tuple(loss.scalar(), grads);
}

py::tuple MaskedBceWithGrad(const Array& logits, const Array& targets, const Array& mask) {
  Tape tape;
  const Var z = tape.Variable(ToMatrix(logits));
  const Var loss = MaskedBce(z, LabelBatch{ToMatrix(targets), ToMatrix(mask)});
  tape.Backward(loss);
  return py::make_tuple(loss.scalar(), ToArray(z.grad()));
}

py::tuple KdWithGrad(const Array& student, const Array& teacher, double temperature,
                     const Array& mask) {
  Tape tape;
  const Var s = tape.Variable(ToMatrix(student));
  const Var loss = KdLoss(s, ToMatrix(teacher), temperature, ToMatrix(mask));
  tape.Backward(loss);
  return py::make_tuple(loss.scalar(), ToArray(s.grad()));
}

py::dict ReportDict(const MetricsReport& r) {
  py::list per_class;
  for (const ClassMetrics& c : r.per_class) {
    per_class.append(py::dict(py::arg("ap") = c.average_precision, py::arg("f1") = c.f1,
                              py::arg("roc_auc") = c.roc_auc));
  }
  return py::dict(py::arg("mAP") = r.mean_average_precision, py::arg("macro_f1") = r.macro_f1,
                  py::arg("roc_auc") = r.roc_auc, py::arg("per_class") = per_class);
}

SystemConfig MakeConfig(const std::string& system, double lambda, double alpha,
                        double temperature, const std::string& measure,
                        const std::string& stages, std::size_t epochs, std::size_t batch_size,
                        double learning_rate, double momentum, std::size_t patience,
                        std::uint64_t seed) {
  SystemConfig c;
  c.system = ParseSystem(system);
  c.weights = {lambda, alpha, temperature};
  c.measure = ParseMeasure(measure);
  if (!stages.empty()) c.stages = ParseStages(stages);
  c.epochs = epochs;
  c.batch_size = batch_size;
  c.learning_rate = learning_rate;
  c.momentum = momentum;
  c.patience = patience;
  c.seed = seed;
  return c;
}

struct Splits {
  Dataset train, val, test;
};

Splits SplitDataset(const Dataset& data, std::uint64_t seed, double limit_fraction) {
  SplitSpec spec;
  spec.seed = seed;
  spec.limit_fraction = limit_fraction;
  const SplitIndices parts = Split(data.size(), spec);
  return {data.Subset(parts.train), data.Subset(parts.val), data.Subset(parts.test)};
}

py::dict ResultDict(const TrainResult& r) {
  py::list history;
  for (const EpochRecord& e : r.history) {
    history.append(py::dict(py::arg("epoch") = e.epoch, py::arg("train_loss") = e.train_loss,
                            py::arg("val_mAP") = e.val_map));
  }
  py::dict out(py::arg("system") = std::string(SystemName(r.config.system)),
               py::arg("history") = history, py::arg("best_epoch") = r.best_epoch,
               py::arg("best_val_mAP") = r.best_val_map,
               py::arg("skipped_batches") = r.skipped_batches,
               py::arg("test") = ReportDict(r.test));
  if (r.teacher) {
    out["teacher"] = py::bytes(SerializeTeacher(*r.teacher));
  } else {
    out["checkpoint"] = py::bytes(SerializeStudent(r.model));
  }
  return out;
}

#define EAST_TRAIN_ARGS                                                                   \
  py::arg("system") = "baseline", py::arg("lam") = 0.5, py::arg("alpha") = 0.5,           \
  py::arg("temperature") = 2.0, py::arg("measure") = "dcor", py::arg("stages") = "",     \
  py::arg("epochs") = 60, py::arg("batch_size") = 16, py::arg("learning_rate") = 0.05,   \
  py::arg("momentum") = 0.9, py::arg("patience") = 10, py::arg("seed") = 0

}  // namespace
}  // namespace east

PYBIND11_MODULE(_east, m) {
  using namespace east;
  m.doc() = "Feature-space distillation with pre-trained embeddings as teachers";

  // The module attributes keep both exception types alive, so raw pointers are
  // enough here and nothing has to be torn down at interpreter exit.
  static PyObject* error = py::exception<Error>(m, "EastError", PyExc_RuntimeError).ptr();
  static PyObject* format_error = py::exception<FormatError>(m, "FormatError", error).ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const FormatError& e) {
      PyErr_SetString(format_error, e.what());
    } catch (const Error& e) {
      PyErr_SetString(error, e.what());
    }
  });

  // Distance measures.
  m.def("cosine_distance",
        [](const Array& u, const Array& w) { return CosineDistance(ToVector(u), ToVector(w)); },
        py::arg("u"), py::arg("w"));
  m.def("pairwise_euclidean", [](const Array& x) { return ToArray(PairwiseEuclidean(ToMatrix(x))); },
        py::arg("x"));
  m.def("double_center", [](const Array& a) { return ToArray(DoubleCenter(ToMatrix(a))); },
        py::arg("a"));
  m.def("distance_covariance_sq",
        [](const Array& a, const Array& b) {
          return DistanceCovarianceSq(ToMatrix(a), ToMatrix(b));
        },
        py::arg("a"), py::arg("b"));
  m.def("align_time",
        [](const Array& s, const Array& t) {
          const auto [a, b] = AlignTime(ToMatrix(s), ToMatrix(t));
          return py::make_tuple(ToArray(a), ToArray(b));
        },
        py::arg("student"), py::arg("teacher"));
  m.def("regularization_loss",
        [](const std::string& measure, const std::vector<Array>& s, const std::vector<Array>& t) {
          return RegularizationLoss(ParseMeasure(measure), ToMatrices(s), ToMatrices(t));
        },
        py::arg("measure"), py::arg("student_maps"), py::arg("teacher_sequences"),
        "Regularizer over a batch of per-clip (frames x channels) arrays.");
  m.def("regularization_loss_and_grad", &RegularizationWithGrad, py::arg("measure"),
        py::arg("student_maps"), py::arg("teacher_sequences"),
        "Regularizer value and its gradient with respect to each student clip.");

  // Losses.
  m.def("masked_bce", &MaskedBceWithGrad, py::arg("logits"), py::arg("targets"), py::arg("mask"),
        "Masked BCE with logits; returns (loss, gradient).");
  m.def("kd_loss", &KdWithGrad, py::arg("student_logits"), py::arg("teacher_logits"),
        py::arg("temperature"), py::arg("mask"),
        "Temperature-scaled sigmoid distillation loss; returns (loss, gradient).");

  // Metrics.
  m.def("average_precision",
        [](const Array& s, const Array& l) { return AveragePrecision(ToVector(s), ToVector(l)); },
        py::arg("scores"), py::arg("labels"));
  m.def("roc_auc", [](const Array& s, const Array& l) { return RocAuc(ToVector(s), ToVector(l)); },
        py::arg("scores"), py::arg("labels"));
  m.def("evaluate",
        [](const Array& scores, const Array& targets, const Array& mask, double threshold) {
          return ReportDict(
              Evaluate(ToMatrix(scores), LabelBatch{ToMatrix(targets), ToMatrix(mask)}, threshold));
        },
        py::arg("scores"), py::arg("targets"), py::arg("mask"),
        py::arg("threshold") = kDefaultF1Threshold);

  // Data.
  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("num_clips", &Dataset::size)
      .def_readonly("num_classes", &Dataset::num_classes)
      .def_readonly("input_channels", &Dataset::input_channels)
      .def_readonly("teacher_channels", &Dataset::teacher_channels)
      .def("__len__", &Dataset::size)
      .def("frames", [](const Dataset& d, std::size_t i) { return ToArray(d.clips.at(i).frames); })
      .def("teacher", [](const Dataset& d, std::size_t i) { return ToArray(d.teacher.at(i)); })
      .def("labels",
           [](const Dataset& d) {
             const LabelBatch l = Labels(d);
             return py::make_tuple(ToArray(l.targets), ToArray(l.mask));
           })
      .def("to_bytes", [](const Dataset& d) { return py::bytes(SerializeContainer(d)); })
      .def_static("from_bytes",
                  [](const py::bytes& b) { return DeserializeContainer(std::string(b)); })
      .def("save", [](const Dataset& d, const std::string& path) { WriteContainer(path, d); })
      .def_static("load", &ReadContainer)
      .def("__eq__", [](const Dataset& a, const Dataset& b) { return a == b; });

  m.def("generate",
        [](std::size_t clips, std::size_t classes, std::size_t latent_dim, std::size_t frames,
           std::size_t input_channels, std::size_t teacher_dim, std::size_t teacher_frames,
           double teacher_noise, double frame_noise, double mixing_scale, double observe_prob,
           std::uint64_t seed) {
          return Generate(SynthConfig{clips, classes, latent_dim, frames, input_channels,
                                      teacher_dim, teacher_frames, teacher_noise, frame_noise,
                                      mixing_scale, observe_prob, seed});
        },
        py::arg("clips") = 2000, py::arg("classes") = 10, py::arg("latent_dim") = 16,
        py::arg("frames") = 8, py::arg("input_channels") = 256, py::arg("teacher_dim") = 16,
        py::arg("teacher_frames") = 2, py::arg("teacher_noise") = 0.0,
        py::arg("frame_noise") = 0.3, py::arg("mixing_scale") = 0.05,
        py::arg("observe_prob") = 0.9, py::arg("seed") = 0);
  m.def("split",
        [](std::size_t n, std::uint64_t seed, double limit_fraction) {
          SplitSpec spec;
          spec.seed = seed;
          spec.limit_fraction = limit_fraction;
          const SplitIndices s = Split(n, spec);
          return py::make_tuple(s.train, s.val, s.test);
        },
        py::arg("num_clips"), py::arg("seed") = 0, py::arg("limit_fraction") = 1.0);

  // Training.
  m.def("train",
        [](const Dataset& data, const std::string& system, double lambda, double alpha,
           double temperature, const std::string& measure, const std::string& stages,
           std::size_t epochs, std::size_t batch_size, double learning_rate, double momentum,
           std::size_t patience, std::uint64_t seed, std::optional<py::bytes> teacher) {
          const SystemConfig c = MakeConfig(system, lambda, alpha, temperature, measure, stages,
                                            epochs, batch_size, learning_rate, momentum,
                                            patience, seed);
          const Splits s = SplitDataset(data, seed, 1.0);
          std::optional<TeacherLR> t;
          if (teacher) t = DeserializeTeacher(std::string(*teacher));
          TrainResult r;
          {
            py::gil_scoped_release release;
            r = TrainSystem(c, s.train, s.val, s.test, t ? &*t : nullptr);
          }
          return ResultDict(r);
        },
        py::arg("data"), EAST_TRAIN_ARGS, py::arg("teacher") = py::none(),
        "Split `data` with `seed`, train one system and evaluate it on the test split.");
  m.def("sweep_lambda",
        [](const Dataset& data, const std::vector<double>& grid, const std::string& system,
           double lambda, double alpha, double temperature, const std::string& measure,
           const std::string& stages, std::size_t epochs, std::size_t batch_size,
           double learning_rate, double momentum, std::size_t patience, std::uint64_t seed,
           std::size_t threads) {
          const SystemConfig c = MakeConfig(system, lambda, alpha, temperature, measure, stages,
                                            epochs, batch_size, learning_rate, momentum,
                                            patience, seed);
          const Splits s = SplitDataset(data, seed, 1.0);
          SweepResult r;
          {
            py::gil_scoped_release release;
            r = SweepLambda(c, grid, s.train, s.val, s.test, nullptr, threads);
          }
          py::list rows;
          for (const SweepRow& row : r.rows) {
            rows.append(py::dict(py::arg("lambda") = row.lambda, py::arg("val_mAP") = row.val_map,
                                 py::arg("test_mAP") = row.test_map,
                                 py::arg("best_epoch") = row.best_epoch));
          }
          return py::dict(py::arg("best_lambda") = r.best_lambda, py::arg("rows") = rows);
        },
        py::arg("data"), py::arg("grid") = kDefaultLambdaGrid, EAST_TRAIN_ARGS,
        py::arg("threads") = 1);
  m.def("limited_data_experiment",
        [](const Dataset& data, const std::vector<double>& fractions,
           const std::vector<std::uint64_t>& seeds, const std::string& system, double lambda,
           double alpha, double temperature, const std::string& measure,
           const std::string& stages, std::size_t epochs, std::size_t batch_size,
           double learning_rate, double momentum, std::size_t patience, std::uint64_t seed,
           std::size_t threads) {
          const SystemConfig c = MakeConfig(system, lambda, alpha, temperature, measure, stages,
                                            epochs, batch_size, learning_rate, momentum,
                                            patience, seed);
          std::vector<LimitedRow> rows;
          {
            py::gil_scoped_release release;
            rows = LimitedDataExperiment(c, data, SplitSpec{}, fractions, seeds, threads);
          }
          py::list out;
          for (const LimitedRow& row : rows) {
            out.append(py::dict(py::arg("system") = std::string(SystemName(row.system)),
                                py::arg("fraction") = row.fraction, py::arg("seed") = row.seed,
                                py::arg("mAP") = row.test_map));
          }
          return out;
        },
        py::arg("data"), py::arg("fractions"), py::arg("seeds"), EAST_TRAIN_ARGS,
        py::arg("threads") = 1);

  // Models.
  m.def("param_count",
        [](std::size_t input_channels, const std::string& stages, std::size_t classes,
           bool include_head) {
          const std::vector<StageSpec> layout =
              stages.empty() ? DefaultStages(input_channels) : ParseStages(stages);
          return ParamCount(StudentNet(input_channels, layout, classes), include_head);
        },
        py::arg("input_channels"), py::arg("stages") = "", py::arg("classes") = 10,
        py::arg("include_head") = false);
  m.def("throughput",
        [](std::size_t input_channels, const std::string& stages, std::size_t frames,
           double seconds, std::uint64_t seed) {
          const std::vector<StageSpec> layout =
              stages.empty() ? DefaultStages(input_channels) : ParseStages(stages);
          const StudentNet net = StudentNet::Initialize(input_channels, layout, 10, seed);
          py::gil_scoped_release release;
          return ThroughputBench(net, frames, input_channels, seconds);
        },
        py::arg("input_channels") = 128, py::arg("stages") = "", py::arg("frames") = 1000,
        py::arg("seconds") = 1.0, py::arg("seed") = 0);
  m.def("predict_logits",
        [](const py::bytes& checkpoint, const Array& frames) {
          return ToArray(StudentForward(DeserializeStudent(std::string(checkpoint)),
                                        ToMatrix(frames))
                             .logits);
        },
        py::arg("checkpoint"), py::arg("frames"));
}

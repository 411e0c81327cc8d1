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

// The `east` command-line tool.
//
//   east gen-data   --clips 2000 --classes 10 --seed 7 -o data.east
//   east train      --data data.east --system east-final --lambda 0.5 -o runs/final
//   east sweep      --data data.east --system east-final -o runs/sweep
//   east limited    --data data.east --fractions 0.25,0.5,0.75,1.0 --seeds 5 -o runs/limited
//   east complexity -o runs/complexity
//   east selftest
//
// Every subcommand takes --seed and writes manifest.json next to its outputs.
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "criteria.h"
#include "east/data.h"
#include "east/errors.h"
#include "east/models.h"
#include "east/trainer.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace east {
namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::uint64_t Fnv1a64(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string HexDigest(std::uint64_t value) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << value;
  return out.str();
}

std::string UtcNow() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::ostringstream out;
  out << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

// Collects everything needed to repeat a run and writes it as JSON.
class Manifest {
 public:
  Manifest(std::string command, int argc, char** argv)
      : started_(std::chrono::steady_clock::now()) {
    body_["tool"] = "east";
    body_["version"] = EAST_VERSION;
    body_["command"] = std::move(command);
    body_["argv"] = std::vector<std::string>(argv, argv + argc);
    body_["started_utc"] = UtcNow();
    body_["artifacts"] = json::array();
  }

  json& operator[](const char* key) { return body_[key]; }

  void AddInput(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream bytes;
    bytes << in.rdbuf();
    body_["inputs"][path] = {{"fnv1a64", HexDigest(Fnv1a64(bytes.str()))}};
  }

  void AddArtifact(const fs::path& path) { body_["artifacts"].push_back(path.string()); }

  void Write(const fs::path& path) {
    body_["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    std::ofstream out(path);
    out << body_.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
    std::cerr << "manifest: " << path.string() << '\n';
  }

 private:
  json body_;
  std::chrono::steady_clock::time_point started_;
};

void EnsureDirectory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

// ---------------------------------------------------------------- gen-data

struct GenDataFlags {
  SynthConfig synth;
  std::string output;
};

void AddGenData(CLI::App& app, GenDataFlags& f) {
  auto* cmd = app.add_subcommand("gen-data", "Generate a synthetic dataset container");
  SynthConfig& s = f.synth;
  cmd->add_option("--clips", s.num_clips, "Number of clips")->capture_default_str();
  cmd->add_option("--classes", s.num_classes, "Number of classes")->capture_default_str();
  cmd->add_option("--latent-dim", s.latent_dim, "Latent dimension")->capture_default_str();
  cmd->add_option("--frames", s.frames, "Student input frames per clip")->capture_default_str();
  cmd->add_option("--input-channels", s.input_channels, "Student input channels")
      ->capture_default_str();
  cmd->add_option("--teacher-dim", s.teacher_dim, "Teacher embedding dimension")
      ->capture_default_str();
  cmd->add_option("--teacher-frames", s.teacher_frames, "Teacher frames per clip")
      ->capture_default_str();
  cmd->add_option("--teacher-noise", s.teacher_noise, "Teacher noise; larger is a weaker teacher")
      ->capture_default_str();
  cmd->add_option("--frame-noise", s.frame_noise, "Per-frame input noise")->capture_default_str();
  cmd->add_option("--mixing-scale", s.mixing_scale, "Scale of the latent-to-input mixing")
      ->capture_default_str();
  cmd->add_option("--observe-prob", s.observe_prob, "Probability a label is observed")
      ->capture_default_str();
  cmd->add_option("--seed", s.seed, "Random seed")->capture_default_str();
  cmd->add_option("-o,--output", f.output, "Output container path")->required();
}

int RunGenData(const GenDataFlags& f, int argc, char** argv) {
  Manifest manifest("gen-data", argc, argv);
  const SynthConfig& s = f.synth;
  const Dataset data = Generate(s);
  const fs::path out(f.output);
  if (out.has_parent_path()) EnsureDirectory(out.parent_path());
  WriteContainer(out.string(), data);

  std::size_t observed = 0, positive = 0;
  for (const LabeledClip& clip : data.clips) {
    for (std::size_t k = 0; k < clip.mask.size(); ++k) {
      observed += clip.mask[k];
      positive += clip.mask[k] & clip.targets[k];
    }
  }
  std::cout << "clips\t" << data.size() << "\nclasses\t" << data.num_classes
            << "\ninput\t" << s.frames << " x " << data.input_channels << "\nteacher\t"
            << s.teacher_frames << " x " << data.teacher_channels << "\nobserved labels\t"
            << observed << "\npositive rate\t"
            << FormatMetric(observed ? static_cast<double>(positive) / observed : 0.0) << '\n';

  manifest["seed"] = s.seed;
  manifest["config"] = {{"clips", s.num_clips},          {"classes", s.num_classes},
                        {"latent_dim", s.latent_dim},    {"frames", s.frames},
                        {"input_channels", s.input_channels},
                        {"teacher_dim", s.teacher_dim},  {"teacher_frames", s.teacher_frames},
                        {"teacher_noise", s.teacher_noise}, {"frame_noise", s.frame_noise},
                        {"mixing_scale", s.mixing_scale}, {"observe_prob", s.observe_prob}};
  manifest["outputs"] = {{"fnv1a64", HexDigest(Fnv1a64(SerializeContainer(data)))}};
  manifest.AddArtifact(out);
  manifest.Write(out.string() + ".manifest.json");
  return 0;
}

// ---------------------------------------------------------------- training flags

struct TrainFlags {
  std::string data;
  std::string system = "baseline";
  std::string measure = "dcor";
  std::string teacher;
  std::string embedding_tag = "synthetic";
  std::string stages;
  std::string output;
  SystemConfig config;
  SplitSpec split;
};

void AddTrainFlags(CLI::App* cmd, TrainFlags& f, const std::string& default_system) {
  f.system = default_system;
  SystemConfig& c = f.config;
  cmd->add_option("--data", f.data, "Dataset container")->required()->check(CLI::ExistingFile);
  cmd->add_option("--system", f.system,
                  "baseline, teacher-lr, kd, east-cosdiff, east-final, east-all, east-kd")
      ->capture_default_str();
  cmd->add_option("--measure", f.measure, "Regularizer: dcor or cosdiff")->capture_default_str();
  cmd->add_option("--lambda", c.weights.lambda, "Regularization weight")->capture_default_str();
  cmd->add_option("--alpha", c.weights.alpha, "Distillation weight")->capture_default_str();
  cmd->add_option("--temperature", c.weights.temperature, "Distillation temperature")
      ->capture_default_str();
  cmd->add_option("--teacher", f.teacher, "Fitted teacher model (.easl) for kd and east-kd")
      ->check(CLI::ExistingFile);
  cmd->add_option("--embedding-tag", f.embedding_tag, "Label for the embedding column")
      ->capture_default_str();
  cmd->add_option("--stages", f.stages, "Student stages as in:out:pool,... (default 2 stages)");
  cmd->add_option("--epochs", c.epochs, "Maximum epochs")->capture_default_str();
  cmd->add_option("--batch-size", c.batch_size, "Clips per batch")->capture_default_str();
  cmd->add_option("--lr", c.learning_rate, "SGD learning rate")->capture_default_str();
  cmd->add_option("--momentum", c.momentum, "SGD momentum")->capture_default_str();
  cmd->add_option("--patience", c.patience, "Early-stopping patience (0 = off)")
      ->capture_default_str();
  cmd->add_option("--teacher-epochs", c.teacher_fit.epochs, "Teacher fitting epochs")
      ->capture_default_str();
  cmd->add_option("--teacher-lr", c.teacher_fit.learning_rate, "Teacher fitting learning rate")
      ->capture_default_str();
  cmd->add_option("--train-fraction", f.split.train, "Share of clips for training")
      ->capture_default_str();
  cmd->add_option("--val-fraction", f.split.val, "Share of clips for validation")
      ->capture_default_str();
  cmd->add_option("--test-fraction", f.split.test, "Share of clips for testing")
      ->capture_default_str();
  cmd->add_option("--seed", c.seed, "Seed for split, initialization and shuffling")
      ->capture_default_str();
  cmd->add_option("-o,--output", f.output, "Output directory")->required();
}

// Resolves names into enums; the seed drives both the split and training.
void Resolve(TrainFlags& f) {
  f.config.system = ParseSystem(f.system);
  f.config.measure = ParseMeasure(f.measure);
  if (!f.stages.empty()) f.config.stages = ParseStages(f.stages);
  f.split.seed = f.config.seed;
}

json ConfigJson(const TrainFlags& f, const Dataset& data) {
  const SystemConfig& c = f.config.Normalized();
  const std::vector<StageSpec> stages =
      c.stages.empty() ? DefaultStages(data.input_channels) : c.stages;
  json j = {{"system", SystemName(c.system)},
            {"measure", MeasureName(c.measure)},
            {"lambda", c.weights.lambda},
            {"alpha", c.weights.alpha},
            {"temperature", c.weights.temperature},
            {"stages", FormatStages(stages)},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"momentum", c.momentum},
            {"patience", c.patience},
            {"teacher_epochs", c.teacher_fit.epochs},
            {"teacher_learning_rate", c.teacher_fit.learning_rate},
            {"split", {{"train", f.split.train}, {"val", f.split.val}, {"test", f.split.test}}},
            {"embedding_tag", f.embedding_tag}};
  if (!f.teacher.empty()) j["teacher"] = f.teacher;
  return j;
}

struct LoadedData {
  Dataset all, train, val, test;
};

LoadedData LoadAndSplit(const TrainFlags& f) {
  LoadedData d;
  d.all = ReadContainer(f.data);
  const SplitIndices parts = Split(d.all.size(), f.split);
  d.train = d.all.Subset(parts.train);
  d.val = d.all.Subset(parts.val);
  d.test = d.all.Subset(parts.test);
  return d;
}

std::optional<TeacherLR> LoadTeacherFor(const TrainFlags& f) {
  if (!UsesDistillation(f.config.system)) return std::nullopt;
  if (f.teacher.empty()) {
    throw Error(ErrorCode::kMissingComponent,
                std::string(SystemName(f.config.system)) + " needs --teacher <model.easl>");
  }
  return LoadTeacher(f.teacher);
}

// ---------------------------------------------------------------- train

int RunTrain(TrainFlags& f, int argc, char** argv) {
  Manifest manifest("train", argc, argv);
  Resolve(f);
  const std::optional<TeacherLR> teacher = LoadTeacherFor(f);
  const LoadedData d = LoadAndSplit(f);
  const TrainResult result =
      TrainSystem(f.config, d.train, d.val, d.test, teacher ? &*teacher : nullptr);

  const fs::path dir(f.output);
  EnsureDirectory(dir);
  if (result.teacher) {
    SaveTeacher(*result.teacher, (dir / "teacher.easl").string());
    manifest.AddArtifact(dir / "teacher.easl");
  } else {
    SaveStudent(result.model, (dir / "model.easm").string());
    manifest.AddArtifact(dir / "model.easm");
  }
  std::ostringstream history;
  WriteHistory(history, result.history);
  WriteText(dir / "history.jsonl", history.str());
  manifest.AddArtifact(dir / "history.jsonl");

  const std::string header = "system\tembedding\tmAP\tF1\tAUC\n";
  const std::string row = std::string(SystemName(result.config.system)) + '\t' +
                          f.embedding_tag + '\t' +
                          FormatMetric(result.test.mean_average_precision) + '\t' +
                          FormatMetric(result.test.macro_f1) + '\t' +
                          FormatMetric(result.test.roc_auc) + '\n';
  WriteText(dir / "metrics.tsv", header + row);
  manifest.AddArtifact(dir / "metrics.tsv");
  std::cout << header << row;

  manifest.AddInput(f.data);
  if (!f.teacher.empty()) manifest.AddInput(f.teacher);
  manifest["seed"] = f.config.seed;
  manifest["config"] = ConfigJson(f, d.all);
  manifest["results"] = {{"test_mAP", result.test.mean_average_precision},
                         {"test_F1", result.test.macro_f1},
                         {"test_AUC", result.test.roc_auc},
                         {"best_epoch", result.best_epoch},
                         {"best_val_mAP", result.best_val_map},
                         {"epochs_run", result.history.size()},
                         {"skipped_batches", result.skipped_batches}};
  manifest.Write(dir / "manifest.json");
  return 0;
}

// ---------------------------------------------------------------- sweep

struct SweepFlags {
  TrainFlags train;
  std::vector<double> grid = kDefaultLambdaGrid;
};

int RunSweep(SweepFlags& s, int argc, char** argv) {
  Manifest manifest("sweep", argc, argv);
  TrainFlags& f = s.train;
  Resolve(f);
  const std::optional<TeacherLR> teacher = LoadTeacherFor(f);
  const LoadedData d = LoadAndSplit(f);
  const std::size_t threads = ThreadsFromEnvironment();
  const SweepResult result = SweepLambda(f.config, s.grid, d.train, d.val, d.test,
                                         teacher ? &*teacher : nullptr, threads);
  const fs::path dir(f.output);
  EnsureDirectory(dir);
  std::ostringstream tsv;
  WriteSweepTsv(tsv, result);
  WriteText(dir / "sweep.tsv", tsv.str());
  manifest.AddArtifact(dir / "sweep.tsv");
  std::cout << tsv.str();

  manifest.AddInput(f.data);
  if (!f.teacher.empty()) manifest.AddInput(f.teacher);
  manifest["seed"] = f.config.seed;
  manifest["threads"] = threads;
  json config = ConfigJson(f, d.all);
  config["grid"] = s.grid;
  manifest["config"] = config;
  manifest["results"] = {{"best_lambda", result.best_lambda}};
  manifest.Write(dir / "manifest.json");
  return 0;
}

// ---------------------------------------------------------------- limited

struct LimitedFlags {
  TrainFlags train;
  std::vector<double> fractions = {0.25, 0.5, 0.75, 1.0};
  std::size_t seeds = 5;
};

int RunLimited(LimitedFlags& l, int argc, char** argv) {
  Manifest manifest("limited", argc, argv);
  TrainFlags& f = l.train;
  Resolve(f);
  if (l.seeds == 0) throw Error(ErrorCode::kInvalidConfig, "--seeds must be positive");
  const Dataset data = ReadContainer(f.data);
  std::vector<std::uint64_t> seeds(l.seeds);
  for (std::size_t i = 0; i < l.seeds; ++i) seeds[i] = f.config.seed + i;
  const std::size_t threads = ThreadsFromEnvironment();
  const std::vector<LimitedRow> rows =
      LimitedDataExperiment(f.config, data, f.split, l.fractions, seeds, threads);
  const fs::path dir(f.output);
  EnsureDirectory(dir);
  std::ostringstream tsv;
  WriteLimitedTsv(tsv, rows);
  WriteText(dir / "limited.tsv", tsv.str());
  manifest.AddArtifact(dir / "limited.tsv");
  std::cout << tsv.str();

  manifest.AddInput(f.data);
  manifest["seed"] = f.config.seed;
  manifest["threads"] = threads;
  json config = ConfigJson(f, data);
  config["fractions"] = l.fractions;
  config["seeds"] = seeds;
  manifest["config"] = config;
  manifest.Write(dir / "manifest.json");
  return 0;
}

// ---------------------------------------------------------------- complexity

struct ComplexityFlags {
  std::string stages;
  std::size_t channels = 128;
  std::size_t frames = 1000;
  std::size_t classes = 10;
  double seconds = 1.0;
  std::uint64_t seed = 0;
  std::string output;
};

int RunComplexity(const ComplexityFlags& f, int argc, char** argv) {
  Manifest manifest("complexity", argc, argv);
  const std::vector<StageSpec> stages =
      f.stages.empty() ? DefaultStages(f.channels) : ParseStages(f.stages);
  // The same layout at twice the width shows how throughput scales.
  std::vector<StageSpec> wide = stages;
  for (std::size_t s = 0; s < wide.size(); ++s) {
    if (s > 0) wide[s].in_channels *= 2;
    wide[s].out_channels *= 2;
  }
  std::vector<ComplexityRow> rows;
  for (const auto& [name, layout] :
       {std::pair{std::string("student"), stages}, std::pair{std::string("student-2x"), wide}}) {
    const StudentNet net = StudentNet::Initialize(f.channels, layout, f.classes, f.seed);
    rows.push_back({name, ParamCount(net, false),
                    ThroughputBench(net, f.frames, f.channels, f.seconds)});
  }
  const fs::path dir(f.output);
  EnsureDirectory(dir);
  std::ostringstream tsv;
  WriteComplexityTable(tsv, rows);
  WriteText(dir / "complexity.tsv", tsv.str());
  manifest.AddArtifact(dir / "complexity.tsv");
  std::cout << tsv.str();

  manifest["seed"] = f.seed;
  manifest["config"] = {{"stages", FormatStages(stages)}, {"channels", f.channels},
                        {"frames", f.frames},             {"classes", f.classes},
                        {"seconds", f.seconds}};
  // The table rounds to 0.01 M, so the exact counts go into the manifest.
  json results = json::array();
  for (const ComplexityRow& row : rows) {
    results.push_back({{"model", row.model},
                       {"parameters", row.parameters},
                       {"iterations_per_second", row.iterations_per_second}});
  }
  manifest["results"] = results;
  manifest.Write(dir / "manifest.json");
  return 0;
}

// ---------------------------------------------------------------- selftest

struct SelftestFlags {
  bool full = false;
  std::uint64_t seed = 0;
  std::string output = "selftest-out";
};

int RunSelftest(const SelftestFlags& f, int argc, char** argv) {
  Manifest manifest("selftest", argc, argv);
  std::vector<int> ids;
  if (f.full) {
    ids.assign(std::begin(acceptance::kAllCriteria), std::end(acceptance::kAllCriteria));
  } else {
    ids.assign(std::begin(acceptance::kQuickCriteria), std::end(acceptance::kQuickCriteria));
  }
  std::vector<acceptance::CriterionResult> results;
  const bool ok = acceptance::RunCriteria(ids, std::cout, &results);
  json checks = json::array();
  for (const auto& r : results) {
    checks.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed},
                      {"detail", r.detail}, {"seconds", r.seconds}});
  }
  const fs::path dir(f.output);
  EnsureDirectory(dir);
  // The criteria use their own fixed seeds; --seed is recorded only.
  manifest["seed"] = f.seed;
  manifest["config"] = {{"full", f.full}};
  manifest["results"] = {{"passed", ok}, {"criteria", checks}};
  manifest.Write(dir / "manifest.json");
  return ok ? 0 : kExitRuntime;
}

bool IsUsageError(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kWeightOutOfRange:
    case ErrorCode::kMissingComponent:
    case ErrorCode::kEmptySplit:
      return true;
    default:
      return false;
  }
}

}  // namespace
}  // namespace east

int main(int argc, char** argv) {
  using namespace east;
  CLI::App app{"Feature-space distillation with pre-trained embeddings as teachers", "east"};
  app.set_version_flag("--version", EAST_VERSION);
  app.require_subcommand(1);

  GenDataFlags gen;
  AddGenData(app, gen);

  TrainFlags train;
  auto* train_cmd = app.add_subcommand("train", "Train one system and evaluate it");
  AddTrainFlags(train_cmd, train, "baseline");

  SweepFlags sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Select lambda on validation mAP");
  AddTrainFlags(sweep_cmd, sweep.train, "east-final");
  sweep_cmd->add_option("--grid", sweep.grid, "Comma-separated lambda values")
      ->delimiter(',')
      ->capture_default_str();

  LimitedFlags limited;
  auto* limited_cmd =
      app.add_subcommand("limited", "Train the limited-data systems on reduced training sets");
  AddTrainFlags(limited_cmd, limited.train, "east-final");
  limited_cmd->add_option("--fractions", limited.fractions, "Comma-separated training fractions")
      ->delimiter(',')
      ->capture_default_str();
  limited_cmd->add_option("--seeds", limited.seeds, "Number of seeds, starting at --seed")
      ->capture_default_str();

  ComplexityFlags complexity;
  auto* complexity_cmd =
      app.add_subcommand("complexity", "Report backbone parameters and throughput");
  complexity_cmd->add_option("--stages", complexity.stages, "Student stages as in:out:pool,...");
  complexity_cmd->add_option("--channels", complexity.channels, "Input channels")
      ->capture_default_str();
  complexity_cmd->add_option("--frames", complexity.frames, "Input frames")
      ->capture_default_str();
  complexity_cmd->add_option("--classes", complexity.classes, "Classes in the head")
      ->capture_default_str();
  complexity_cmd->add_option("--seconds", complexity.seconds, "Benchmark duration")
      ->capture_default_str();
  complexity_cmd->add_option("--seed", complexity.seed, "Initialization seed")
      ->capture_default_str();
  complexity_cmd->add_option("-o,--output", complexity.output, "Output directory")->required();

  SelftestFlags selftest;
  auto* selftest_cmd =
      app.add_subcommand("selftest", "Run the oracle and invariant acceptance checks");
  selftest_cmd->add_flag("--full", selftest.full, "Also run the long training criteria");
  selftest_cmd->add_option("--seed", selftest.seed, "Recorded in the manifest")
      ->capture_default_str();
  selftest_cmd->add_option("-o,--output", selftest.output, "Directory for the manifest")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (app.got_subcommand("gen-data")) return RunGenData(gen, argc, argv);
    if (app.got_subcommand("train")) return RunTrain(train, argc, argv);
    if (app.got_subcommand("sweep")) return RunSweep(sweep, argc, argv);
    if (app.got_subcommand("limited")) return RunLimited(limited, argc, argv);
    if (app.got_subcommand("complexity")) return RunComplexity(complexity, argc, argv);
    if (app.got_subcommand("selftest")) return RunSelftest(selftest, argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return IsUsageError(e.code()) ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

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

#include "east/data.h"

#include <cmath>
#include <numeric>
#include <set>

#include "binary_io.h"
#include "east/errors.h"
#include "east/random.h"

namespace east {
namespace {

constexpr std::string_view kContainerMagic = "EAST";
constexpr double kFractionSlack = 1e-9;

double ToFloatPrecision(double v) { return static_cast<double>(static_cast<float>(v)); }

Matrix GaussianMatrix(std::size_t rows, std::size_t cols, double scale, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = scale * rng.Normal();
  return m;
}

// Gram-Schmidt on the rows of a rows x cols matrix with rows <= cols.
void OrthonormalizeRows(Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto ri = m.row(i);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < i; ++j) {
        auto rj = m.row(j);
        double dot = 0.0;
        for (std::size_t c = 0; c < ri.size(); ++c) dot += ri[c] * rj[c];
        for (std::size_t c = 0; c < ri.size(); ++c) ri[c] -= dot * rj[c];
      }
    }
    double norm = 0.0;
    for (double v : ri) norm += v * v;
    norm = std::sqrt(norm);
    if (norm < 1e-10) throw Error(ErrorCode::kInvalidConfig, "degenerate random projection");
    for (double& v : ri) v /= norm;
  }
}

// C_t x d map with orthonormal rows (C_t <= d) or orthonormal columns.
Matrix RandomIsometry(std::size_t out_dim, std::size_t in_dim, Rng& rng) {
  if (out_dim <= in_dim) {
    Matrix q = GaussianMatrix(out_dim, in_dim, 1.0, rng);
    OrthonormalizeRows(q);
    return q;
  }
  Matrix qt = GaussianMatrix(in_dim, out_dim, 1.0, rng);
  OrthonormalizeRows(qt);
  return Transpose(qt);
}

void Require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::kInvalidConfig, message);
}

std::size_t FloorCount(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + kFractionSlack));
}

}  // namespace

Dataset Dataset::Subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.num_classes = num_classes;
  out.input_channels = input_channels;
  out.teacher_channels = teacher_channels;
  out.clips.reserve(indices.size());
  out.teacher.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= clips.size()) throw Error(ErrorCode::kDimensionMismatch, "clip index out of range");
    out.clips.push_back(clips[i]);
    out.teacher.push_back(teacher[i]);
  }
  return out;
}

void Dataset::Validate() const {
  Require(teacher.size() == clips.size(), "one teacher sequence per clip is required");
  std::set<std::uint32_t> ids;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const LabeledClip& clip = clips[i];
    const std::string where = "clip " + std::to_string(i);
    Require(clip.frames.rows() > 0 && clip.frames.cols() == input_channels,
            where + ": frames must be T x " + std::to_string(input_channels));
    Require(clip.targets.size() == num_classes && clip.mask.size() == num_classes,
            where + ": targets and mask need " + std::to_string(num_classes) + " entries");
    for (std::size_t k = 0; k < num_classes; ++k) {
      Require(clip.targets[k] <= 1 && clip.mask[k] <= 1, where + ": labels must be binary");
    }
    Require(teacher[i].rows() > 0 && teacher[i].cols() == teacher_channels,
            where + ": teacher must be T_t x " + std::to_string(teacher_channels));
    Require(ids.insert(clip.clip_id).second, where + ": duplicate clip id");
  }
}

void SynthConfig::Validate() const {
  Require(num_clips > 0, "num_clips must be positive");
  Require(num_classes > 0, "num_classes must be positive");
  Require(latent_dim > 0, "latent_dim must be positive");
  Require(frames > 0 && teacher_frames > 0, "frame counts must be positive");
  Require(input_channels > 0 && teacher_dim > 0, "channel counts must be positive");
  Require(teacher_noise >= 0.0 && std::isfinite(teacher_noise), "teacher_noise must be >= 0");
  Require(frame_noise >= 0.0 && std::isfinite(frame_noise), "frame_noise must be >= 0");
  Require(mixing_scale > 0.0 && std::isfinite(mixing_scale), "mixing_scale must be > 0");
  Require(observe_prob > 0.0 && observe_prob <= 1.0, "observe_prob must lie in (0, 1]");
  Require(num_clips <= UINT32_MAX, "too many clips for the container format");
}

Dataset Generate(const SynthConfig& config) {
  config.Validate();
  const std::size_t d = config.latent_dim;
  Rng structure_rng(DeriveSeed(config.seed, 0));
  // Class directions u_k, one per row.
  Matrix directions = GaussianMatrix(config.num_classes, d, 1.0, structure_rng);
  for (std::size_t k = 0; k < config.num_classes; ++k) {
    auto row = directions.row(k);
    double norm = 0.0;
    for (double v : row) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : row) v /= norm;
  }
  const Matrix mixing = GaussianMatrix(config.input_channels, d,
                                       config.mixing_scale / std::sqrt(static_cast<double>(d)),
                                       structure_rng);
  const Matrix isometry = RandomIsometry(config.teacher_dim, d, structure_rng);

  Rng clip_rng(DeriveSeed(config.seed, 1));
  Dataset data;
  data.num_classes = config.num_classes;
  data.input_channels = config.input_channels;
  data.teacher_channels = config.teacher_dim;
  data.clips.reserve(config.num_clips);
  data.teacher.reserve(config.num_clips);
  std::vector<double> z(d);
  for (std::size_t n = 0; n < config.num_clips; ++n) {
    for (double& v : z) v = clip_rng.Normal();
    const Matrix latent = Matrix::ColumnVector(z);
    const Matrix signal = MatMul(mixing, latent);        // C_in x 1
    const Matrix embedding = MatMul(isometry, latent);   // C_t x 1

    LabeledClip clip;
    clip.clip_id = static_cast<std::uint32_t>(n);
    clip.frames = Matrix(config.frames, config.input_channels);
    for (std::size_t t = 0; t < config.frames; ++t) {
      for (std::size_t c = 0; c < config.input_channels; ++c) {
        clip.frames(t, c) =
            ToFloatPrecision(signal(c, 0) + config.frame_noise * clip_rng.Normal());
      }
    }
    Matrix teacher(config.teacher_frames, config.teacher_dim);
    for (std::size_t t = 0; t < config.teacher_frames; ++t) {
      for (std::size_t c = 0; c < config.teacher_dim; ++c) {
        const double noise = config.teacher_noise > 0.0 ? config.teacher_noise * clip_rng.Normal() : 0.0;
        teacher(t, c) = ToFloatPrecision(embedding(c, 0) + noise);
      }
    }
    clip.targets.resize(config.num_classes);
    clip.mask.resize(config.num_classes);
    for (std::size_t k = 0; k < config.num_classes; ++k) {
      double projection = 0.0;
      for (std::size_t j = 0; j < d; ++j) projection += z[j] * directions(k, j);
      clip.targets[k] = projection > 0.0 ? 1 : 0;
      clip.mask[k] = clip_rng.Bernoulli(config.observe_prob) ? 1 : 0;
    }
    data.clips.push_back(std::move(clip));
    data.teacher.push_back(std::move(teacher));
  }
  return data;
}

void SplitSpec::Validate() const {
  Require(train >= 0.0 && val >= 0.0 && test >= 0.0, "split fractions must be non-negative");
  Require(std::abs(train + val + test - 1.0) < 1e-9, "split fractions must sum to 1");
  Require(limit_fraction > 0.0 && limit_fraction <= 1.0, "limit_fraction must lie in (0, 1]");
}

SplitIndices Split(std::size_t num_clips, const SplitSpec& spec) {
  spec.Validate();
  std::vector<std::size_t> order(num_clips);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(DeriveSeed(spec.seed, 2));
  rng.Shuffle(std::span<std::size_t>(order));

  const std::size_t n_train = FloorCount(spec.train, num_clips);
  const std::size_t n_val = FloorCount(spec.val, num_clips);
  if (n_train + n_val > num_clips) throw Error(ErrorCode::kEmptySplit, "split overflows");
  const std::size_t n_kept = FloorCount(spec.limit_fraction, n_train);

  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_kept));
  out.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                 order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  if (out.train.empty() || out.val.empty() || out.test.empty()) {
    throw Error(ErrorCode::kEmptySplit,
                "split of " + std::to_string(num_clips) + " clips leaves a partition empty");
  }
  return out;
}

LabelBatch Labels(const Dataset& data, std::span<const std::size_t> indices) {
  LabelBatch labels{Matrix(indices.size(), data.num_classes),
                    Matrix(indices.size(), data.num_classes)};
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const LabeledClip& clip = data.clips[indices[r]];
    for (std::size_t k = 0; k < data.num_classes; ++k) {
      labels.targets(r, k) = clip.targets[k];
      labels.mask(r, k) = clip.mask[k];
    }
  }
  return labels;
}

LabelBatch Labels(const Dataset& data) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return Labels(data, all);
}

std::string SerializeContainer(const Dataset& data) {
  data.Validate();
  internal::ByteWriter w;
  w.Bytes(kContainerMagic);
  w.U32(kContainerVersion);
  w.U32(static_cast<std::uint32_t>(data.clips.size()));
  w.U32(static_cast<std::uint32_t>(data.num_classes));
  w.U32(static_cast<std::uint32_t>(data.input_channels));
  w.U32(static_cast<std::uint32_t>(data.teacher_channels));
  for (std::size_t i = 0; i < data.clips.size(); ++i) {
    const LabeledClip& clip = data.clips[i];
    w.U32(clip.clip_id);
    w.U32(static_cast<std::uint32_t>(clip.frames.rows()));
    for (double v : clip.frames.values()) w.F32(static_cast<float>(v));
    for (std::uint8_t v : clip.targets) w.U8(v);
    for (std::uint8_t v : clip.mask) w.U8(v);
    w.U32(static_cast<std::uint32_t>(data.teacher[i].rows()));
    for (double v : data.teacher[i].values()) w.F32(static_cast<float>(v));
  }
  return w.Release();
}

Dataset DeserializeContainer(std::string_view bytes) {
  internal::ByteReader r(bytes);
  if (r.Bytes(4, "magic") != kContainerMagic) throw FormatError(0, "bad magic, expected EAST");
  const std::uint64_t version_at = r.offset();
  const std::uint32_t version = r.U32("version");
  if (version != kContainerVersion) {
    throw Error(ErrorCode::kVersionMismatch, "unsupported container version " +
                                                 std::to_string(version) + " at offset " +
                                                 std::to_string(version_at));
  }
  const std::uint32_t n_clips = r.U32("clip count");
  Dataset data;
  data.num_classes = r.U32("class count");
  data.input_channels = r.U32("input channels");
  data.teacher_channels = r.U32("teacher channels");
  std::set<std::uint32_t> ids;
  for (std::uint32_t n = 0; n < n_clips; ++n) {
    LabeledClip clip;
    const std::uint64_t id_at = r.offset();
    clip.clip_id = r.U32("clip id");
    if (!ids.insert(clip.clip_id).second) throw FormatError(id_at, "duplicate clip id");
    const std::uint64_t frames_at = r.offset();
    const std::uint32_t frames = r.U32("frame count");
    if (frames == 0) throw FormatError(frames_at, "clip has zero frames");
    r.Need(static_cast<std::uint64_t>(frames) * data.input_channels * 4, "frames");
    clip.frames = Matrix(frames, data.input_channels);
    for (double& v : clip.frames.values()) v = r.F32("frames");
    clip.targets.resize(data.num_classes);
    clip.mask.resize(data.num_classes);
    for (auto* labels : {&clip.targets, &clip.mask}) {
      for (std::uint8_t& v : *labels) {
        const std::uint64_t at = r.offset();
        v = r.U8("labels");
        if (v > 1) throw FormatError(at, "label byte is not 0 or 1");
      }
    }
    const std::uint64_t teacher_at = r.offset();
    const std::uint32_t teacher_frames = r.U32("teacher frame count");
    if (teacher_frames == 0) throw FormatError(teacher_at, "teacher has zero frames");
    r.Need(static_cast<std::uint64_t>(teacher_frames) * data.teacher_channels * 4,
           "teacher frames");
    Matrix teacher(teacher_frames, data.teacher_channels);
    for (double& v : teacher.values()) v = r.F32("teacher frames");
    data.clips.push_back(std::move(clip));
    data.teacher.push_back(std::move(teacher));
  }
  if (!r.AtEnd()) throw FormatError(r.offset(), "trailing bytes after last clip");
  return data;
}

void WriteContainer(const std::string& path, const Dataset& data) {
  internal::WriteFileBytes(path, SerializeContainer(data));
}

Dataset ReadContainer(const std::string& path) {
  return DeserializeContainer(internal::ReadFileBytes(path));
}

}  // namespace east

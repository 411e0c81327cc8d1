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

#ifndef EAST_DATA_H_
#define EAST_DATA_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "east/losses.h"
#include "east/matrix.h"

namespace east {

struct LabeledClip {
  std::uint32_t clip_id = 0;
  Matrix frames;                      // T x C_in
  std::vector<std::uint8_t> targets;  // K entries in {0, 1}
  std::vector<std::uint8_t> mask;     // K entries, 1 = label observed

  friend bool operator==(const LabeledClip&, const LabeledClip&) = default;
};

// Clips plus one teacher embedding sequence (T_t x C_t) per clip.
struct Dataset {
  std::size_t num_classes = 0;
  std::size_t input_channels = 0;
  std::size_t teacher_channels = 0;
  std::vector<LabeledClip> clips;
  std::vector<Matrix> teacher;

  std::size_t size() const { return clips.size(); }
  // Clips at `indices`, in that order.
  Dataset Subset(std::span<const std::size_t> indices) const;
  // Throws InvalidConfig when shapes disagree across clips or ids repeat.
  void Validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct SynthConfig {
  std::size_t num_clips = 2000;
  std::size_t num_classes = 10;
  std::size_t latent_dim = 16;
  std::size_t frames = 8;
  std::size_t input_channels = 256;
  std::size_t teacher_dim = 16;
  std::size_t teacher_frames = 2;
  // Standard deviation of the noise added to every teacher frame; 0 gives an
  // exact linear function of the latent ("strong" teacher).
  double teacher_noise = 0.0;
  double frame_noise = 0.3;
  // Scale of the latent-to-frame mixing matrix entries (N(0, s^2 / d)).
  double mixing_scale = 0.05;
  double observe_prob = 0.9;
  std::uint64_t seed = 0;

  // Throws InvalidConfig.
  void Validate() const;
};

// Latent z ~ N(0, I_d) per clip; target k is [z . u_k > 0] for fixed random
// unit directions u_k; frames x_t = W z + frame_noise * e_t; teacher frames
// v_t = Q z + teacher_noise * e'_t with Q an isometry (orthonormal rows when
// C_t <= d, orthonormal columns otherwise); each (clip, class) label is
// observed with probability observe_prob. Frame and teacher values are
// rounded to float precision so the container round-trips them exactly.
Dataset Generate(const SynthConfig& config);

struct SplitSpec {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
  // Fraction of the train partition kept; val and test are unaffected.
  double limit_fraction = 1.0;
  std::uint64_t seed = 0;

  void Validate() const;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

// Seeded shuffle, then partition into floor(train N) / floor(val N) / rest.
// Limiting keeps a prefix of the shuffled train partition, so smaller limits
// are subsets of larger ones under the same seed. Throws EmptySplit.
SplitIndices Split(std::size_t num_clips, const SplitSpec& spec);

// Observed-label batch for the given clips (rows in order).
LabelBatch Labels(const Dataset& data, std::span<const std::size_t> indices);
LabelBatch Labels(const Dataset& data);

// "EAST" container, version 1, little-endian. Header: magic, version,
// n_clips, K, C_in, C_t (u32). Per clip: clip_id u32, T u32, T*C_in f32
// frames, K u8 targets, K u8 mask, T_t u32, T_t*C_t f32 teacher frames.
inline constexpr std::uint32_t kContainerVersion = 1;
std::string SerializeContainer(const Dataset& data);
// Throws FormatError (with byte offset) or VersionMismatch.
Dataset DeserializeContainer(std::string_view bytes);
void WriteContainer(const std::string& path, const Dataset& data);
Dataset ReadContainer(const std::string& path);

}  // namespace east

#endif  // EAST_DATA_H_

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

#ifndef EAST_ERRORS_H_
#define EAST_ERRORS_H_

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace east {

enum class ErrorCode {
  kDimensionMismatch,
  kNonFiniteValue,
  kEmptySequence,
  kZeroVector,
  kBatchTooSmall,
  kDegenerateBatch,
  kRaggedBatch,
  kEmptyMask,
  kWeightOutOfRange,
  kMissingComponent,
  kEmptyDataset,
  kInvalidConfig,
  kEmptySplit,
  kFormatError,
  kVersionMismatch,
  kNoPositives,
  kSingleClass,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures are reported through this exception type; callers
// dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Malformed container or checkpoint bytes. offset() is the byte position at
// which decoding failed.
class FormatError : public Error {
 public:
  FormatError(std::uint64_t offset, const std::string& message);

  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

// Non-fatal diagnostics (e.g. a batch too small to be informative). The
// default sink writes to stderr.
void Warn(std::string_view message);
// Replaces the warning sink; returns the previous one. Pass nullptr to
// silence warnings.
using WarningSink = std::function<void(std::string_view)>;
WarningSink SetWarningSink(WarningSink sink);

}  // namespace east

#endif  // EAST_ERRORS_H_

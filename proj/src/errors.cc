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

#include "east/errors.h"

#include <iostream>
#include <mutex>

namespace east {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kEmptySequence: return "EmptySequence";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kBatchTooSmall: return "BatchTooSmall";
    case ErrorCode::kDegenerateBatch: return "DegenerateBatch";
    case ErrorCode::kRaggedBatch: return "RaggedBatch";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kWeightOutOfRange: return "WeightOutOfRange";
    case ErrorCode::kMissingComponent: return "MissingComponent";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kEmptySplit: return "EmptySplit";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kNoPositives: return "NoPositives";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

FormatError::FormatError(std::uint64_t offset, const std::string& message)
    : Error(ErrorCode::kFormatError,
            message + " (at byte offset " + std::to_string(offset) + ")"),
      offset_(offset) {}

namespace {

std::mutex& SinkMutex() {
  static std::mutex mu;
  return mu;
}

WarningSink& Sink() {
  static WarningSink sink = [](std::string_view message) {
    std::cerr << "warning: " << message << "\n";
  };
  return sink;
}

}  // namespace

void Warn(std::string_view message) {
  std::lock_guard<std::mutex> lock(SinkMutex());
  if (Sink()) Sink()(message);
}

WarningSink SetWarningSink(WarningSink sink) {
  std::lock_guard<std::mutex> lock(SinkMutex());
  WarningSink previous = std::move(Sink());
  Sink() = std::move(sink);
  return previous;
}

}  // namespace east

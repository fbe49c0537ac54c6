// Copyright 2026 The uqtsc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "uqtsc/rng.hpp"

#include "uqtsc/error.hpp"

namespace uqtsc {

// splitmix64 finalizer
std::uint64_t Rng::mix(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::RaggedRow: return "RaggedRow";
    case ErrorKind::NonNumericValue: return "NonNumericValue";
    case ErrorKind::EmptyLog: return "EmptyLog";
    case ErrorKind::AllIdle: return "AllIdle";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::TooFewLogs: return "TooFewLogs";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::MissingGroup: return "MissingGroup";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::KernelTooLarge: return "KernelTooLarge";
    case ErrorKind::BatchTooSmall: return "BatchTooSmall";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::InvalidRate: return "InvalidRate";
    case ErrorKind::NonPositiveSigma: return "NonPositiveSigma";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::ShapeCollapse: return "ShapeCollapse";
    case ErrorKind::AlreadyWrapped: return "AlreadyWrapped";
    case ErrorKind::UnsupportedCombination: return "UnsupportedCombination";
    case ErrorKind::CheckpointMismatch: return "CheckpointMismatch";
    case ErrorKind::MalformedCheckpoint: return "MalformedCheckpoint";
    case ErrorKind::NotNormalized: return "NotNormalized";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::MalformedReport: return "MalformedReport";
    case ErrorKind::InvalidBudgets: return "InvalidBudgets";
    case ErrorKind::InsufficientData: return "InsufficientData";
  }
  return "Unknown";
}

}  // namespace uqtsc

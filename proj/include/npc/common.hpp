// Copyright 2026 The NPC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace npc {

/// Row-major dynamic matrix; rows are frames, columns are channels.
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic, Eigen::RowMajor>;

enum class ErrorCode {
  kFileNotFound,
  kNotMono,
  kUnsupportedEncoding,
  kMalformedFile,
  kSignalTooShort,
  kInvalidArgument,
  kShapeMismatch,
  kNonFinite,
  kMissingSpeakerStats,
  kInfeasiblePlan,
  kVersionMismatch,
  kChecksumMismatch,
  kBadMagic,
  kNonScalarRoot,
  kSingleClass,
  kConfig,
  kData,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFileNotFound: return "file not found";
    case ErrorCode::kNotMono: return "not mono";
    case ErrorCode::kUnsupportedEncoding: return "unsupported encoding";
    case ErrorCode::kMalformedFile: return "malformed file";
    case ErrorCode::kSignalTooShort: return "signal too short";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kMissingSpeakerStats: return "missing speaker stats";
    case ErrorCode::kInfeasiblePlan: return "infeasible mask plan";
    case ErrorCode::kVersionMismatch: return "version mismatch";
    case ErrorCode::kChecksumMismatch: return "checksum mismatch";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kNonScalarRoot: return "non-scalar root";
    case ErrorCode::kSingleClass: return "single class";
    case ErrorCode::kConfig: return "config error";
    case ErrorCode::kData: return "data error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace npc

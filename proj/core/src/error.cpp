// Copyright 2026 The tdao Authors
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

#include "tdao/error.hpp"

namespace tdao {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kDisconnectedTopology: return "DisconnectedTopology";
    case ErrorCode::kSpectralViolation: return "SpectralViolation";
    case ErrorCode::kInfeasibleDegree: return "InfeasibleDegree";
    case ErrorCode::kInfeasibleSpec: return "InfeasibleSpec";
    case ErrorCode::kInfeasibleBudget: return "InfeasibleBudget";
    case ErrorCode::kPointTooCloseToBoundary: return "PointTooCloseToBoundary";
    case ErrorCode::kDenominatorNonpositive: return "DenominatorNonpositive";
    case ErrorCode::kInvalidW: return "InvalidW";
    case ErrorCode::kRegimeViolation: return "RegimeViolation";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kConfig: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace tdao

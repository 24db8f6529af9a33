// src/error.cpp

// Copyright 2026  The SCPC Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "scpc/error.hpp"

namespace scpc {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kMalformedManifest: return "MalformedManifest";
    case ErrorCode::kMalformedFile: return "MalformedFile";
    case ErrorCode::kUnsupportedAudio: return "UnsupportedAudio";
    case ErrorCode::kNonMonotoneAlignment: return "NonMonotoneAlignment";
    case ErrorCode::kNegativeDuration: return "NegativeDuration";
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kTooShortUtterance: return "TooShortUtterance";
    case ErrorCode::kDegenerateUtterance: return "DegenerateUtterance";
    case ErrorCode::kEmptyPool: return "EmptyPool";
    case ErrorCode::kNoReferenceBoundaries: return "NoReferenceBoundaries";
    case ErrorCode::kDivergedTraining: return "DivergedTraining";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kEmptyValidation: return "EmptyValidation";
    case ErrorCode::kMissingAlignment: return "MissingAlignment";
    case ErrorCode::kInconsistentLengths: return "InconsistentLengths";
    case ErrorCode::kLabelFeatureMismatch: return "LabelFeatureMismatch";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

bool is_data_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingFile:
    case ErrorCode::kMalformedManifest:
    case ErrorCode::kMalformedFile:
    case ErrorCode::kUnsupportedAudio:
    case ErrorCode::kNonMonotoneAlignment:
    case ErrorCode::kNegativeDuration:
    case ErrorCode::kUnknownLabel:
    case ErrorCode::kTooShortUtterance:
    case ErrorCode::kNoReferenceBoundaries:
    case ErrorCode::kEmptyCorpus:
    case ErrorCode::kEmptyValidation:
    case ErrorCode::kMissingAlignment:
    case ErrorCode::kInconsistentLengths:
    case ErrorCode::kLabelFeatureMismatch:
      return true;
    default:
      return false;
  }
}

}  // namespace scpc

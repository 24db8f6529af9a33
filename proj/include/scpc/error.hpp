// scpc/error.hpp

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

#ifndef SCPC_ERROR_HPP_
#define SCPC_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace scpc {

enum class ErrorCode {
  kMissingFile,
  kMalformedManifest,
  kMalformedFile,
  kUnsupportedAudio,
  kNonMonotoneAlignment,
  kNegativeDuration,
  kUnknownLabel,
  kTooShortUtterance,
  kDegenerateUtterance,
  kEmptyPool,
  kNoReferenceBoundaries,
  kDivergedTraining,
  kEmptyCorpus,
  kEmptyValidation,
  kMissingAlignment,
  kInconsistentLengths,
  kLabelFeatureMismatch,
  kInvalidConfig,
};

const char* error_code_name(ErrorCode code);

/// True for errors caused by input data (files, alignments, corpora) rather
/// than by the computation itself. The CLI maps these to exit status 2.
bool is_data_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace scpc

#endif  // SCPC_ERROR_HPP_

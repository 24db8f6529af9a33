// scpc/inference.hpp

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

#ifndef SCPC_INFERENCE_HPP_
#define SCPC_INFERENCE_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "scpc/eval.hpp"
#include "scpc/model.hpp"

namespace scpc {

enum class Task { kPhone, kWord };

const char* task_name(Task task);
Task parse_task(const std::string& name);

struct ProminenceSetting {
  double phone = 0.0;
  double word = 0.0;
  std::vector<double> grid;
};

struct SegmentationResult {
  std::string utterance_id;
  std::vector<double> phone_boundaries_s;
  std::vector<double> word_boundaries_s;
  Eigen::VectorXd phone_trace;  // d, one entry per frame gap
  Eigen::VectorXd word_trace;   // one entry per segment transition
};

/// Peaks of d with at least `prominence`, as gap timestamps (g + 1) * 10 ms.
std::vector<double> phone_boundaries_from_trace(const Eigen::VectorXd& d, double prominence);

/// Peaks of the word score trace, padded at both ends with its minimum;
/// each peak at transition t is reported where segment t + 1 begins.
std::vector<double> word_boundaries_from_trace(const Eigen::VectorXd& scores, const SegmentRanges& ranges,
                                               double prominence);

/// Throws TooShortUtterance when the utterance cannot be encoded to 2+ frames.
SegmentationResult segment_utterance(ScpcModel& model, const Utterance& utt, const ProminenceSetting& prominence);
SegmentationResult segment_features(ScpcModel& model, const std::string& id, const Matrix& features,
                                    const ProminenceSetting& prominence);

std::vector<double> phone_boundaries(ScpcModel& model, const Utterance& utt, double prominence);
std::vector<double> word_boundaries(ScpcModel& model, const Utterance& utt, double prominence);

/// 0.00, 0.01, ..., 0.50.
std::vector<double> default_prominence_grid();

/// Traces computed once per utterance, reused across the grid.
struct TuningTrace {
  Eigen::VectorXd trace;
  SegmentRanges ranges;            // word task only
  std::vector<double> reference;   // interior reference boundaries
};

/// Exhaustive grid search for the largest pooled R-value; ties go to the
/// larger prominence. Throws EmptyValidation for an empty trace set.
double tune_prominence(const std::vector<TuningTrace>& traces, const std::vector<double>& grid, Task task,
                       double* best_r_value = nullptr);

/// Model-level wrapper over the validation utterances; both tasks are tuned
/// when their alignments are present.
ProminenceSetting tune_prominence(ScpcModel& model, const std::vector<Utterance>& val,
                                  const std::vector<double>& grid, Task task);

void write_boundary_file(const std::filesystem::path& path,
                         const std::vector<std::pair<std::string, std::vector<double>>>& rows);
std::map<std::string, std::vector<double>> read_boundary_file(const std::filesystem::path& path);

void write_prominence(const std::filesystem::path& path, const ProminenceSetting& setting);
ProminenceSetting read_prominence(const std::filesystem::path& path);

}  // namespace scpc

#endif  // SCPC_INFERENCE_HPP_

// scpc/varrate.hpp

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

// Variable-rate representations: per-segment feature extraction, frame
// expansion, linear phone probing and MFCC baseline features.

#ifndef SCPC_VARRATE_HPP_
#define SCPC_VARRATE_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scpc/corpus.hpp"
#include "scpc/model.hpp"

namespace scpc {

/// One utterance in a feature file. Frame-level blocks have no gaps and
/// frame_count == rows; segment-level blocks list the boundary gap indices.
struct FeatureBlock {
  std::string id;
  Matrix data;
  Index frame_count = 0;
  std::vector<Index> gaps;
  bool segmented = false;
};

struct FeatureFile {
  double hop_s = kFrameHop;
  std::vector<FeatureBlock> blocks;

  const FeatureBlock* find(const std::string& id) const;
};

/// Writes path (binary blocks) and path + ".idx" (text index).
void write_feature_file(const std::filesystem::path& path, const FeatureFile& file);
FeatureFile read_feature_file(const std::filesystem::path& path);

enum class BoundarySource { kDifferentiable, kExternalPeaks, kManual, kFrames };

const char* boundary_source_name(BoundarySource source);
BoundarySource parse_boundary_source(const std::string& name);

/// Hard segment indicators from sorted gap indices.
Matrix indicators_from_gaps(const std::vector<Index>& gaps, Index frames);

/// Gap indices nearest to the interior boundaries of an alignment.
std::vector<Index> gaps_from_alignment(const Alignment& alignment, Index frames);

/// One segment-encoder output per segment under the chosen boundaries.
/// Throws MissingAlignment in manual mode without an alignment.
FeatureBlock extract_segment_features(ScpcModel& model, const std::string& id, const Matrix& input,
                                      BoundarySource source, const std::optional<Alignment>& alignment = {},
                                      double prominence = 0.0);

/// Repeats each segment vector over its frames; throws InconsistentLengths
/// when gaps, rows and frame_count disagree.
Matrix expand_to_frames(const FeatureBlock& block);

/// Segments per second over all blocks.
double average_sampling_rate(const std::vector<FeatureBlock>& blocks, double total_duration_s);

/// Per-frame class index from the interval holding each frame centre; -1
/// where no interval applies or the label folds away.
std::vector<int> frame_labels(const Alignment& alignment, Index frames, const std::vector<std::string>& classes,
                              const LabelFoldTable& table = LabelFoldTable::timit_default());

struct ProbeData {
  Matrix x;
  std::vector<int> y;  // -1 rows are ignored
};

struct ProbeOptions {
  double lr = 0.01;
  int max_epochs = 500;
  int patience = 10;
};

struct ProbeResult {
  double val_accuracy = 0;   // percent
  double test_accuracy = 0;  // percent
  double average_sampling_rate_train = 0;
  double average_sampling_rate_test = 0;
  int epochs = 0;
};

/// Softmax regression on standardised features, full-batch Adam from zero
/// weights; stops after `patience` epochs without a validation gain and
/// reports the best-validation weights.
ProbeResult linear_probe(const ProbeData& train, const ProbeData& val, const ProbeData& test, int classes,
                         const ProbeOptions& options = {});

/// 13 cepstra plus deltas and delta-deltas, 25 ms window, 10 ms hop.
Matrix mfcc(const Eigen::VectorXd& samples);

}  // namespace scpc

#endif  // SCPC_VARRATE_HPP_

// scpc/training.hpp

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

#ifndef SCPC_TRAINING_HPP_
#define SCPC_TRAINING_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scpc/model.hpp"

namespace scpc {

struct TrainConfig {
  ModelConfig model;
  int batch_size = 8;
  double lr = 1e-4;
  int epochs = 100;
  int nsc_start_epoch = 2;
  NegativeSamplingPolicy negatives;
  std::uint64_t seed = 0;
  double clip_norm = 0.0;  // 0 disables clipping
  double val_fraction = 0.1;

  void validate() const;

  /// Applies one key=value setting; throws InvalidConfig on unknown keys or
  /// unparsable values.
  void set(const std::string& key, const std::string& value);
  std::map<std::string, std::string> to_map() const;
};

/// Flat key=value file; '#' starts a comment.
TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base = {});
void save_train_config(const std::filesystem::path& path, const TrainConfig& config);

/// One training or validation item: encoder input plus optional references.
struct Example {
  std::string id;
  Matrix input;
  std::optional<Alignment> phones;
  std::optional<Alignment> words;
};

std::vector<Example> waveform_examples(const std::vector<Utterance>& utts);

struct LossParts {
  Var total;
  double frame = 0;  // next-frame or multi-step term
  double segment = 0;
  bool segment_active = false;
  int segment_used = 0;
  int segment_skipped = 0;
};

/// L_frame for epoch < nsc_start_epoch, L_frame + L_NSC afterwards; falls back
/// to L_frame when no utterance has three segments.
LossParts combined_loss(ScpcModel& model, std::span<const Matrix> batch, const TrainConfig& config, int epoch,
                        Rng& rng);

struct EpochLog {
  int epoch = 0;
  double loss_frame = 0;
  double loss_segment = 0;
  double val_r_value = 0;
  double thres = 0;
};

struct Checkpoint {
  TrainConfig config;
  int epoch = -1;
  double best_val_r_value = -std::numeric_limits<double>::infinity();
  std::string rng_state;
  std::map<std::string, std::map<std::string, Matrix>> groups;
};

Checkpoint make_checkpoint(ScpcModel& model, const TrainConfig& config, int epoch, double best, const Rng& rng);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Rebuilds the model described by a checkpoint and copies its tensors in.
ScpcModel restore_model(const Checkpoint& ckpt);

struct TrainResult {
  std::vector<EpochLog> log;
  double best_val_r_value = -std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  std::filesystem::path best_checkpoint;
  std::filesystem::path last_checkpoint;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Epoch loop with per-epoch validation phone R-value (prominence tuned on
/// the default grid). Writes best.ckpt, last.ckpt and metrics.tsv into
/// out_dir when it is non-empty.
TrainResult train(const std::vector<Example>& train_set, const std::vector<Example>& val_set,
                  const TrainConfig& config, const std::filesystem::path& out_dir,
                  const EpochCallback& on_epoch = {});

/// Same, returning the trained model in place.
TrainResult train(ScpcModel& model, const std::vector<Example>& train_set, const std::vector<Example>& val_set,
                  const TrainConfig& config, const std::filesystem::path& out_dir, const EpochCallback& on_epoch = {});

/// Pooled validation phone R-value at the best grid prominence.
double validation_r_value(ScpcModel& model, const std::vector<Example>& val_set, double* prominence = nullptr);

}  // namespace scpc

#endif  // SCPC_TRAINING_HPP_

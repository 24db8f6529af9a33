// scpc/corpus.hpp

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

// Corpus ingestion: 16 kHz mono PCM audio, TIMIT-style time alignments,
// manifests, phone label folding, chunking of long recordings, deterministic
// splits and batching, and a synthetic corpus generator.

#ifndef SCPC_CORPUS_HPP_
#define SCPC_CORPUS_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace scpc {

inline constexpr int kSampleRate = 16000;

struct LabeledInterval {
  double start_s = 0;
  double end_s = 0;
  std::string label;
};

using Alignment = std::vector<LabeledInterval>;

struct Utterance {
  std::string id;
  Eigen::VectorXd samples;  // in [-1, 1)
  std::optional<Alignment> phone_alignment;
  std::optional<Alignment> word_alignment;

  double duration_s() const { return static_cast<double>(samples.size()) / kSampleRate; }
};

enum class Split { kTrain, kVal, kTest };

const char* split_name(Split split);
Split parse_split(const std::string& name);

struct ManifestEntry {
  std::string utt_id;
  std::filesystem::path wav_path;
  std::optional<std::filesystem::path> phone_path;
  std::optional<std::filesystem::path> word_path;
};

struct CorpusManifest {
  Split split = Split::kTrain;
  std::vector<ManifestEntry> entries;
};

/// Reads `<utt_id>\t<wav>\t<phn|->\t<wrd|->` lines. Blank lines and lines
/// starting with '#' are skipped, except a leading `#split=<name>` directive.
/// Relative paths resolve against the manifest's directory.
CorpusManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const CorpusManifest& manifest);

/// `<start_sample> <end_sample> <label>` lines converted to seconds.
Alignment parse_alignment(const std::filesystem::path& path, int sample_rate = kSampleRate);
void write_alignment(const std::filesystem::path& path, const Alignment& alignment,
                     int sample_rate = kSampleRate);
/// Validation shared by the parser and in-memory constructors.
void validate_alignment(const Alignment& alignment);

Eigen::VectorXd read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const Eigen::VectorXd& samples);

Utterance load_utterance(const ManifestEntry& entry);
std::vector<Utterance> load_corpus(const CorpusManifest& manifest);

// ---- label folding -------------------------------------------------------

enum class FoldMode { kBroad, kProbe48 };

/// The ten broad phonetic classes, in reporting order.
const std::vector<std::string>& broad_classes();
/// The 61-label TIMIT phone inventory.
const std::vector<std::string>& timit_phones();

class LabelFoldTable {
 public:
  /// Built-in TIMIT tables: ten broad classes and the 61 -> 48 folding.
  static const LabelFoldTable& timit_default();
  /// Reads a pair of two-column `<phone> <class>` files.
  static LabelFoldTable from_files(const std::filesystem::path& broad,
                                   const std::filesystem::path& probe48);

  /// Throws UnknownLabel. The 48-fold of the glottal stop "q" is the empty
  /// string: those frames are excluded from probing.
  const std::string& fold(const std::string& label, FoldMode mode) const;
  bool contains(const std::string& label) const { return broad_.count(label) > 0; }
  bool is_non_speech(const std::string& label) const;

  const std::map<std::string, std::string>& broad_map() const { return broad_; }
  const std::map<std::string, std::string>& probe_map() const { return probe48_; }
  /// Sorted distinct non-empty 48-fold labels.
  std::vector<std::string> probe_labels() const;

  void write(const std::filesystem::path& broad, const std::filesystem::path& probe48) const;

 private:
  std::map<std::string, std::string> broad_;
  std::map<std::string, std::string> probe48_;
};

std::string fold_phone_label(const std::string& label, FoldMode mode);

// ---- chunking, splits, batching -----------------------------------------

/// Splits at the midpoint of every non-speech stretch longer than 40 ms and
/// trims chunk edges to at most 20 ms of non-speech. Non-speech is any label
/// folding to "Others" plus unlabeled gaps. Pure-silence input yields nothing;
/// input without non-speech is returned as is.
std::vector<Utterance> chunk_long_recording(const Utterance& utt,
                                            const LabelFoldTable& table = LabelFoldTable::timit_default());

std::uint64_t stable_hash(std::uint64_t seed, const std::string& text);

/// Moves ceil(fraction * N) entries, chosen by seeded hash of the utterance
/// id, into a validation manifest. Returns {train, val}.
std::pair<CorpusManifest, CorpusManifest> split_validation(const CorpusManifest& train,
                                                           double fraction, std::uint64_t seed);

/// Deterministic shuffled batches of indices for (seed, epoch).
std::vector<std::vector<std::size_t>> batch_order(std::size_t count, std::size_t batch_size,
                                                  std::uint64_t seed, int epoch);

// ---- synthetic corpus ----------------------------------------------------

struct SyntheticOptions {
  int num_utterances = 10;
  double min_phone_s = 0.06;
  double max_phone_s = 0.16;
  int min_phones = 8;
  int max_phones = 14;
  int min_word_phones = 2;
  int max_word_phones = 4;
  double edge_silence_s = 0.05;
  double noise_std = 0.01;
  std::uint64_t seed = 0;
};

/// Piecewise-stationary "phones": each label owns a fixed mixture of tones,
/// consecutive phones differ, and utterances begin and end with low-level
/// noise labelled h#. Phone and word alignments are exact by construction.
std::vector<Utterance> synthesize_corpus(const SyntheticOptions& options);

/// Writes wav/phn/wrd files plus a manifest; returns the manifest path.
std::filesystem::path write_corpus(const std::vector<Utterance>& utts,
                                   const std::filesystem::path& dir, const std::string& name,
                                   Split split);

}  // namespace scpc

#endif  // SCPC_CORPUS_HPP_

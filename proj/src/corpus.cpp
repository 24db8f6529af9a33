// src/corpus.cpp

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

#include "scpc/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "scpc/error.hpp"

namespace scpc {

namespace fs = std::filesystem;

const char* split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw Error(ErrorCode::kMalformedManifest, "unknown split '" + name + "'");
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '\t')) out.push_back(field);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \r\n\t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \r\n\t");
  return s.substr(b, e - b + 1);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

void require_file(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::kMissingFile, path.string());
}

}  // namespace

CorpusManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());
  const fs::path base = path.parent_path();
  CorpusManifest manifest;
  std::set<std::string> ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      if (t.rfind("#split=", 0) == 0) manifest.split = parse_split(trim(t.substr(7)));
      continue;
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_tabs(line);
    if (fields.size() != 4)
      throw Error(ErrorCode::kMalformedManifest,
                  path.string() + ":" + std::to_string(line_no) + ": expected 4 tab-separated fields");
    ManifestEntry entry;
    entry.utt_id = trim(fields[0]);
    if (entry.utt_id.empty() || trim(fields[1]).empty())
      throw Error(ErrorCode::kMalformedManifest,
                  path.string() + ":" + std::to_string(line_no) + ": empty utterance id or wav path");
    if (!ids.insert(entry.utt_id).second)
      throw Error(ErrorCode::kMalformedManifest,
                  path.string() + ":" + std::to_string(line_no) + ": duplicate id " + entry.utt_id);
    entry.wav_path = resolve(base, trim(fields[1]));
    require_file(entry.wav_path);
    if (trim(fields[2]) != "-") {
      entry.phone_path = resolve(base, trim(fields[2]));
      require_file(*entry.phone_path);
    }
    if (trim(fields[3]) != "-") {
      entry.word_path = resolve(base, trim(fields[3]));
      require_file(*entry.word_path);
    }
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

void save_manifest(const fs::path& path, const CorpusManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + path.string());
  out << "#split=" << split_name(manifest.split) << "\n";
  for (const auto& e : manifest.entries) {
    out << e.utt_id << '\t' << e.wav_path.string() << '\t'
        << (e.phone_path ? e.phone_path->string() : "-") << '\t'
        << (e.word_path ? e.word_path->string() : "-") << '\n';
  }
}

void validate_alignment(const Alignment& alignment) {
  double previous_end = 0;
  for (std::size_t i = 0; i < alignment.size(); ++i) {
    const auto& iv = alignment[i];
    if (iv.end_s <= iv.start_s)
      throw Error(ErrorCode::kNegativeDuration,
                  "interval " + std::to_string(i) + " (" + iv.label + ") ends before it starts");
    if (iv.start_s < 0 || iv.start_s < previous_end - 1e-9)
      throw Error(ErrorCode::kNonMonotoneAlignment,
                  "interval " + std::to_string(i) + " (" + iv.label + ") overlaps its predecessor");
    if (iv.label.empty()) throw Error(ErrorCode::kMalformedFile, "empty label");
    previous_end = iv.end_s;
  }
}

Alignment parse_alignment(const fs::path& path, int sample_rate) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());
  Alignment out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::istringstream fields(line);
    long long start = 0;
    long long end = 0;
    std::string label;
    if (!(fields >> start >> end >> label))
      throw Error(ErrorCode::kMalformedFile, path.string() + ":" + std::to_string(line_no));
    if (end <= start)
      throw Error(ErrorCode::kNegativeDuration, path.string() + ":" + std::to_string(line_no));
    const double sr = sample_rate;
    if (!out.empty() && start / sr < out.back().end_s - 1e-9)
      throw Error(ErrorCode::kNonMonotoneAlignment, path.string() + ":" + std::to_string(line_no));
    if (start < 0)
      throw Error(ErrorCode::kNonMonotoneAlignment, path.string() + ":" + std::to_string(line_no));
    out.push_back({start / sr, end / sr, label});
  }
  return out;
}

void write_alignment(const fs::path& path, const Alignment& alignment, int sample_rate) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + path.string());
  for (const auto& iv : alignment) {
    out << std::llround(iv.start_s * sample_rate) << ' ' << std::llround(iv.end_s * sample_rate)
        << ' ' << iv.label << '\n';
  }
}

namespace {

std::uint32_t read_u32(const char* p) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(p[0])) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(p[1])) << 8) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(p[2])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(p[3])) << 24);
}

std::uint16_t read_u16(const char* p) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(p[0]) |
                                    (static_cast<unsigned char>(p[1]) << 8));
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

void put_u16(std::ostream& out, std::uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

}  // namespace

Eigen::VectorXd read_wav(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw Error(ErrorCode::kMalformedFile, path.string() + ": not a RIFF/WAVE file");
  std::size_t pos = 12;
  bool have_fmt = false;
  while (pos + 8 <= bytes.size()) {
    const char* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + 16 > bytes.size())
        throw Error(ErrorCode::kMalformedFile, path.string() + ": short fmt chunk");
      const std::uint16_t format = read_u16(bytes.data() + body);
      const std::uint16_t channels = read_u16(bytes.data() + body + 2);
      const std::uint32_t rate = read_u32(bytes.data() + body + 4);
      const std::uint16_t bits = read_u16(bytes.data() + body + 14);
      if (format != 1 || channels != 1 || rate != kSampleRate || bits != 16)
        throw Error(ErrorCode::kUnsupportedAudio,
                    path.string() + ": need 16 kHz mono 16-bit PCM (got format " +
                        std::to_string(format) + ", " + std::to_string(channels) + " ch, " +
                        std::to_string(rate) + " Hz, " + std::to_string(bits) + " bit)");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw Error(ErrorCode::kMalformedFile, path.string() + ": data before fmt");
      const std::size_t n = std::min<std::size_t>(size, bytes.size() - body) / 2;
      Eigen::VectorXd samples(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        const auto v = static_cast<std::int16_t>(read_u16(bytes.data() + body + 2 * i));
        samples(static_cast<Eigen::Index>(i)) = v / 32768.0;
      }
      if (n == 0) throw Error(ErrorCode::kMalformedFile, path.string() + ": no samples");
      return samples;
    }
    pos = body + size + (size & 1);
  }
  throw Error(ErrorCode::kMalformedFile, path.string() + ": no data chunk");
}

void write_wav(const fs::path& path, const Eigen::VectorXd& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + path.string());
  const auto n = static_cast<std::uint32_t>(samples.size());
  out.write("RIFF", 4);
  put_u32(out, 36 + 2 * n);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, kSampleRate);
  put_u32(out, kSampleRate * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.write("data", 4);
  put_u32(out, 2 * n);
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    const double v = std::clamp(samples(i), -1.0, 32767.0 / 32768.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(v * 32768.0))));
  }
}

namespace {

// Clips intervals to [0, duration]; drops anything left empty.
Alignment clip_alignment(Alignment alignment, double duration) {
  Alignment out;
  for (auto& iv : alignment) {
    iv.end_s = std::min(iv.end_s, duration);
    if (iv.end_s > iv.start_s) out.push_back(std::move(iv));
  }
  return out;
}

}  // namespace

Utterance load_utterance(const ManifestEntry& entry) {
  Utterance utt;
  utt.id = entry.utt_id;
  utt.samples = read_wav(entry.wav_path);
  if (entry.phone_path) utt.phone_alignment = clip_alignment(parse_alignment(*entry.phone_path), utt.duration_s());
  if (entry.word_path) utt.word_alignment = clip_alignment(parse_alignment(*entry.word_path), utt.duration_s());
  return utt;
}

std::vector<Utterance> load_corpus(const CorpusManifest& manifest) {
  std::vector<Utterance> out;
  out.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) out.push_back(load_utterance(e));
  return out;
}

// ---- label folding -------------------------------------------------------

const std::vector<std::string>& broad_classes() {
  static const std::vector<std::string> classes = {
      "Affricates", "Closures", "Voiceless Fricatives", "Voiced Fricatives", "Nasals",
      "Semivowels", "Vowels",   "Voiceless Stops",      "Voiced Stops",      "Others"};
  return classes;
}

namespace {

// Phone groups of the broad-class table. "hh" is absent from the published
// grouping; it sits with its voiced allophone "hv".
const std::vector<std::pair<std::string, std::vector<std::string>>>& broad_groups() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> groups = {
      {"Affricates", {"jh", "ch"}},
      {"Closures", {"bcl", "dcl", "gcl", "pcl", "tcl", "kcl"}},
      {"Voiceless Fricatives", {"s", "sh", "f", "th", "hv", "hh"}},
      {"Voiced Fricatives", {"z", "zh", "v", "dh"}},
      {"Nasals", {"m", "n", "ng", "em", "en", "eng", "nx"}},
      {"Semivowels", {"l", "r", "w", "y", "el"}},
      {"Vowels", {"iy", "ih", "eh", "ey", "ae", "aa", "aw", "ay", "ah", "ao", "oy", "ow", "uh", "uw",
                  "ux", "er", "ax", "ix", "axr", "ax-h"}},
      {"Voiceless Stops", {"p", "t", "k", "dx", "q"}},
      {"Voiced Stops", {"b", "d", "g"}},
      {"Others", {"pau", "epi", "h#"}},
  };
  return groups;
}

// Lee & Hon 61 -> 48 folding; identity for phones not listed, "" for q.
const std::map<std::string, std::string>& kfl_exceptions() {
  static const std::map<std::string, std::string> m = {
      {"ux", "uw"},  {"axr", "er"}, {"ax-h", "ax"}, {"em", "m"},    {"nx", "n"},
      {"eng", "ng"}, {"hv", "hh"},  {"pcl", "cl"},  {"tcl", "cl"},  {"kcl", "cl"},
      {"bcl", "vcl"}, {"dcl", "vcl"}, {"gcl", "vcl"}, {"h#", "sil"}, {"pau", "sil"},
      {"q", ""},
  };
  return m;
}

std::map<std::string, std::string> read_fold_file(const fs::path& path, bool allow_empty_class) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());
  std::map<std::string, std::string> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto sep = t.find_first_of(" \t");
    std::string phone = sep == std::string::npos ? t : t.substr(0, sep);
    std::string cls = sep == std::string::npos ? "" : trim(t.substr(sep));
    if (cls == "-") cls.clear();
    if (cls.empty() && !allow_empty_class)
      throw Error(ErrorCode::kMalformedFile, path.string() + ":" + std::to_string(line_no));
    out[phone] = cls;
  }
  return out;
}

}  // namespace

const std::vector<std::string>& timit_phones() {
  static const std::vector<std::string> phones = [] {
    std::vector<std::string> v;
    for (const auto& [cls, group] : broad_groups())
      for (const auto& p : group) v.push_back(p);
    return v;
  }();
  return phones;
}

const LabelFoldTable& LabelFoldTable::timit_default() {
  static const LabelFoldTable table = [] {
    LabelFoldTable t;
    for (const auto& [cls, group] : broad_groups())
      for (const auto& p : group) t.broad_[p] = cls;
    for (const auto& [p, cls] : t.broad_) {
      auto it = kfl_exceptions().find(p);
      t.probe48_[p] = it == kfl_exceptions().end() ? p : it->second;
    }
    return t;
  }();
  return table;
}

LabelFoldTable LabelFoldTable::from_files(const fs::path& broad, const fs::path& probe48) {
  LabelFoldTable t;
  t.broad_ = read_fold_file(broad, false);
  t.probe48_ = read_fold_file(probe48, true);
  const auto& classes = broad_classes();
  for (const auto& [p, cls] : t.broad_)
    if (std::find(classes.begin(), classes.end(), cls) == classes.end())
      throw Error(ErrorCode::kMalformedFile, broad.string() + ": unknown broad class '" + cls + "'");
  return t;
}

const std::string& LabelFoldTable::fold(const std::string& label, FoldMode mode) const {
  const auto& m = mode == FoldMode::kBroad ? broad_ : probe48_;
  auto it = m.find(label);
  if (it == m.end()) throw Error(ErrorCode::kUnknownLabel, "'" + label + "'");
  return it->second;
}

bool LabelFoldTable::is_non_speech(const std::string& label) const {
  return fold(label, FoldMode::kBroad) == "Others";
}

std::vector<std::string> LabelFoldTable::probe_labels() const {
  std::set<std::string> s;
  for (const auto& [p, c] : probe48_)
    if (!c.empty()) s.insert(c);
  return {s.begin(), s.end()};
}

void LabelFoldTable::write(const fs::path& broad, const fs::path& probe48) const {
  std::ofstream b(broad);
  for (const auto& [p, c] : broad_) b << p << ' ' << c << '\n';
  std::ofstream q(probe48);
  for (const auto& [p, c] : probe48_) q << p << ' ' << (c.empty() ? "-" : c) << '\n';
}

std::string fold_phone_label(const std::string& label, FoldMode mode) {
  return LabelFoldTable::timit_default().fold(label, mode);
}

// ---- chunking ------------------------------------------------------------

namespace {

Alignment rebase(const Alignment& alignment, double start, double end) {
  Alignment out;
  for (const auto& iv : alignment) {
    const double s = std::max(iv.start_s, start);
    const double e = std::min(iv.end_s, end);
    if (e - s > 0.5 / kSampleRate) out.push_back({s - start, e - start, iv.label});
  }
  return out;
}

}  // namespace

std::vector<Utterance> chunk_long_recording(const Utterance& utt, const LabelFoldTable& table) {
  if (!utt.phone_alignment)
    throw Error(ErrorCode::kMissingAlignment, utt.id + ": chunking needs a phone alignment");
  const Alignment& phones = *utt.phone_alignment;
  const double duration = utt.duration_s();
  constexpr double kEdge = 0.020;
  constexpr double kSplitGap = 0.040;

  // Speech stretches as merged [start, end) intervals.
  std::vector<std::pair<double, double>> speech;
  for (const auto& iv : phones) {
    if (table.is_non_speech(iv.label)) continue;
    if (!speech.empty() && iv.start_s <= speech.back().second + 1e-9)
      speech.back().second = std::max(speech.back().second, iv.end_s);
    else
      speech.emplace_back(iv.start_s, iv.end_s);
  }
  if (speech.empty()) return {};
  const bool has_non_speech = speech.size() > 1 || speech.front().first > 1e-9 ||
                              speech.back().second < duration - 1e-9;
  if (!has_non_speech) return {utt};

  std::vector<double> cuts;
  for (std::size_t i = 0; i + 1 < speech.size(); ++i) {
    const double gap = speech[i + 1].first - speech[i].second;
    if (gap > kSplitGap) cuts.push_back(0.5 * (speech[i].second + speech[i + 1].first));
  }

  std::vector<Utterance> out;
  std::size_t next_speech = 0;
  double chunk_start = 0;
  for (std::size_t c = 0; c <= cuts.size(); ++c) {
    const double chunk_end = c < cuts.size() ? cuts[c] : duration;
    double first = -1;
    double last = -1;
    for (; next_speech < speech.size() && speech[next_speech].first < chunk_end; ++next_speech) {
      if (first < 0) first = speech[next_speech].first;
      last = speech[next_speech].second;
    }
    if (first >= 0) {
      const double s = std::max(chunk_start, first - kEdge);
      const double e = std::min(chunk_end, last + kEdge);
      const auto s_idx = static_cast<Eigen::Index>(std::floor(s * kSampleRate + 1e-6));
      const auto e_idx = std::min<Eigen::Index>(utt.samples.size(),
                                                static_cast<Eigen::Index>(std::ceil(e * kSampleRate - 1e-6)));
      const double s_time = static_cast<double>(s_idx) / kSampleRate;
      const double e_time = static_cast<double>(e_idx) / kSampleRate;
      Utterance chunk;
      char suffix[16];
      std::snprintf(suffix, sizeof(suffix), "_c%03zu", out.size());
      chunk.id = utt.id + suffix;
      chunk.samples = utt.samples.segment(s_idx, e_idx - s_idx);
      chunk.phone_alignment = rebase(phones, s_time, e_time);
      if (utt.word_alignment) chunk.word_alignment = rebase(*utt.word_alignment, s_time, e_time);
      out.push_back(std::move(chunk));
    }
    chunk_start = chunk_end;
  }
  return out;
}

// ---- splits and batching -------------------------------------------------

std::uint64_t stable_hash(std::uint64_t seed, const std::string& text) {
  // FNV-1a over the little-endian seed bytes followed by the text.
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>((seed >> (8 * i)) & 0xff));
  for (unsigned char c : text) mix(c);
  return h;
}

std::pair<CorpusManifest, CorpusManifest> split_validation(const CorpusManifest& train, double fraction,
                                                           std::uint64_t seed) {
  const std::size_t n = train.entries.size();
  const auto n_val = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ha = stable_hash(seed, train.entries[a].utt_id);
    const auto hb = stable_hash(seed, train.entries[b].utt_id);
    return ha != hb ? ha < hb : train.entries[a].utt_id < train.entries[b].utt_id;
  });
  std::vector<bool> is_val(n, false);
  for (std::size_t i = 0; i < n_val && i < n; ++i) is_val[order[i]] = true;
  CorpusManifest tr{Split::kTrain, {}};
  CorpusManifest va{Split::kVal, {}};
  for (std::size_t i = 0; i < n; ++i) (is_val[i] ? va : tr).entries.push_back(train.entries[i]);
  return {tr, va};
}

std::vector<std::vector<std::size_t>> batch_order(std::size_t count, std::size_t batch_size,
                                                  std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(stable_hash(seed, "epoch" + std::to_string(epoch)));
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle implementation.
  for (std::size_t i = count; i > 1; --i) {
    const std::size_t j = rng() % i;
    std::swap(order[i - 1], order[j]);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < count; i += batch_size)
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(count, i + batch_size)));
  return batches;
}

// ---- synthetic corpus ----------------------------------------------------

namespace {

struct ToneSpec {
  std::string label;
  std::vector<std::pair<double, double>> partials;  // (Hz, amplitude)
};

const std::vector<ToneSpec>& synthetic_inventory() {
  static const std::vector<ToneSpec> inventory = {
      {"aa", {{700, 0.30}, {1200, 0.20}}},
      {"iy", {{300, 0.30}, {2300, 0.15}}},
      {"m", {{250, 0.35}, {1000, 0.05}}},
      {"s", {{4500, 0.15}, {6000, 0.15}}},
      {"eh", {{550, 0.30}, {1800, 0.20}}},
      {"l", {{400, 0.30}, {900, 0.15}}},
      {"z", {{3500, 0.15}, {5200, 0.10}}},
      {"uw", {{330, 0.30}, {800, 0.25}}},
  };
  return inventory;
}

const ToneSpec& synthetic_silence() {
  static const ToneSpec silence = {"h#", {{150, 0.02}}};
  return silence;
}

}  // namespace

std::vector<Utterance> synthesize_corpus(const SyntheticOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, opt.noise_std);
  const auto& inventory = synthetic_inventory();
  const int n_inv = static_cast<int>(inventory.size());
  std::vector<Utterance> out;
  for (int u = 0; u < opt.num_utterances; ++u) {
    const int n_phones = opt.min_phones + static_cast<int>(rng() % static_cast<unsigned>(opt.max_phones - opt.min_phones + 1));
    std::vector<const ToneSpec*> seq;
    seq.push_back(&synthetic_silence());
    int prev = -1;
    for (int i = 0; i < n_phones; ++i) {
      int k = 0;
      do {
        k = static_cast<int>(rng() % static_cast<unsigned>(n_inv));
      } while (k == prev);
      prev = k;
      seq.push_back(&inventory[static_cast<std::size_t>(k)]);
    }
    seq.push_back(&synthetic_silence());

    std::vector<long> lengths;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const bool edge = i == 0 || i + 1 == seq.size();
      const double d = edge ? opt.edge_silence_s
                            : opt.min_phone_s + (opt.max_phone_s - opt.min_phone_s) * unit(rng);
      lengths.push_back(std::lround(d * kSampleRate));
    }
    const long total = std::accumulate(lengths.begin(), lengths.end(), 0L);
    Utterance utt;
    char id[32];
    std::snprintf(id, sizeof(id), "syn%04d", u);
    utt.id = id;
    utt.samples.resize(total);
    Alignment phones;
    long pos = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      std::vector<double> phase;
      for (std::size_t p = 0; p < seq[i]->partials.size(); ++p) phase.push_back(2 * M_PI * unit(rng));
      for (long n = 0; n < lengths[i]; ++n) {
        double v = 0;
        for (std::size_t p = 0; p < seq[i]->partials.size(); ++p) {
          const auto [hz, amp] = seq[i]->partials[p];
          v += amp * std::sin(2 * M_PI * hz * static_cast<double>(n) / kSampleRate + phase[p]);
        }
        utt.samples(pos + n) = v + noise(rng);
      }
      phones.push_back({static_cast<double>(pos) / kSampleRate,
                        static_cast<double>(pos + lengths[i]) / kSampleRate, seq[i]->label});
      pos += lengths[i];
    }
    // Words: consecutive runs of non-silence phones.
    Alignment words;
    std::size_t i = 1;
    int word_no = 0;
    while (i + 1 < phones.size()) {
      const int span = opt.min_word_phones +
                       static_cast<int>(rng() % static_cast<unsigned>(opt.max_word_phones - opt.min_word_phones + 1));
      const std::size_t j = std::min(phones.size() - 1, i + static_cast<std::size_t>(span));
      words.push_back({phones[i].start_s, phones[j - 1].end_s, "w" + std::to_string(word_no++)});
      i = j;
    }
    utt.phone_alignment = std::move(phones);
    utt.word_alignment = std::move(words);
    out.push_back(std::move(utt));
  }
  return out;
}

fs::path write_corpus(const std::vector<Utterance>& utts, const fs::path& dir, const std::string& name,
                      Split split) {
  fs::create_directories(dir / name);
  CorpusManifest manifest{split, {}};
  for (const auto& utt : utts) {
    ManifestEntry e;
    e.utt_id = utt.id;
    e.wav_path = fs::path(name) / (utt.id + ".wav");
    write_wav(dir / e.wav_path, utt.samples);
    if (utt.phone_alignment) {
      e.phone_path = fs::path(name) / (utt.id + ".phn");
      write_alignment(dir / *e.phone_path, *utt.phone_alignment);
    }
    if (utt.word_alignment) {
      e.word_path = fs::path(name) / (utt.id + ".wrd");
      write_alignment(dir / *e.word_path, *utt.word_alignment);
    }
    manifest.entries.push_back(std::move(e));
  }
  const fs::path manifest_path = dir / (name + ".tsv");
  save_manifest(manifest_path, manifest);
  return manifest_path;
}

}  // namespace scpc

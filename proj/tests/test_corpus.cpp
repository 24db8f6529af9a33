// tests/test_corpus.cpp

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "scpc/corpus.hpp"
#include "scpc/error.hpp"
#include "test_util.hpp"

using namespace scpc;

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

Utterance make_utt(const std::string& id, double seconds, Alignment phones) {
  Utterance u;
  u.id = id;
  u.samples = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(std::llround(seconds * kSampleRate)), 0.1);
  u.phone_alignment = std::move(phones);
  return u;
}

double speech_time(const Utterance& u) {
  double t = 0;
  for (const auto& iv : *u.phone_alignment)
    if (!LabelFoldTable::timit_default().is_non_speech(iv.label)) t += iv.end_s - iv.start_s;
  return t;
}

double edge_silence(const Utterance& u, bool front) {
  const auto& table = LabelFoldTable::timit_default();
  const Alignment& a = *u.phone_alignment;
  if (front) {
    for (const auto& iv : a)
      if (!table.is_non_speech(iv.label)) return iv.start_s;
  } else {
    for (auto it = a.rbegin(); it != a.rend(); ++it)
      if (!table.is_non_speech(it->label)) return u.duration_s() - it->end_s;
  }
  return u.duration_s();
}

// Independent FNV-1a over the seed bytes then the id.
std::uint64_t fnv(std::uint64_t seed, const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int i = 0; i < 8; ++i) {
    h ^= (seed >> (8 * i)) & 0xffu;
    h *= 0x100000001b3ULL;
  }
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

TEST_CASE("alignment parsing") {
  auto dir = testing::temp_dir("align");
  write_text(dir / "a.phn", "0 1600 h#\n1600 3200 iy\n");
  auto a = parse_alignment(dir / "a.phn");
  REQUIRE(a.size() == 2);
  CHECK(a[0].start_s == 0.0);
  CHECK(a[0].end_s == doctest::Approx(0.1));
  CHECK(a[0].label == "h#");

  write_text(dir / "empty.phn", "");
  CHECK(parse_alignment(dir / "empty.phn").empty());

  write_text(dir / "overlap.phn", "0 1600 h#\n1500 3200 iy\n");
  try {
    parse_alignment(dir / "overlap.phn");
    FAIL("expected NonMonotoneAlignment");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonMonotoneAlignment);
  }
  write_text(dir / "neg.phn", "1600 1600 iy\n");
  try {
    parse_alignment(dir / "neg.phn");
    FAIL("expected NegativeDuration");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNegativeDuration);
  }
}

TEST_CASE("alignment round trip") {
  auto dir = testing::temp_dir("roundtrip");
  Alignment a{{0.0, 0.05, "h#"}, {0.05, 0.125, "s"}, {0.2, 0.31, "iy"}};
  write_alignment(dir / "x.phn", a);
  auto b = parse_alignment(dir / "x.phn");
  REQUIRE(b.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(b[i].start_s == doctest::Approx(a[i].start_s));
    CHECK(b[i].end_s == doctest::Approx(a[i].end_s));
    CHECK(b[i].label == a[i].label);
  }
}

TEST_CASE("manifest loading") {
  auto dir = testing::temp_dir("manifest");
  write_wav(dir / "u1.wav", Eigen::VectorXd::Zero(800));
  write_wav(dir / "u2.wav", Eigen::VectorXd::Zero(800));
  write_text(dir / "u1.phn", "0 800 h#\n");
  write_text(dir / "m.tsv", "u1\tu1.wav\tu1.phn\t-\nu2\tu2.wav\t-\t-\n");
  auto m = load_manifest(dir / "m.tsv");
  CHECK(m.entries.size() == 2);
  CHECK(m.entries[0].phone_path.has_value());
  CHECK_FALSE(m.entries[1].phone_path.has_value());

  write_text(dir / "bad.tsv", "u1\tmissing.wav\t-\t-\n");
  try {
    load_manifest(dir / "bad.tsv");
    FAIL("expected MissingFile");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingFile);
  }
  write_text(dir / "malformed.tsv", "u1\tu1.wav\t-\t-\nonly_two\tfields\n");
  try {
    load_manifest(dir / "malformed.tsv");
    FAIL("expected MalformedManifest");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMalformedManifest);
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("wav round trip and format checks") {
  auto dir = testing::temp_dir("wav");
  Eigen::VectorXd x(5);
  x << 0.0, 0.5, -0.5, 0.25, -1.0;
  write_wav(dir / "x.wav", x);
  auto y = read_wav(dir / "x.wav");
  REQUIRE(y.size() == 5);
  CHECK((x - y).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("fold tables") {
  CHECK(fold_phone_label("jh", FoldMode::kBroad) == "Affricates");
  CHECK(fold_phone_label("iy", FoldMode::kBroad) == "Vowels");
  CHECK(fold_phone_label("pau", FoldMode::kBroad) == "Others");
  std::set<std::string> classes;
  for (const auto& p : timit_phones()) classes.insert(fold_phone_label(p, FoldMode::kBroad));
  CHECK(timit_phones().size() == 61);
  CHECK(classes.size() == 10);
  CHECK(classes == std::set<std::string>(broad_classes().begin(), broad_classes().end()));
  std::set<std::string> probe;
  for (const auto& p : timit_phones()) {
    const auto& l = fold_phone_label(p, FoldMode::kProbe48);
    if (!l.empty()) probe.insert(l);
  }
  CHECK(probe.size() == 48);
  try {
    fold_phone_label("zzz", FoldMode::kBroad);
    FAIL("expected UnknownLabel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnknownLabel);
  }
}

TEST_CASE("fold table files round trip") {
  auto dir = testing::temp_dir("fold");
  const auto& t = LabelFoldTable::timit_default();
  t.write(dir / "broad.txt", dir / "p48.txt");
  auto u = LabelFoldTable::from_files(dir / "broad.txt", dir / "p48.txt");
  CHECK(u.broad_map() == t.broad_map());
  CHECK(u.probe_map() == t.probe_map());
}

TEST_CASE("shipped fold files match the built-in tables") {
  const std::filesystem::path fold = std::filesystem::path(SCPC_SOURCE_DIR) / "data" / "fold";
  auto u = LabelFoldTable::from_files(fold / "broad10.txt", fold / "timit48.txt");
  CHECK(u.broad_map() == LabelFoldTable::timit_default().broad_map());
  CHECK(u.probe_map() == LabelFoldTable::timit_default().probe_map());
}

TEST_CASE("chunking long recordings") {
  // 60 s: speech 0.5-30, silence 30-32, speech 32-59.5, edge pauses.
  Alignment a{{0.0, 0.5, "h#"}, {0.5, 30.0, "aa"}, {30.0, 32.0, "pau"}, {32.0, 59.5, "iy"}, {59.5, 60.0, "h#"}};
  auto utt = make_utt("long", 60.0, a);
  auto chunks = chunk_long_recording(utt);
  REQUIRE(chunks.size() == 2);
  double speech = 0;
  for (const auto& c : chunks) {
    CHECK(edge_silence(c, true) <= 0.020 + 1e-9);
    CHECK(edge_silence(c, false) <= 0.020 + 1e-9);
    speech += speech_time(c);
  }
  CHECK(std::abs(speech - speech_time(utt)) <= 0.010);
  CHECK(chunks[0].id == "long_c000");

  auto all_speech = make_utt("s", 1.0, {{0.0, 0.5, "aa"}, {0.5, 1.0, "iy"}});
  auto same = chunk_long_recording(all_speech);
  REQUIRE(same.size() == 1);
  CHECK(same[0].samples.size() == all_speech.samples.size());

  auto silent = make_utt("q", 1.0, {{0.0, 1.0, "h#"}});
  CHECK(chunk_long_recording(silent).empty());
}

TEST_CASE("validation split matches an independent hash oracle") {
  CorpusManifest m;
  for (int i = 0; i < 37; ++i) m.entries.push_back({"utt" + std::to_string(i * 7919 % 1000), "x.wav", {}, {}});
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL}) {
    auto [tr, va] = split_validation(m, 0.1, seed);
    CHECK(va.entries.size() == 4);
    CHECK(tr.entries.size() + va.entries.size() == m.entries.size());
    std::vector<std::pair<std::uint64_t, std::string>> keyed;
    for (const auto& e : m.entries) keyed.emplace_back(fnv(seed, e.utt_id), e.utt_id);
    std::sort(keyed.begin(), keyed.end());
    std::set<std::string> expected;
    for (int i = 0; i < 4; ++i) expected.insert(keyed[static_cast<std::size_t>(i)].second);
    std::set<std::string> got;
    for (const auto& e : va.entries) got.insert(e.utt_id);
    CHECK(got == expected);
    for (const auto& e : tr.entries) CHECK(got.count(e.utt_id) == 0);
  }
}

TEST_CASE("batch order is a deterministic permutation") {
  auto a = batch_order(23, 8, 5, 3);
  auto b = batch_order(23, 8, 5, 3);
  CHECK(a == b);
  CHECK(a.size() == 3);
  std::set<std::size_t> seen;
  for (const auto& batch : a) seen.insert(batch.begin(), batch.end());
  CHECK(seen.size() == 23);
  CHECK(batch_order(23, 8, 5, 4) != a);
}

TEST_CASE("synthetic corpus is well formed") {
  SyntheticOptions opt;
  opt.num_utterances = 3;
  auto utts = synthesize_corpus(opt);
  REQUIRE(utts.size() == 3);
  for (const auto& u : utts) {
    REQUIRE(u.phone_alignment);
    REQUIRE(u.word_alignment);
    validate_alignment(*u.phone_alignment);
    validate_alignment(*u.word_alignment);
    CHECK(u.phone_alignment->back().end_s <= u.duration_s() + 1e-9);
  }
  auto dir = testing::temp_dir("synth");
  auto manifest = write_corpus(utts, dir, "train", Split::kTrain);
  auto loaded = load_corpus(load_manifest(manifest));
  REQUIRE(loaded.size() == 3);
  CHECK(loaded[0].phone_alignment->size() == utts[0].phone_alignment->size());
}

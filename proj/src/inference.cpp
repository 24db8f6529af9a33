// src/inference.cpp

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

#include "scpc/inference.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "scpc/error.hpp"
#include "scpc/peaks.hpp"

namespace scpc {

const char* task_name(Task task) { return task == Task::kPhone ? "phone" : "word"; }

Task parse_task(const std::string& name) {
  if (name == "phone") return Task::kPhone;
  if (name == "word") return Task::kWord;
  throw Error(ErrorCode::kInvalidConfig, "unknown task '" + name + "'");
}

std::vector<double> phone_boundaries_from_trace(const Eigen::VectorXd& d, double prominence) {
  std::vector<double> out;
  for (Index g : find_peaks(d, prominence)) out.push_back(gap_time_s(g));
  return out;
}

std::vector<double> word_boundaries_from_trace(const Eigen::VectorXd& scores, const SegmentRanges& ranges,
                                               double prominence) {
  std::vector<double> out;
  if (scores.size() == 0) return out;
  Eigen::VectorXd padded(scores.size() + 2);
  padded << scores.minCoeff(), scores, scores.minCoeff();
  for (Index k : find_peaks(padded, prominence)) {
    const auto next = static_cast<std::size_t>(k);  // padded index k is transition k - 1
    out.push_back(gap_time_s(ranges[next].first - 1));
  }
  return out;
}

namespace {

SegmentationResult from_analysis(const std::string& id, const UtteranceAnalysis& a, const ProminenceSetting& prom) {
  SegmentationResult r;
  r.utterance_id = id;
  r.phone_trace = a.d;
  r.word_trace = a.word_scores;
  r.phone_boundaries_s = phone_boundaries_from_trace(a.d, prom.phone);
  r.word_boundaries_s = word_boundaries_from_trace(a.word_scores, a.ranges, prom.word);
  return r;
}

}  // namespace

SegmentationResult segment_features(ScpcModel& model, const std::string& id, const Matrix& features,
                                    const ProminenceSetting& prominence) {
  if (model.frames_for(features.rows()) < 2)
    throw Error(ErrorCode::kTooShortUtterance, id + ": too short to produce two frames");
  return from_analysis(id, model.analyze(features), prominence);
}

SegmentationResult segment_utterance(ScpcModel& model, const Utterance& utt, const ProminenceSetting& prominence) {
  return segment_features(model, utt.id, model.input_for(utt), prominence);
}

std::vector<double> phone_boundaries(ScpcModel& model, const Utterance& utt, double prominence) {
  return segment_utterance(model, utt, {prominence, 0.0, {}}).phone_boundaries_s;
}

std::vector<double> word_boundaries(ScpcModel& model, const Utterance& utt, double prominence) {
  return segment_utterance(model, utt, {0.0, prominence, {}}).word_boundaries_s;
}

std::vector<double> default_prominence_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 50; ++i) grid.push_back(i / 100.0);
  return grid;
}

double tune_prominence(const std::vector<TuningTrace>& traces, const std::vector<double>& grid, Task task,
                       double* best_r_value) {
  if (traces.empty()) throw Error(ErrorCode::kEmptyValidation, "no validation utterances to tune on");
  if (grid.empty()) throw Error(ErrorCode::kInvalidConfig, "empty prominence grid");
  double best = grid.front();
  double best_r = -std::numeric_limits<double>::infinity();
  bool first = true;
  for (double prom : grid) {
    MatchCounts total;
    for (const auto& t : traces) {
      auto hyp = task == Task::kPhone ? phone_boundaries_from_trace(t.trace, prom)
                                      : word_boundaries_from_trace(t.trace, t.ranges, prom);
      total += match_boundaries(t.reference, hyp);
    }
    const double r = compute_metrics(total).r_value;
    if (first || r > best_r || (r == best_r && prom > best)) {
      best = prom;
      best_r = r;
      first = false;
    }
  }
  if (best_r_value) *best_r_value = best_r;
  return best;
}

ProminenceSetting tune_prominence(ScpcModel& model, const std::vector<Utterance>& val,
                                  const std::vector<double>& grid, Task task) {
  if (val.empty()) throw Error(ErrorCode::kEmptyValidation, "validation set is empty");
  std::vector<TuningTrace> phone, word;
  for (const auto& u : val) {
    const auto a = model.analyze(model.input_for(u));
    if (u.phone_alignment) phone.push_back({a.d, {}, reference_boundaries(*u.phone_alignment)});
    if (u.word_alignment) word.push_back({a.word_scores, a.ranges, reference_boundaries(*u.word_alignment)});
  }
  ProminenceSetting s;
  s.grid = grid;
  if (task == Task::kPhone) {
    if (phone.empty()) throw Error(ErrorCode::kMissingAlignment, "validation set has no phone alignments");
    s.phone = tune_prominence(phone, grid, Task::kPhone);
    if (!word.empty()) s.word = tune_prominence(word, grid, Task::kWord);
  } else {
    if (word.empty()) throw Error(ErrorCode::kMissingAlignment, "validation set has no word alignments");
    s.word = tune_prominence(word, grid, Task::kWord);
    if (!phone.empty()) s.phone = tune_prominence(phone, grid, Task::kPhone);
  }
  return s;
}

void write_boundary_file(const std::filesystem::path& path,
                         const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + path.string());
  char buf[32];
  for (const auto& [id, times] : rows) {
    out << id;
    for (double t : times) {
      std::snprintf(buf, sizeof(buf), " %.3f", t);
      out << buf;
    }
    out << "\n";
  }
}

std::map<std::string, std::vector<double>> read_boundary_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  std::map<std::string, std::vector<double>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string id;
    if (!(ss >> id)) continue;
    auto& times = out[id];
    std::string tok;
    while (ss >> tok) {
      try {
        times.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw Error(ErrorCode::kMalformedFile, path.string() + ":" + std::to_string(lineno) + ": bad time '" + tok + "'");
      }
    }
    std::sort(times.begin(), times.end());
  }
  return out;
}

void write_prominence(const std::filesystem::path& path, const ProminenceSetting& s) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + path.string());
  out << "phone_prominence=" << s.phone << "\n" << "word_prominence=" << s.word << "\n";
  if (!s.grid.empty()) {
    out << "grid=";
    for (std::size_t i = 0; i < s.grid.size(); ++i) out << (i ? "," : "") << s.grid[i];
    out << "\n";
  }
}

ProminenceSetting read_prominence(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  ProminenceSetting s;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "phone_prominence") s.phone = std::stod(value);
      if (key == "word_prominence") s.word = std::stod(value);
      if (key == "grid") {
        std::stringstream ss(value);
        std::string tok;
        while (std::getline(ss, tok, ',')) s.grid.push_back(std::stod(tok));
      }
    } catch (const std::exception&) {
      throw Error(ErrorCode::kMalformedFile, path.string() + ": bad value for " + key);
    }
  }
  return s;
}

}  // namespace scpc

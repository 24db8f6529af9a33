// src/training.cpp

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

#include "scpc/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "scpc/error.hpp"
#include "scpc/inference.hpp"

namespace scpc {

namespace {

std::vector<Index> parse_index_list(const std::string& key, const std::string& value) {
  std::vector<Index> out;
  std::stringstream ss(value);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stol(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidConfig, key + ": bad integer list '" + value + "'");
    }
  }
  return out;
}

std::string join(const std::vector<Index>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    T out;
    if constexpr (std::is_floating_point_v<T>)
      out = static_cast<T>(std::stod(value, &used));
    else if constexpr (std::is_unsigned_v<T>)
      out = static_cast<T>(std::stoull(value, &used));
    else
      out = static_cast<T>(std::stoll(value, &used));
    if (used != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidConfig, key + ": cannot parse '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw Error(ErrorCode::kInvalidConfig, key + ": expected a boolean, got '" + value + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  if (batch_size <= 0 || lr <= 0 || epochs <= 0 || nsc_start_epoch < 0 || negatives.k < 1)
    throw Error(ErrorCode::kInvalidConfig, "hyperparameters must be positive");
  if (nsc_start_epoch > epochs) throw Error(ErrorCode::kInvalidConfig, "nsc_start_epoch must not exceed epochs");
  if (clip_norm < 0) throw Error(ErrorCode::kInvalidConfig, "clip_norm must be >= 0");
  if (val_fraction <= 0 || val_fraction >= 1) throw Error(ErrorCode::kInvalidConfig, "val_fraction must lie in (0, 1)");
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  auto& m = model;
  if (key == "frontend") m.frontend = parse_frontend(value);
  else if (key == "feature_dim") m.feature_dim = parse_number<Index>(key, value);
  else if (key == "feature_hidden") m.feature_hidden = parse_number<Index>(key, value);
  else if (key == "kernel_sizes") m.frame.kernel_sizes = parse_index_list(key, value);
  else if (key == "strides") m.frame.strides = parse_index_list(key, value);
  else if (key == "channels") m.frame.channels = parse_number<Index>(key, value);
  else if (key == "projection_dim") m.frame.projection_dim = parse_number<Index>(key, value);
  else if (key == "leaky_slope") m.frame.leaky_slope = parse_number<double>(key, value);
  else if (key == "segment_hidden") m.segment.hidden = parse_number<Index>(key, value);
  else if (key == "segment_dim") m.segment.output_dim = parse_number<Index>(key, value);
  else if (key == "context_hidden") m.segment.context_hidden = parse_number<Index>(key, value);
  else if (key == "rep_mode") m.rep = parse_rep_mode(value);
  else if (key == "aggregator_mode") m.aggregator = parse_aggregator_mode(value);
  else if (key == "use_p2") m.use_p2 = parse_bool(key, value);
  else if (key == "thres_init") m.thres_init = parse_number<double>(key, value);
  else if (key == "learn_thres") m.learn_thres = parse_bool(key, value);
  else if (key == "frame_context_steps") m.frame_context_steps = parse_number<int>(key, value);
  else if (key == "frame_context_hidden") m.frame_context_hidden = parse_number<Index>(key, value);
  else if (key == "batch_size") batch_size = parse_number<int>(key, value);
  else if (key == "lr") lr = parse_number<double>(key, value);
  else if (key == "epochs") epochs = parse_number<int>(key, value);
  else if (key == "nsc_start_epoch") nsc_start_epoch = parse_number<int>(key, value);
  else if (key == "k_negatives") negatives.k = parse_number<int>(key, value);
  else if (key == "negative_mode") negatives.mode = parse_negative_mode(value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "clip_norm") clip_norm = parse_number<double>(key, value);
  else if (key == "val_fraction") val_fraction = parse_number<double>(key, value);
  else throw Error(ErrorCode::kInvalidConfig, "unknown config key '" + key + "'");
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  const auto& m = model;
  return {
      {"frontend", frontend_name(m.frontend)},
      {"feature_dim", std::to_string(m.feature_dim)},
      {"feature_hidden", std::to_string(m.feature_hidden)},
      {"kernel_sizes", join(m.frame.kernel_sizes)},
      {"strides", join(m.frame.strides)},
      {"channels", std::to_string(m.frame.channels)},
      {"projection_dim", std::to_string(m.frame.projection_dim)},
      {"leaky_slope", fmt(m.frame.leaky_slope)},
      {"segment_hidden", std::to_string(m.segment.hidden)},
      {"segment_dim", std::to_string(m.segment.output_dim)},
      {"context_hidden", std::to_string(m.segment.context_hidden)},
      {"rep_mode", rep_mode_name(m.rep)},
      {"aggregator_mode", aggregator_mode_name(m.aggregator)},
      {"use_p2", m.use_p2 ? "true" : "false"},
      {"thres_init", fmt(m.thres_init)},
      {"learn_thres", m.learn_thres ? "true" : "false"},
      {"frame_context_steps", std::to_string(m.frame_context_steps)},
      {"frame_context_hidden", std::to_string(m.frame_context_hidden)},
      {"batch_size", std::to_string(batch_size)},
      {"lr", fmt(lr)},
      {"epochs", std::to_string(epochs)},
      {"nsc_start_epoch", std::to_string(nsc_start_epoch)},
      {"k_negatives", std::to_string(negatives.k)},
      {"negative_mode", negative_mode_name(negatives.mode)},
      {"seed", std::to_string(seed)},
      {"clip_norm", fmt(clip_norm)},
      {"val_fraction", fmt(val_fraction)},
  };
}

TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open config " + path.string());
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::kInvalidConfig, path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

void save_train_config(const std::filesystem::path& path, const TrainConfig& config) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + path.string());
  for (const auto& [k, v] : config.to_map()) out << k << "=" << v << "\n";
}

std::vector<Example> waveform_examples(const std::vector<Utterance>& utts) {
  std::vector<Example> out;
  out.reserve(utts.size());
  for (const auto& u : utts) out.push_back({u.id, waveform_input(u.samples), u.phone_alignment, u.word_alignment});
  return out;
}

LossParts combined_loss(ScpcModel& model, std::span<const Matrix> batch, const TrainConfig& config, int epoch,
                        Rng& rng) {
  if (epoch < 0) throw std::invalid_argument("combined_loss: negative epoch");
  LossParts parts;
  const bool segments = epoch >= config.nsc_start_epoch;
  ModelOutput out = model.forward(batch, true, segments);
  Var frame_loss = model.frame_context() ? multistep_nfc_loss(out.z, *model.frame_context(), config.negatives, rng)
                                         : nfc_loss(out.z, config.negatives, rng);
  parts.total = frame_loss;
  parts.frame = frame_loss.item();
  if (segments) {
    NscResult nsc = nsc_loss(out.c, out.s, config.negatives, rng);
    parts.segment_used = nsc.used;
    parts.segment_skipped = nsc.skipped;
    if (nsc.loss.defined()) {
      parts.segment_active = true;
      parts.segment = nsc.loss.item();
      parts.total = frame_loss + nsc.loss;
    }
  }
  return parts;
}

// ---- checkpoints ----------------------------------------------------------

Checkpoint make_checkpoint(ScpcModel& model, const TrainConfig& config, int epoch, double best, const Rng& rng) {
  Checkpoint c;
  c.config = config;
  c.epoch = epoch;
  c.best_val_r_value = best;
  std::ostringstream ss;
  ss << rng;
  c.rng_state = ss.str();
  model.visit([&](const std::string& name, Var& v) {
    const auto dot = name.find('.');
    c.groups[name.substr(0, dot)][name.substr(dot + 1)] = v.value();
  });
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json j;
  j["format"] = "scpc-checkpoint-1";
  j["config"] = ckpt.config.to_map();
  j["epoch"] = ckpt.epoch;
  j["best_val_r_value"] = std::isfinite(ckpt.best_val_r_value) ? nlohmann::json(ckpt.best_val_r_value) : nlohmann::json();
  j["rng_state"] = ckpt.rng_state;
  for (const auto& [group, tensors] : ckpt.groups)
    for (const auto& [name, m] : tensors)
      j["groups"][group][name] = {{"rows", m.rows()},
                                  {"cols", m.cols()},
                                  {"data", std::vector<double>(m.data(), m.data() + m.size())}};
  const auto bytes = nlohmann::json::to_cbor(j);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  nlohmann::json j;
  try {
    j = nlohmann::json::from_cbor(bytes);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kMalformedFile, path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "scpc-checkpoint-1")
    throw Error(ErrorCode::kMalformedFile, path.string() + ": not a checkpoint");
  Checkpoint c;
  for (const auto& [k, v] : j["config"].items()) c.config.set(k, v.get<std::string>());
  c.epoch = j["epoch"].get<int>();
  if (!j["best_val_r_value"].is_null()) c.best_val_r_value = j["best_val_r_value"].get<double>();
  c.rng_state = j["rng_state"].get<std::string>();
  for (const auto& [group, tensors] : j["groups"].items())
    for (const auto& [name, t] : tensors.items()) {
      const auto rows = t["rows"].get<Index>();
      const auto cols = t["cols"].get<Index>();
      const auto data = t["data"].get<std::vector<double>>();
      if (static_cast<Index>(data.size()) != rows * cols)
        throw Error(ErrorCode::kMalformedFile, path.string() + ": tensor " + group + "." + name + " has wrong size");
      c.groups[group][name] = Eigen::Map<const Matrix>(data.data(), rows, cols);
    }
  return c;
}

ScpcModel restore_model(const Checkpoint& ckpt) {
  Rng rng(0);
  ScpcModel model(ckpt.config.model, rng);
  model.visit([&](const std::string& name, Var& v) {
    const auto dot = name.find('.');
    auto g = ckpt.groups.find(name.substr(0, dot));
    if (g == ckpt.groups.end()) throw Error(ErrorCode::kMalformedFile, "checkpoint lacks group " + name.substr(0, dot));
    auto t = g->second.find(name.substr(dot + 1));
    if (t == g->second.end()) throw Error(ErrorCode::kMalformedFile, "checkpoint lacks tensor " + name);
    if (t->second.rows() != v.rows() || t->second.cols() != v.cols())
      throw Error(ErrorCode::kMalformedFile, "checkpoint tensor " + name + " has the wrong shape");
    v.mutable_value() = t->second;
  });
  return model;
}

// ---- training loop --------------------------------------------------------

double validation_r_value(ScpcModel& model, const std::vector<Example>& val_set, double* prominence) {
  std::vector<TuningTrace> traces;
  for (const auto& ex : val_set) {
    if (!ex.phones) continue;
    if (model.frames_for(ex.input.rows()) < 2) continue;
    traces.push_back({model.analyze(ex.input).d, {}, reference_boundaries(*ex.phones)});
  }
  if (traces.empty()) throw Error(ErrorCode::kEmptyValidation, "no validation utterances with phone alignments");
  double r = 0;
  const double prom = tune_prominence(traces, default_prominence_grid(), Task::kPhone, &r);
  if (prominence) *prominence = prom;
  return r;
}

TrainResult train(const std::vector<Example>& train_set, const std::vector<Example>& val_set,
                  const TrainConfig& config, const std::filesystem::path& out_dir, const EpochCallback& on_epoch) {
  config.validate();
  Rng init(stable_hash(config.seed, "init"));
  ScpcModel model(config.model, init);
  return train(model, train_set, val_set, config, out_dir, on_epoch);
}

TrainResult train(ScpcModel& model, const std::vector<Example>& train_set, const std::vector<Example>& val_set,
                  const TrainConfig& config, const std::filesystem::path& out_dir, const EpochCallback& on_epoch) {
  config.validate();
  // Utterances too short for the next-frame loss are left out.
  const Index min_frames = std::max(3, config.model.frame_context_steps + 1);
  std::vector<const Example*> usable;
  for (const auto& ex : train_set)
    if (ex.input.rows() >= model.min_input_rows() && model.frames_for(ex.input.rows()) >= min_frames)
      usable.push_back(&ex);
  if (usable.empty()) throw Error(ErrorCode::kEmptyCorpus, "no usable training utterances");
  if (val_set.empty()) throw Error(ErrorCode::kEmptyValidation, "validation set is empty");
  if (usable.size() < train_set.size())
    std::cerr << "warning: skipped " << train_set.size() - usable.size() << " training utterances too short to encode\n";

  TrainResult result;
  std::ofstream metrics;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    metrics.open(out_dir / "metrics.tsv");
    metrics << "epoch\tloss_nfc\tloss_nsc\tval_rval\tthres\n";
    result.best_checkpoint = out_dir / "best.ckpt";
    result.last_checkpoint = out_dir / "last.ckpt";
  }
  nn::Adam opt(model.parameters(), {.lr = config.lr});
  Rng rng(stable_hash(config.seed, "negatives"));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double frame_sum = 0, segment_sum = 0;
    int steps = 0, segment_steps = 0;
    for (const auto& batch : batch_order(usable.size(), static_cast<std::size_t>(config.batch_size), config.seed, epoch)) {
      std::vector<Matrix> inputs;
      for (auto i : batch) inputs.push_back(usable[i]->input);
      opt.zero_grad();
      LossParts loss = combined_loss(model, inputs, config, epoch, rng);
      if (!std::isfinite(loss.total.item()))
        throw Error(ErrorCode::kDivergedTraining, "non-finite loss at epoch " + std::to_string(epoch));
      ad::backward(loss.total);
      if (!std::isfinite(opt.grad_norm()))
        throw Error(ErrorCode::kDivergedTraining, "non-finite gradient at epoch " + std::to_string(epoch));
      if (config.clip_norm > 0) opt.clip_grad_norm(config.clip_norm);
      opt.step();
      if (model.threshold().learnable) model.threshold().clamp();
      frame_sum += loss.frame;
      ++steps;
      if (loss.segment_active) {
        segment_sum += loss.segment;
        ++segment_steps;
      }
    }
    EpochLog log;
    log.epoch = epoch;
    log.loss_frame = frame_sum / steps;
    log.loss_segment = segment_steps ? segment_sum / segment_steps : 0.0;
    log.val_r_value = validation_r_value(model, val_set);
    log.thres = model.threshold().get();
    result.log.push_back(log);
    const bool improved = result.best_epoch < 0 || log.val_r_value > result.best_val_r_value;
    if (improved) {
      result.best_val_r_value = log.val_r_value;
      result.best_epoch = epoch;
    }
    if (!out_dir.empty()) {
      char line[160];
      std::snprintf(line, sizeof(line), "%d\t%.6f\t%.6f\t%.6f\t%.6f\n", epoch, log.loss_frame, log.loss_segment,
                    log.val_r_value, log.thres);
      metrics << line << std::flush;
      auto ckpt = make_checkpoint(model, config, epoch, result.best_val_r_value, rng);
      save_checkpoint(result.last_checkpoint, ckpt);
      if (improved) save_checkpoint(result.best_checkpoint, ckpt);
    }
    if (on_epoch) on_epoch(log);
  }
  return result;
}

}  // namespace scpc

// src/cli.cpp

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

#include "scpc/cli.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "scpc/error.hpp"
#include "scpc/eval.hpp"
#include "scpc/inference.hpp"
#include "scpc/training.hpp"
#include "scpc/varrate.hpp"

namespace scpc {

namespace fs = std::filesystem;

namespace {

// Exclusive ownership of an output directory for the lifetime of a command.
class DirectoryLock {
 public:
  explicit DirectoryLock(const fs::path& dir) : path_(dir / ".lock") {
    fs::create_directories(dir);
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) throw std::runtime_error("output directory " + dir.string() + " is locked by another run (" +
                                         path_.string() + ")");
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
  }
  ~DirectoryLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  fs::path path_;
};

void write_snapshot(const fs::path& dir, CLI::App* sub) {
  std::ofstream out(dir / "command.resolved.ini");
  out << "# " << sub->get_name() << "\n" << sub->config_to_str(true, false);
}

std::vector<Example> load_examples(const ModelConfig& mc, const std::vector<Utterance>& utts,
                                   const std::string& features) {
  if (mc.frontend == Frontend::kWaveform) return waveform_examples(utts);
  if (features.empty()) throw Error(ErrorCode::kMissingFile, "features frontend needs --features");
  const FeatureFile file = read_feature_file(features);
  std::vector<Example> out;
  for (const auto& u : utts) {
    const FeatureBlock* b = file.find(u.id);
    if (!b) throw Error(ErrorCode::kMissingFile, "feature file has no block for " + u.id);
    out.push_back({u.id, expand_to_frames(*b), u.phone_alignment, u.word_alignment});
  }
  return out;
}

std::vector<Utterance> load_split(const std::string& manifest) { return load_corpus(load_manifest(manifest)); }

std::string svg_trace(const std::string& id, const Eigen::VectorXd& d, const std::vector<double>& hyp,
                      const std::vector<double>& ref) {
  const double width = 900, height = 240, pad = 30;
  const double span = std::max(1.0, static_cast<double>(d.size() + 1)) * kFrameHop;
  auto x = [&](double t) { return pad + (width - 2 * pad) * t / span; };
  auto y = [&](double v) { return height - pad - (height - 2 * pad) * v; };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << pad << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"12\">" << id
    << "  d (black), hypothesis (red), reference (grey)</text>\n";
  for (double t : ref)
    s << "<line x1=\"" << x(t) << "\" y1=\"" << y(0) << "\" x2=\"" << x(t) << "\" y2=\"" << y(1)
      << "\" stroke=\"#999\" stroke-dasharray=\"4,3\"/>\n";
  for (double t : hyp)
    s << "<line x1=\"" << x(t) << "\" y1=\"" << y(0) << "\" x2=\"" << x(t) << "\" y2=\"" << y(1)
      << "\" stroke=\"red\"/>\n";
  s << "<polyline fill=\"none\" stroke=\"black\" points=\"";
  for (Index g = 0; g < d.size(); ++g) s << x(gap_time_s(g)) << "," << y(d(g)) << " ";
  s << "\"/>\n<line x1=\"" << pad << "\" y1=\"" << y(0) << "\" x2=\"" << width - pad << "\" y2=\"" << y(0)
    << "\" stroke=\"black\"/>\n</svg>\n";
  return s.str();
}

struct Options {
  // shared
  std::string out_dir, manifest, checkpoint, features, task = "phone", boundaries;
  // synth
  int n_train = 48, n_val = 8, n_test = 8;
  std::uint64_t seed = 0;
  double noise = 0.01;
  // train
  std::string config, train_manifest, val_manifest, val_features;
  std::vector<std::string> settings;
  int epochs = 0, batch_size = 0;
  double lr = 0;
  // segment
  std::string prominence_file;
  double phone_prominence = 0.05, word_prominence = 0.05;
  bool dump_scores = false;
  // analyze
  std::vector<std::string> plots;
  // extract
  std::string source = "differentiable";
  double prominence = 0.05;
  // probe
  std::string train_features, test_manifest, test_features;
};

int cmd_synth(const Options& o, std::ostream& out) {
  for (const auto& [name, count, split] :
       {std::tuple{"train", o.n_train, Split::kTrain}, {"val", o.n_val, Split::kVal}, {"test", o.n_test, Split::kTest}}) {
    if (count <= 0) continue;
    SyntheticOptions so;
    so.num_utterances = count;
    so.noise_std = o.noise;
    so.seed = stable_hash(o.seed, name);
    auto utts = synthesize_corpus(so);
    for (auto& u : utts) u.id = std::string(name) + "_" + u.id;
    out << write_corpus(utts, o.out_dir, name, split).string() << "\n";
  }
  return kExitOk;
}

int cmd_train(const Options& o, CLI::App* sub, std::ostream& out) {
  TrainConfig cfg;
  std::string config_path = o.config;
  if (config_path.empty())
    if (const char* env = std::getenv("SCPC_CONFIG")) config_path = env;
  if (!config_path.empty()) cfg = load_train_config(config_path);
  for (const auto& kv : o.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::kInvalidConfig, "--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (sub->count("--seed")) cfg.seed = o.seed;
  if (sub->count("--epochs")) cfg.epochs = o.epochs;
  if (sub->count("--lr")) cfg.lr = o.lr;
  if (sub->count("--batch-size")) cfg.batch_size = o.batch_size;
  cfg.validate();
  save_train_config(fs::path(o.out_dir) / "config.resolved.cfg", cfg);

  std::vector<Utterance> train_utts, val_utts;
  if (o.val_manifest.empty()) {
    auto [tr, va] = split_validation(load_manifest(o.train_manifest), cfg.val_fraction, cfg.seed);
    train_utts = load_corpus(tr);
    val_utts = load_corpus(va);
  } else {
    train_utts = load_split(o.train_manifest);
    val_utts = load_split(o.val_manifest);
  }
  if (train_utts.empty()) throw Error(ErrorCode::kEmptyCorpus, "training manifest is empty");
  auto train_set = load_examples(cfg.model, train_utts, o.features);
  auto val_set = load_examples(cfg.model, val_utts, o.val_features.empty() ? o.features : o.val_features);
  auto result = train(train_set, val_set, cfg, o.out_dir, [&](const EpochLog& l) {
    char line[160];
    std::snprintf(line, sizeof(line), "epoch %d  loss_nfc %.4f  loss_nsc %.4f  val_rval %.4f  thres %.4f\n", l.epoch,
                  l.loss_frame, l.loss_segment, l.val_r_value, l.thres);
    out << line << std::flush;
  });
  out << "best epoch " << result.best_epoch << " val_rval " << result.best_val_r_value << "\n";
  return kExitOk;
}

ProminenceSetting resolve_prominence(const Options& o, CLI::App* sub) {
  ProminenceSetting p;
  if (!o.prominence_file.empty()) p = read_prominence(o.prominence_file);
  if (sub->count("--phone-prominence") || o.prominence_file.empty()) p.phone = o.phone_prominence;
  if (sub->count("--word-prominence") || o.prominence_file.empty()) p.word = o.word_prominence;
  return p;
}

int cmd_tune(const Options& o, std::ostream& out) {
  auto ckpt = load_checkpoint(o.checkpoint);
  auto model = restore_model(ckpt);
  const Task task = parse_task(o.task);
  auto utts = load_split(o.manifest);
  auto examples = load_examples(ckpt.config.model, utts, o.features);
  const auto grid = default_prominence_grid();
  std::vector<TuningTrace> phone, word;
  for (const auto& ex : examples) {
    if (model.frames_for(ex.input.rows()) < 2) continue;
    const auto a = model.analyze(ex.input);
    if (ex.phones) phone.push_back({a.d, {}, reference_boundaries(*ex.phones)});
    if (ex.words) word.push_back({a.word_scores, a.ranges, reference_boundaries(*ex.words)});
  }
  if (task == Task::kPhone && phone.empty()) throw Error(ErrorCode::kMissingAlignment, "no phone alignments to tune on");
  if (task == Task::kWord && word.empty()) throw Error(ErrorCode::kMissingAlignment, "no word alignments to tune on");
  ProminenceSetting s;
  s.grid = grid;
  double r_phone = 0, r_word = 0;
  if (!phone.empty()) s.phone = tune_prominence(phone, grid, Task::kPhone, &r_phone);
  if (!word.empty()) s.word = tune_prominence(word, grid, Task::kWord, &r_word);
  write_prominence(fs::path(o.out_dir) / "prominence.txt", s);
  if (!phone.empty()) out << "phone_prominence " << s.phone << "  val_rval " << r_phone << "\n";
  if (!word.empty()) out << "word_prominence " << s.word << "  val_rval " << r_word << "\n";
  return kExitOk;
}

int cmd_segment(const Options& o, CLI::App* sub, std::ostream& out) {
  auto ckpt = load_checkpoint(o.checkpoint);
  auto model = restore_model(ckpt);
  const auto prom = resolve_prominence(o, sub);
  auto utts = load_split(o.manifest);
  auto examples = load_examples(ckpt.config.model, utts, o.features);
  const fs::path dir = o.out_dir;
  if (o.dump_scores) fs::create_directories(dir / "scores");
  std::vector<std::pair<std::string, std::vector<double>>> phones, words;
  for (const auto& ex : examples) {
    auto r = segment_features(model, ex.id, ex.input, prom);
    phones.emplace_back(ex.id, r.phone_boundaries_s);
    words.emplace_back(ex.id, r.word_boundaries_s);
    if (o.dump_scores) {
      const auto a = model.analyze(ex.input);
      BoundaryVector bv;
      bv.p1 = a.p1;
      bv.p2 = a.p2;
      bv.p = a.p;
      bv.b = ad::constant(Matrix(a.b));
      write_score_dump(dir / "scores" / (ex.id + ".txt"), Matrix(a.d), bv);
    }
  }
  write_boundary_file(dir / "phones.txt", phones);
  write_boundary_file(dir / "words.txt", words);
  out << "segmented " << examples.size() << " utterances into " << (dir / "phones.txt").string() << " and "
      << (dir / "words.txt").string() << "\n";
  return kExitOk;
}

std::map<std::string, std::vector<double>> references(const std::vector<Utterance>& utts, Task task) {
  std::map<std::string, std::vector<double>> refs;
  for (const auto& u : utts) {
    const auto& a = task == Task::kPhone ? u.phone_alignment : u.word_alignment;
    if (!a) throw Error(ErrorCode::kMissingAlignment, u.id + " has no " + task_name(task) + " alignment");
    refs[u.id] = reference_boundaries(*a);
  }
  return refs;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  const Task task = parse_task(o.task);
  auto refs = references(load_split(o.manifest), task);
  auto hyps = read_boundary_file(o.boundaries);
  auto report = evaluate_boundaries(refs, hyps);
  write_report(fs::path(o.out_dir) / "report.txt", report, task_name(task));
  out << render_report(report, task_name(task));
  return kExitOk;
}

int cmd_analyze(const Options& o, std::ostream& out) {
  auto utts = load_split(o.manifest);
  auto hyps = read_boundary_file(o.boundaries);
  PairConfusion total;
  for (const auto& u : utts) {
    if (!u.phone_alignment) throw Error(ErrorCode::kMissingAlignment, u.id + " has no phone alignment");
    auto it = hyps.find(u.id);
    const std::vector<double> none;
    total += pair_confusion(*u.phone_alignment, it == hyps.end() ? none : it->second);
  }
  const fs::path dir = o.out_dir;
  write_pair_confusion_csv(dir / "pair_confusion.csv", total);
  out << "pair confusion over " << total.boundaries() << " boundaries -> " << (dir / "pair_confusion.csv").string()
      << "\n";
  if (!o.plots.empty()) {
    if (o.checkpoint.empty()) throw Error(ErrorCode::kInvalidConfig, "--plot needs --checkpoint for score traces");
    auto ckpt = load_checkpoint(o.checkpoint);
    auto model = restore_model(ckpt);
    auto examples = load_examples(ckpt.config.model, utts, o.features);
    fs::create_directories(dir / "plots");
    const std::set<std::string> wanted(o.plots.begin(), o.plots.end());
    std::size_t drawn = 0;
    for (const auto& ex : examples) {
      if (!wanted.count(ex.id) && !wanted.count("all")) continue;
      const auto a = model.analyze(ex.input);
      auto it = hyps.find(ex.id);
      std::ofstream svg(dir / "plots" / (ex.id + ".svg"));
      svg << svg_trace(ex.id, a.d, it == hyps.end() ? std::vector<double>{} : it->second,
                       ex.phones ? reference_boundaries(*ex.phones) : std::vector<double>{});
      ++drawn;
    }
    for (const auto& id : wanted)
      if (id != "all" && std::none_of(examples.begin(), examples.end(), [&](const Example& e) { return e.id == id; }))
        throw Error(ErrorCode::kMissingFile, "no utterance '" + id + "' in the manifest");
    out << "wrote " << drawn << " score-trace plots\n";
  }
  return kExitOk;
}

int cmd_extract(const Options& o, std::ostream& out) {
  const auto source = o.source;
  auto utts = load_split(o.manifest);
  FeatureFile file;
  double duration = 0;
  for (const auto& u : utts) duration += u.duration_s();
  if (source == "mfcc") {
    for (const auto& u : utts) {
      Matrix m = mfcc(u.samples);
      file.blocks.push_back({u.id, m, m.rows(), {}, false});
    }
  } else {
    const BoundarySource bs = parse_boundary_source(source);
    auto ckpt = load_checkpoint(o.checkpoint);
    auto model = restore_model(ckpt);
    auto examples = load_examples(ckpt.config.model, utts, o.features);
    for (const auto& ex : examples)
      file.blocks.push_back(
          extract_segment_features(model, ex.id, ex.input, bs, bs == BoundarySource::kManual ? ex.phones : std::nullopt,
                                   o.prominence));
  }
  const fs::path dir = o.out_dir;
  write_feature_file(dir / "features.bin", file);
  const double rate = average_sampling_rate(file.blocks, duration);
  std::ofstream(dir / "rate.txt") << "average_sampling_rate_hz=" << rate << "\n";
  out << "extracted " << file.blocks.size() << " utterances, average rate " << rate << " Hz\n";
  return kExitOk;
}

struct ProbeSplit {
  ProbeData data;
  double rate = 0;
};

ProbeSplit probe_split(const std::string& manifest, const std::string& features, const std::vector<std::string>& classes) {
  auto utts = load_split(manifest);
  const FeatureFile file = read_feature_file(features);
  ProbeSplit split;
  std::vector<Matrix> rows;
  std::vector<FeatureBlock> used;
  double duration = 0;
  for (const auto& u : utts) {
    if (!u.phone_alignment) throw Error(ErrorCode::kMissingAlignment, u.id + " has no phone alignment");
    const FeatureBlock* b = file.find(u.id);
    if (!b) throw Error(ErrorCode::kLabelFeatureMismatch, "feature file has no block for " + u.id);
    rows.push_back(expand_to_frames(*b));
    auto labels = frame_labels(*u.phone_alignment, b->frame_count, classes);
    split.data.y.insert(split.data.y.end(), labels.begin(), labels.end());
    used.push_back(*b);
    duration += u.duration_s();
  }
  Index total = 0;
  for (const auto& m : rows) total += m.rows();
  split.data.x.resize(total, rows.empty() ? 0 : rows.front().cols());
  Index r = 0;
  for (const auto& m : rows) {
    split.data.x.middleRows(r, m.rows()) = m;
    r += m.rows();
  }
  if (duration > 0) split.rate = average_sampling_rate(used, duration);
  return split;
}

int cmd_probe(const Options& o, std::ostream& out) {
  const auto classes = LabelFoldTable::timit_default().probe_labels();
  auto tr = probe_split(o.train_manifest, o.train_features, classes);
  auto va = probe_split(o.val_manifest, o.val_features, classes);
  auto te = probe_split(o.test_manifest, o.test_features, classes);
  auto result = linear_probe(tr.data, va.data, te.data, static_cast<int>(classes.size()));
  result.average_sampling_rate_train = tr.rate;
  result.average_sampling_rate_test = te.rate;
  std::ofstream f(fs::path(o.out_dir) / "probe.txt");
  f << "val_accuracy=" << result.val_accuracy << "\n"
    << "test_accuracy=" << result.test_accuracy << "\n"
    << "average_sampling_rate_train=" << result.average_sampling_rate_train << "\n"
    << "average_sampling_rate_test=" << result.average_sampling_rate_test << "\n"
    << "epochs=" << result.epochs << "\n";
  out << "val " << result.val_accuracy << "%  test " << result.test_accuracy << "%  rate(train) "
      << result.average_sampling_rate_train << " Hz  rate(test) " << result.average_sampling_rate_test << " Hz\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Segmental contrastive coding: unsupervised phone and word segmentation"};
  app.require_subcommand(1);
  Options o;

  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus of tone-mixture phones");
  synth->add_option("--out", o.out_dir, "Output directory")->required();
  synth->add_option("--train", o.n_train, "Training utterances")->capture_default_str();
  synth->add_option("--val", o.n_val, "Validation utterances")->capture_default_str();
  synth->add_option("--test", o.n_test, "Test utterances")->capture_default_str();
  synth->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  synth->add_option("--noise", o.noise, "Additive noise standard deviation")->capture_default_str();

  auto* tr = app.add_subcommand("train", "Train a model");
  tr->add_option("--config", o.config, "key=value config file (default: $SCPC_CONFIG)");
  tr->add_option("--train", o.train_manifest, "Training manifest")->required()->check(CLI::ExistingFile);
  tr->add_option("--val", o.val_manifest, "Validation manifest (default: held out from --train)")
      ->check(CLI::ExistingFile);
  tr->add_option("--features", o.features, "Frame features for the features frontend");
  tr->add_option("--val-features", o.val_features, "Validation frame features (default: --features)");
  tr->add_option("--out", o.out_dir, "Output directory")->required();
  tr->add_option("--seed", o.seed, "Random seed");
  tr->add_option("--epochs", o.epochs, "Epochs");
  tr->add_option("--lr", o.lr, "Learning rate");
  tr->add_option("--batch-size", o.batch_size, "Utterances per batch");
  tr->add_option("--set", o.settings, "Config override key=value (repeatable)");

  auto* tune = app.add_subcommand("tune", "Grid-search peak prominence on validation data");
  tune->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  tune->add_option("--manifest", o.manifest, "Validation manifest")->required()->check(CLI::ExistingFile);
  tune->add_option("--features", o.features, "Frame features for the features frontend");
  tune->add_option("--task", o.task, "phone or word")->check(CLI::IsMember({"phone", "word"}))->capture_default_str();
  tune->add_option("--out", o.out_dir, "Output directory")->required();

  auto* seg = app.add_subcommand("segment", "Write phone and word boundaries");
  seg->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  seg->add_option("--manifest", o.manifest, "Manifest to segment")->required()->check(CLI::ExistingFile);
  seg->add_option("--features", o.features, "Frame features for the features frontend");
  seg->add_option("--prominence", o.prominence_file, "prominence.txt from tune")->check(CLI::ExistingFile);
  seg->add_option("--phone-prominence", o.phone_prominence, "Phone peak prominence")->capture_default_str();
  seg->add_option("--word-prominence", o.word_prominence, "Word peak prominence")->capture_default_str();
  seg->add_flag("--dump-scores", o.dump_scores, "Write per-utterance t d p1 p2 p b traces");
  seg->add_option("--out", o.out_dir, "Output directory")->required();

  auto* ev = app.add_subcommand("evaluate", "Score boundaries against reference alignments");
  ev->add_option("--manifest", o.manifest, "Reference manifest")->required()->check(CLI::ExistingFile);
  ev->add_option("--boundaries", o.boundaries, "Boundary file")->required()->check(CLI::ExistingFile);
  ev->add_option("--task", o.task, "phone or word")->check(CLI::IsMember({"phone", "word"}))->capture_default_str();
  ev->add_option("--out", o.out_dir, "Output directory")->required();

  auto* an = app.add_subcommand("analyze", "Broad-class pair analysis and score-trace plots");
  an->add_option("--manifest", o.manifest, "Reference manifest")->required()->check(CLI::ExistingFile);
  an->add_option("--boundaries", o.boundaries, "Phone boundary file")->required()->check(CLI::ExistingFile);
  an->add_option("--checkpoint", o.checkpoint, "Model checkpoint (for plots)")->check(CLI::ExistingFile);
  an->add_option("--features", o.features, "Frame features for the features frontend");
  an->add_option("--plot", o.plots, "Utterance id to plot, or 'all' (repeatable)");
  an->add_option("--out", o.out_dir, "Output directory")->required();

  auto* ex = app.add_subcommand("extract", "Write per-segment or MFCC feature files");
  ex->add_option("--manifest", o.manifest, "Manifest")->required()->check(CLI::ExistingFile);
  ex->add_option("--checkpoint", o.checkpoint, "Model checkpoint (not needed for mfcc)")->check(CLI::ExistingFile);
  ex->add_option("--features", o.features, "Frame features for the features frontend");
  ex->add_option("--source", o.source, "differentiable, external_peaks, manual, frames or mfcc")
      ->check(CLI::IsMember({"differentiable", "external_peaks", "manual", "frames", "mfcc"}))
      ->capture_default_str();
  ex->add_option("--prominence", o.prominence, "Prominence for external_peaks")->capture_default_str();
  ex->add_option("--out", o.out_dir, "Output directory")->required();

  auto* pr = app.add_subcommand("probe", "Linear phone probe on frame-aligned features");
  pr->add_option("--train-manifest", o.train_manifest, "Training manifest")->required()->check(CLI::ExistingFile);
  pr->add_option("--train-features", o.train_features, "Training features")->required()->check(CLI::ExistingFile);
  pr->add_option("--val-manifest", o.val_manifest, "Validation manifest")->required()->check(CLI::ExistingFile);
  pr->add_option("--val-features", o.val_features, "Validation features")->required()->check(CLI::ExistingFile);
  pr->add_option("--test-manifest", o.test_manifest, "Test manifest")->required()->check(CLI::ExistingFile);
  pr->add_option("--test-features", o.test_features, "Test features")->required()->check(CLI::ExistingFile);
  pr->add_option("--out", o.out_dir, "Output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    if (sub == ex && o.source != "mfcc" && o.checkpoint.empty())
      throw Error(ErrorCode::kInvalidConfig, "--checkpoint is required unless --source mfcc");
    DirectoryLock lock(o.out_dir);
    write_snapshot(o.out_dir, sub);
    if (sub == synth) return cmd_synth(o, out);
    if (sub == tr) return cmd_train(o, sub, out);
    if (sub == tune) return cmd_tune(o, out);
    if (sub == seg) return cmd_segment(o, sub, out);
    if (sub == ev) return cmd_evaluate(o, out);
    if (sub == an) return cmd_analyze(o, out);
    if (sub == ex) return cmd_extract(o, out);
    if (sub == pr) return cmd_probe(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (e.code() == ErrorCode::kInvalidConfig) return kExitUsage;
    return is_data_error(e.code()) ? kExitData : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace scpc

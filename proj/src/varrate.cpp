// src/varrate.cpp

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

#include "scpc/varrate.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>

#include "scpc/error.hpp"
#include "scpc/eval.hpp"
#include "scpc/peaks.hpp"

namespace scpc {

const FeatureBlock* FeatureFile::find(const std::string& id) const {
  for (const auto& b : blocks)
    if (b.id == id) return &b;
  return nullptr;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

std::string index_path(const std::filesystem::path& path) { return path.string() + ".idx"; }

}  // namespace

void write_feature_file(const std::filesystem::path& path, const FeatureFile& file) {
  std::ofstream bin(path, std::ios::binary);
  std::ofstream idx(index_path(path));
  if (!bin || !idx) throw Error(ErrorCode::kMissingFile, "cannot write " + path.string());
  idx << "#hop_s=" << file.hop_s << "\n";
  for (const auto& b : file.blocks) {
    const auto offset = static_cast<long long>(bin.tellp());
    put_u32(bin, static_cast<std::uint32_t>(b.id.size()));
    bin.write(b.id.data(), static_cast<std::streamsize>(b.id.size()));
    put_u32(bin, static_cast<std::uint32_t>(b.data.rows()));
    put_u32(bin, static_cast<std::uint32_t>(b.data.cols()));
    const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> f = b.data.cast<float>();
    bin.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
    idx << b.id << " " << offset << " " << b.data.rows() << " " << b.data.cols() << " "
        << (b.segmented ? "segments" : "frames") << " " << b.frame_count << " ";
    if (b.gaps.empty()) {
      idx << "-";
    } else {
      for (std::size_t i = 0; i < b.gaps.size(); ++i) idx << (i ? "," : "") << b.gaps[i];
    }
    idx << "\n";
  }
}

FeatureFile read_feature_file(const std::filesystem::path& path) {
  std::ifstream idx(index_path(path));
  std::ifstream bin(path, std::ios::binary);
  if (!idx || !bin) throw Error(ErrorCode::kMissingFile, "cannot open feature file " + path.string());
  FeatureFile file;
  std::string line;
  int lineno = 0;
  auto bad = [&](const std::string& why) {
    return Error(ErrorCode::kMalformedFile, index_path(path) + ":" + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(idx, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.rfind("#hop_s=", 0) == 0) {
      file.hop_s = std::stod(line.substr(7));
      continue;
    }
    std::istringstream ss(line);
    FeatureBlock b;
    long long offset = 0;
    Index rows = 0, cols = 0;
    std::string kind, gaps;
    if (!(ss >> b.id >> offset >> rows >> cols >> kind >> b.frame_count >> gaps)) throw bad("expected 7 fields");
    if (kind != "frames" && kind != "segments") throw bad("unknown block kind '" + kind + "'");
    b.segmented = kind == "segments";
    if (gaps != "-") {
      std::stringstream gs(gaps);
      std::string tok;
      while (std::getline(gs, tok, ',')) b.gaps.push_back(std::stol(tok));
    }
    bin.seekg(offset);
    const auto id_len = get_u32(bin);
    std::string id(id_len, '\0');
    bin.read(id.data(), id_len);
    const auto r = get_u32(bin);
    const auto c = get_u32(bin);
    if (!bin || id != b.id || r != rows || c != cols) throw bad("index does not match the binary block");
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> f(rows, cols);
    bin.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
    if (!bin) throw bad("truncated block");
    b.data = f.cast<double>();
    file.blocks.push_back(std::move(b));
  }
  return file;
}

const char* boundary_source_name(BoundarySource source) {
  switch (source) {
    case BoundarySource::kDifferentiable: return "differentiable";
    case BoundarySource::kExternalPeaks: return "external_peaks";
    case BoundarySource::kManual: return "manual";
    case BoundarySource::kFrames: return "frames";
  }
  return "differentiable";
}

BoundarySource parse_boundary_source(const std::string& name) {
  if (name == "differentiable") return BoundarySource::kDifferentiable;
  if (name == "external_peaks") return BoundarySource::kExternalPeaks;
  if (name == "manual") return BoundarySource::kManual;
  if (name == "frames") return BoundarySource::kFrames;
  throw Error(ErrorCode::kInvalidConfig, "unknown boundary source '" + name + "'");
}

Matrix indicators_from_gaps(const std::vector<Index>& gaps, Index frames) {
  Matrix b = Matrix::Zero(std::max<Index>(frames - 1, 0), 1);
  for (Index g : gaps) b(g, 0) = 1.0;
  return b;
}

std::vector<Index> gaps_from_alignment(const Alignment& alignment, Index frames) {
  std::vector<Index> gaps;
  for (double t : reference_boundaries(alignment)) {
    const Index g = std::clamp<Index>(static_cast<Index>(std::llround(t / kFrameHop)) - 1, 0, frames - 2);
    if (gaps.empty() || gaps.back() != g) gaps.push_back(g);
  }
  return gaps;
}

namespace {

std::vector<Index> gaps_from_indicators(const Eigen::VectorXd& b) {
  std::vector<Index> gaps;
  for (Index i = 0; i < b.size(); ++i)
    if (std::llround(b(i)) == 1) gaps.push_back(i);
  return gaps;
}

}  // namespace

FeatureBlock extract_segment_features(ScpcModel& model, const std::string& id, const Matrix& input,
                                      BoundarySource source, const std::optional<Alignment>& alignment,
                                      double prominence) {
  if (source == BoundarySource::kManual && !alignment)
    throw Error(ErrorCode::kMissingAlignment, id + ": manual boundaries need an alignment");
  ad::NoGradGuard guard;
  const UtteranceAnalysis a = model.analyze(input);
  const Index frames = a.z.rows();
  FeatureBlock block;
  block.id = id;
  block.frame_count = frames;
  block.segmented = true;
  if (source == BoundarySource::kDifferentiable) {
    block.gaps = gaps_from_indicators(a.b);
    block.data = a.s;
    return block;
  }
  switch (source) {
    case BoundarySource::kExternalPeaks:
      block.gaps = find_peaks(a.d, prominence);
      break;
    case BoundarySource::kManual:
      block.gaps = gaps_from_alignment(*alignment, frames);
      break;
    default:
      for (Index g = 0; g + 1 < frames; ++g) block.gaps.push_back(g);
  }
  Var s;
  model.segment_path(ad::constant(a.z), ad::constant(indicators_from_gaps(block.gaps, frames)), nullptr, &s, nullptr);
  block.data = s.value();
  return block;
}

Matrix expand_to_frames(const FeatureBlock& block) {
  if (!block.segmented) {
    if (block.data.rows() != block.frame_count)
      throw Error(ErrorCode::kInconsistentLengths, block.id + ": frame block has rows != frame_count");
    return block.data;
  }
  const Index frames = block.frame_count;
  if (static_cast<Index>(block.gaps.size()) + 1 != block.data.rows())
    throw Error(ErrorCode::kInconsistentLengths, block.id + ": segment count does not match boundaries");
  Matrix out(frames, block.data.cols());
  Index start = 0;
  for (std::size_t j = 0; j <= block.gaps.size(); ++j) {
    const Index end = j < block.gaps.size() ? block.gaps[j] + 1 : frames;
    if (end <= start || end > frames)
      throw Error(ErrorCode::kInconsistentLengths, block.id + ": boundaries out of order or beyond L");
    out.middleRows(start, end - start).rowwise() = block.data.row(static_cast<Index>(j));
    start = end;
  }
  return out;
}

double average_sampling_rate(const std::vector<FeatureBlock>& blocks, double total_duration_s) {
  if (!(total_duration_s > 0)) throw std::invalid_argument("average_sampling_rate: duration must be positive");
  double segments = 0;
  for (const auto& b : blocks) segments += static_cast<double>(b.data.rows());
  return segments / total_duration_s;
}

std::vector<int> frame_labels(const Alignment& alignment, Index frames, const std::vector<std::string>& classes,
                              const LabelFoldTable& table) {
  std::vector<int> out(static_cast<std::size_t>(frames), -1);
  std::size_t k = 0;
  for (Index t = 0; t < frames; ++t) {
    const double centre = frame_center_s(t);
    while (k < alignment.size() && alignment[k].end_s <= centre) ++k;
    if (k == alignment.size()) break;
    if (alignment[k].start_s > centre) continue;
    const auto& folded = table.fold(alignment[k].label, FoldMode::kProbe48);
    auto it = std::find(classes.begin(), classes.end(), folded);
    if (it != classes.end()) out[static_cast<std::size_t>(t)] = static_cast<int>(it - classes.begin());
  }
  return out;
}

namespace {

struct Cleaned {
  Matrix x;
  Eigen::VectorXi y;
};

Cleaned keep_labelled(const ProbeData& d, const char* name) {
  if (static_cast<Index>(d.y.size()) != d.x.rows())
    throw Error(ErrorCode::kLabelFeatureMismatch, std::string(name) + ": " + std::to_string(d.y.size()) +
                                                      " labels for " + std::to_string(d.x.rows()) + " frames");
  Index n = 0;
  for (int v : d.y) n += v >= 0;
  Cleaned c{Matrix(n, d.x.cols()), Eigen::VectorXi(n)};
  Index r = 0;
  for (Index i = 0; i < d.x.rows(); ++i)
    if (d.y[static_cast<std::size_t>(i)] >= 0) {
      c.x.row(r) = d.x.row(i);
      c.y(r++) = d.y[static_cast<std::size_t>(i)];
    }
  return c;
}

double accuracy(const Matrix& x, const Eigen::VectorXi& y, const Matrix& w, const Eigen::RowVectorXd& b) {
  if (x.rows() == 0) return 0.0;
  const Matrix logits = (x * w).rowwise() + b;
  Index correct = 0;
  for (Index i = 0; i < x.rows(); ++i) {
    Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    correct += arg == y(i);
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(x.rows());
}

}  // namespace

ProbeResult linear_probe(const ProbeData& train_raw, const ProbeData& val_raw, const ProbeData& test_raw,
                         int classes, const ProbeOptions& options) {
  Cleaned train = keep_labelled(train_raw, "train");
  Cleaned val = keep_labelled(val_raw, "val");
  Cleaned test = keep_labelled(test_raw, "test");
  if (train.x.rows() == 0) throw Error(ErrorCode::kLabelFeatureMismatch, "no labelled training frames");
  if (val.x.cols() != train.x.cols() || test.x.cols() != train.x.cols())
    throw Error(ErrorCode::kLabelFeatureMismatch, "feature dimensions differ between splits");

  const Eigen::RowVectorXd mean = train.x.colwise().mean();
  Eigen::RowVectorXd sd = ((train.x.rowwise() - mean).array().square().colwise().mean()).sqrt().matrix();
  sd = sd.cwiseMax(1e-8);
  auto standardise = [&](Matrix& x) { x = ((x.rowwise() - mean).array().rowwise() / sd.array()).matrix(); };
  standardise(train.x);
  standardise(val.x);
  standardise(test.x);

  const Index n = train.x.rows(), dim = train.x.cols();
  Matrix targets = Matrix::Zero(n, classes);
  for (Index i = 0; i < n; ++i) targets(i, train.y(i)) = 1.0;

  Matrix w = Matrix::Zero(dim, classes), mw = w, vw = w;
  Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(classes), mb = b, vb = b;
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Matrix best_w = w;
  Eigen::RowVectorXd best_b = b;
  double best_val = -1;
  int since_best = 0;
  ProbeResult result;
  for (int epoch = 1; epoch <= options.max_epochs; ++epoch) {
    Matrix logits = (train.x * w).rowwise() + b;
    logits = logits.colwise() - logits.rowwise().maxCoeff();
    Matrix prob = logits.array().exp().matrix();
    prob = (prob.array().colwise() / prob.rowwise().sum().array()).matrix();
    const Matrix g = (prob - targets) / static_cast<double>(n);
    const Matrix gw = train.x.transpose() * g;
    const Eigen::RowVectorXd gb = g.colwise().sum();
    const double c1 = 1 - std::pow(beta1, epoch), c2 = 1 - std::pow(beta2, epoch);
    mw = beta1 * mw + (1 - beta1) * gw;
    vw = beta2 * vw + (1 - beta2) * gw.cwiseAbs2();
    mb = beta1 * mb + (1 - beta1) * gb;
    vb = beta2 * vb + (1 - beta2) * gb.cwiseAbs2();
    w -= (options.lr * (mw / c1).array() / ((vw / c2).array().sqrt() + eps)).matrix();
    b -= (options.lr * (mb / c1).array() / ((vb / c2).array().sqrt() + eps)).matrix();
    const double acc = accuracy(val.x.rows() ? val.x : train.x, val.x.rows() ? val.y : train.y, w, b);
    result.epochs = epoch;
    if (acc > best_val) {
      best_val = acc;
      best_w = w;
      best_b = b;
      since_best = 0;
    } else if (++since_best >= options.patience) {
      break;
    }
  }
  result.val_accuracy = accuracy(val.x, val.y, best_w, best_b);
  result.test_accuracy = accuracy(test.x, test.y, best_w, best_b);
  return result;
}

Matrix mfcc(const Eigen::VectorXd& samples) {
  constexpr Index kWindow = 400, kHop = 160, kFft = 512, kMel = 40, kCeps = 13;
  const Index n = samples.size();
  if (n < kWindow) return Matrix(0, 3 * kCeps);
  const Index frames = (n - kWindow) / kHop + 1;
  const double pi = std::numbers::pi;

  auto hz_to_mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  auto mel_to_hz = [](double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); };
  const Index bins = kFft / 2 + 1;
  Matrix fbank = Matrix::Zero(bins, kMel);
  const double top = hz_to_mel(kSampleRate / 2.0);
  std::vector<double> edges(kMel + 2);
  for (Index m = 0; m < kMel + 2; ++m) edges[static_cast<std::size_t>(m)] = mel_to_hz(top * m / (kMel + 1));
  for (Index k = 0; k < bins; ++k) {
    const double hz = static_cast<double>(k) * kSampleRate / kFft;
    for (Index m = 0; m < kMel; ++m) {
      const double lo = edges[static_cast<std::size_t>(m)], mid = edges[static_cast<std::size_t>(m + 1)],
                   hi = edges[static_cast<std::size_t>(m + 2)];
      if (hz > lo && hz < hi) fbank(k, m) = hz <= mid ? (hz - lo) / (mid - lo) : (hi - hz) / (hi - mid);
    }
  }
  Matrix dct(kMel, kCeps);
  for (Index m = 0; m < kMel; ++m)
    for (Index c = 0; c < kCeps; ++c)
      dct(m, c) = std::sqrt((c == 0 ? 1.0 : 2.0) / kMel) * std::cos(pi * c * (m + 0.5) / kMel);

  Eigen::VectorXd window(kWindow);
  for (Index i = 0; i < kWindow; ++i) window(i) = 0.54 - 0.46 * std::cos(2 * pi * i / (kWindow - 1));

  Eigen::FFT<double> fft;
  std::vector<double> frame(kFft);
  std::vector<std::complex<double>> spec;
  Matrix power(frames, bins);
  for (Index t = 0; t < frames; ++t) {
    std::fill(frame.begin(), frame.end(), 0.0);
    for (Index i = 0; i < kWindow; ++i) {
      const Index s = t * kHop + i;
      const double prev = s > 0 ? samples(s - 1) : 0.0;
      frame[static_cast<std::size_t>(i)] = (samples(s) - 0.97 * prev) * window(i);
    }
    fft.fwd(spec, frame);
    for (Index k = 0; k < bins; ++k) power(t, k) = std::norm(spec[static_cast<std::size_t>(k)]) / kFft;
  }
  const Matrix ceps = ((power * fbank).array() + 1e-10).log().matrix() * dct;

  auto deltas = [frames](const Matrix& x) {
    Matrix d(frames, x.cols());
    for (Index t = 0; t < frames; ++t) {
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(x.cols());
      for (Index k = 1; k <= 2; ++k) {
        const Index up = std::min(frames - 1, t + k), down = std::max<Index>(0, t - k);
        acc += static_cast<double>(k) * (x.row(up) - x.row(down));
      }
      d.row(t) = acc / 10.0;
    }
    return d;
  };
  const Matrix d1 = deltas(ceps);
  const Matrix d2 = deltas(d1);
  Matrix out(frames, 3 * kCeps);
  out << ceps, d1, d2;
  return out;
}

}  // namespace scpc

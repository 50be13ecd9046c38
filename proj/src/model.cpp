// Copyright 2026 The PsyAdv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "psyadv/model.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "psyadv/log.h"
#include "psyadv/rng.h"

namespace psyadv {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

constexpr char kMagic[8] = {'P', 'S', 'Y', 'A', 'D', 'V', 'C', 'K'};
constexpr uint32_t kVersion = 1;

double MelFromHz(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }
double HzFromMel(double mel) { return 700.0 * (std::exp(mel / 1127.0) - 1.0); }

template <typename T>
void WriteRaw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T ReadRaw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ValidationError("checkpoint: unexpected end of file");
  return v;
}

void WriteString(std::ostream& out, const std::string& s) {
  WriteRaw<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string ReadString(std::istream& in) {
  uint32_t len = ReadRaw<uint32_t>(in);
  if (len > (1u << 20)) throw ValidationError("checkpoint: string too long");
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw ValidationError("checkpoint: unexpected end of file");
  return s;
}

}  // namespace

ModelConfig ModelConfig::Make(int num_speakers, int hidden, int pooling) {
  ModelConfig c;
  c.num_speakers = num_speakers;
  c.tdnn = {
      {{-2, -1, 0, 1, 2}, hidden},
      {{-2, 0, 2}, hidden},
      {{-3, 0, 3}, hidden},
      {{0}, hidden},
      {{0}, pooling},
  };
  c.fc_dims = {hidden, hidden};
  return c;
}

int ModelConfig::ReceptiveField() const {
  int field = 1;
  for (const TdnnLayer& layer : tdnn) {
    int lo = layer.context[0], hi = layer.context[0];
    for (int o : layer.context) {
      lo = std::min(lo, o);
      hi = std::max(hi, o);
    }
    field += hi - lo;
  }
  return field;
}

int Argmax(std::span<const double> v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

int Model::LabelIndex(const std::string& label) const {
  for (size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return static_cast<int>(i);
  }
  return -1;
}

ParamBlob& Model::Blob(const std::string& name) {
  for (ParamBlob& b : blobs_) {
    if (b.name == name) return b;
  }
  throw std::runtime_error(StrCat("model: no parameter named '", name, "'"));
}

const ParamBlob& Model::Blob(const std::string& name) const {
  return const_cast<Model*>(this)->Blob(name);
}

int64_t Model::NumParameters() const {
  int64_t n = 0;
  for (const ParamBlob& b : blobs_) {
    if (b.trainable) n += b.size();
  }
  return n;
}

Model Model::Init(const ModelConfig& config, std::vector<std::string> labels,
                  uint64_t seed) {
  if (static_cast<int>(labels.size()) != config.num_speakers) {
    throw std::invalid_argument("model: label count != num_speakers");
  }
  if (config.num_speakers < 2) {
    throw std::invalid_argument("model: need at least 2 speakers");
  }
  std::set<std::string> seen;
  for (const std::string& l : labels) {
    if (l.empty() || l == "none" || !seen.insert(l).second) {
      throw std::invalid_argument(
          StrCat("model: invalid or duplicate label '", l, "'"));
    }
  }
  if (config.tdnn.empty()) {
    throw std::invalid_argument("model: TDNN stack must be non-empty");
  }
  for (const TdnnLayer& l : config.tdnn) {
    if (l.context.empty() || l.output_dim < 1) {
      throw std::invalid_argument("model: malformed TDNN layer");
    }
  }
  if (config.mfcc.fft_size < config.mfcc.frame_length) {
    throw std::invalid_argument("model: FFT size below frame length");
  }

  Model m;
  m.config_ = config;
  m.labels_ = std::move(labels);

  Rng rng(seed);
  auto add_matrix = [&](const std::string& name, int out, int in) {
    ParamBlob b;
    b.name = name;
    b.shape = {out, in};
    b.data.resize(static_cast<size_t>(out) * in);
    b.grad.assign(b.data.size(), 0.0);
    double bound = std::sqrt(6.0 / in);
    for (double& v : b.data) v = rng.Uniform(-bound, bound);
    m.blobs_.push_back(std::move(b));
  };
  auto add_vector = [&](const std::string& name, int n, double init,
                        bool trainable) {
    ParamBlob b;
    b.name = name;
    b.shape = {n};
    b.data.assign(n, init);
    b.grad.assign(n, 0.0);
    b.trainable = trainable;
    m.blobs_.push_back(std::move(b));
  };
  auto add_layer = [&](const std::string& prefix, int out, int in,
                       bool with_bn) {
    add_matrix(prefix + ".weight", out, in);
    add_vector(prefix + ".bias", out, 0.0, true);
    if (with_bn) {
      add_vector(prefix + ".bn.gamma", out, 1.0, true);
      add_vector(prefix + ".bn.beta", out, 0.0, true);
      add_vector(prefix + ".bn.running_mean", out, 0.0, false);
      add_vector(prefix + ".bn.running_var", out, 1.0, false);
    }
  };

  int in_dim = config.mfcc.num_coefficients;
  for (size_t i = 0; i < config.tdnn.size(); ++i) {
    const TdnnLayer& layer = config.tdnn[i];
    add_layer(StrCat("tdnn", i + 1), layer.output_dim,
              in_dim * static_cast<int>(layer.context.size()), true);
    in_dim = layer.output_dim;
  }
  in_dim = 2 * in_dim;  // statistics pooling doubles the channel count
  for (size_t i = 0; i < config.fc_dims.size(); ++i) {
    add_layer(StrCat("fc", i + 1), config.fc_dims[i], in_dim, true);
    in_dim = config.fc_dims[i];
  }
  add_layer("output", config.num_speakers, in_dim, false);
  // A zeroed head makes the untrained classifier exactly uniform.
  for (double& v : m.Blob("output.weight").data) v = 0.0;

  m.BuildDerived();
  return m;
}

void Model::BuildDerived() {
  const MfccConfig& mf = config_.mfcc;
  window_.assign(mf.fft_size, 0.0);
  for (int n = 0; n < mf.frame_length; ++n) {
    window_[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * n / mf.frame_length);
  }

  int bins = mf.fft_size / 2 + 1;
  int num_mels = mf.num_mel_bins;
  mel_weights_.assign(static_cast<size_t>(num_mels) * bins, 0.0);
  double mel_lo = MelFromHz(mf.low_freq_hz);
  double mel_hi = MelFromHz(mf.high_freq_hz);
  std::vector<double> edges(num_mels + 2);
  for (int j = 0; j < num_mels + 2; ++j) {
    edges[j] = HzFromMel(mel_lo + (mel_hi - mel_lo) * j / (num_mels + 1));
  }
  for (int m = 0; m < num_mels; ++m) {
    double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      double f = static_cast<double>(k) * config_.sample_rate / mf.fft_size;
      double w = 0.0;
      if (f > left && f < center) {
        w = (f - left) / (center - left);
      } else if (f >= center && f < right) {
        w = (right - f) / (right - center);
      }
      mel_weights_[static_cast<size_t>(m) * bins + k] = w;
    }
  }

  int num_ceps = mf.num_coefficients;
  dct_.assign(static_cast<size_t>(num_ceps) * num_mels, 0.0);
  for (int i = 0; i < num_ceps; ++i) {
    double scale = i == 0 ? std::sqrt(1.0 / num_mels) : std::sqrt(2.0 / num_mels);
    for (int j = 0; j < num_mels; ++j) {
      dct_[static_cast<size_t>(i) * num_mels + j] =
          scale * std::cos(M_PI * i * (2.0 * j + 1.0) / (2.0 * num_mels));
    }
  }

  mfcc_plan_ = FftPlan(mf.fft_size);
}

Tensor Model::BuildMfcc(Tape& tape, Tensor wave) const {
  const MfccConfig& mf = config_.mfcc;
  Tensor frames =
      tape.Frames(wave, mf.frame_length, mf.hop_length, mf.fft_size);
  Tensor windowed = tape.MulRow(frames, window_);
  Tensor power = tape.SpectralPower(windowed, &mfcc_plan_);
  int bins = mf.fft_size / 2 + 1;
  Tensor mel = tape.MatmulNT(
      power, tape.Leaf(mel_weights_.data(), {mf.num_mel_bins, bins}));
  Tensor logmel = tape.LogEps(mel, mf.log_floor);
  return tape.MatmulNT(
      logmel, tape.Leaf(dct_.data(), {mf.num_coefficients, mf.num_mel_bins}));
}

Tensor Model::ApplyLayer(Tape& tape, Tensor rows, const std::string& prefix,
                         bool training, bool relu_bn) {
  ParamBlob& w = Blob(prefix + ".weight");
  ParamBlob& b = Blob(prefix + ".bias");
  bool want_grads = training;
  Tensor wt = tape.Leaf(w.data.data(), w.shape,
                        want_grads && w.trainable ? w.grad.data() : nullptr);
  Tensor bt = tape.Leaf(b.data.data(), b.shape,
                        want_grads && b.trainable ? b.grad.data() : nullptr);
  Tensor h = tape.AddBias(tape.MatmulNT(rows, wt), bt);
  if (!relu_bn) return h;
  h = tape.Relu(h);
  ParamBlob& gamma = Blob(prefix + ".bn.gamma");
  ParamBlob& beta = Blob(prefix + ".bn.beta");
  ParamBlob& rm = Blob(prefix + ".bn.running_mean");
  ParamBlob& rv = Blob(prefix + ".bn.running_var");
  Tensor gt = tape.Leaf(gamma.data.data(), gamma.shape,
                        want_grads ? gamma.grad.data() : nullptr);
  Tensor et = tape.Leaf(beta.data.data(), beta.shape,
                        want_grads ? beta.grad.data() : nullptr);
  return tape.BatchNorm(h, gt, et, std::span<double>(rm.data),
                        std::span<double>(rv.data), training, config_.bn_eps,
                        config_.bn_momentum);
}

Tensor Model::BuildEmbeddings(Tape& tape, std::span<const Tensor> mfccs,
                              bool training) {
  std::vector<Tensor> xs(mfccs.begin(), mfccs.end());
  for (size_t i = 0; i < config_.tdnn.size(); ++i) {
    for (Tensor& x : xs) x = tape.Splice(x, config_.tdnn[i].context);
    Tensor joined = xs.size() == 1 ? xs[0] : tape.ConcatRows(xs);
    joined = ApplyLayer(tape, joined, StrCat("tdnn", i + 1), training, true);
    if (xs.size() == 1) {
      xs[0] = joined;
    } else {
      int offset = 0;
      for (Tensor& x : xs) {
        int frames = x.shape()[0];
        x = tape.Rows(joined, offset, frames);
        offset += frames;
      }
    }
  }
  std::vector<Tensor> pooled;
  pooled.reserve(xs.size());
  for (Tensor& x : xs) pooled.push_back(tape.StatsPool(x, config_.pool_eps));
  return tape.ConcatRows(pooled);
}

Tensor Model::BuildEmbedding(Tape& tape, Tensor mfcc, bool training) {
  std::array<Tensor, 1> one = {mfcc};
  return tape.Row(BuildEmbeddings(tape, one, training), 0);
}

Tensor Model::BuildLogits(Tape& tape, Tensor pooled_rows, bool training) {
  Tensor x = pooled_rows;
  for (size_t i = 0; i < config_.fc_dims.size(); ++i) {
    x = ApplyLayer(tape, x, StrCat("fc", i + 1), training, true);
  }
  return ApplyLayer(tape, x, "output", training, false);
}

Tensor Model::BuildWaveLogits(Tape& tape, Tensor wave, bool training) {
  Tensor mfcc = BuildMfcc(tape, wave);
  std::array<Tensor, 1> one = {mfcc};
  Tensor pooled = BuildEmbeddings(tape, one, training);
  return tape.Row(BuildLogits(tape, pooled, training), 0);
}

Tensor Model::BuildProbs(Tape& tape, Tensor wave, bool training) {
  return tape.Softmax(BuildWaveLogits(tape, wave, training));
}

std::vector<double> Model::Forward(std::span<const double> wave) const {
  Tape tape;
  Model* self = const_cast<Model*>(this);
  Tensor w = tape.Leaf(wave.data(), {static_cast<int>(wave.size())});
  Tensor probs = self->BuildProbs(tape, w, false);
  auto v = probs.values();
  return {v.begin(), v.end()};
}

Model::InputGradient Model::CeGradient(std::span<const double> wave,
                                       int target) const {
  Model* self = const_cast<Model*>(this);
  InputGradient result;
  result.grad.assign(wave.size(), 0.0);
  Tape tape;
  Tensor w = tape.Leaf(wave.data(), {static_cast<int>(wave.size())},
                       result.grad.data());
  Tensor logits = self->BuildWaveLogits(tape, w, false);
  Tensor ce = tape.CrossEntropyLogits(logits, target);
  Tensor probs = tape.Softmax(logits);
  tape.Backward(ce);
  auto pv = probs.values();
  result.probs.assign(pv.begin(), pv.end());
  result.cross_entropy = ce.scalar();
  result.predicted = Argmax(result.probs);
  return result;
}

void Model::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error(StrCat("checkpoint: cannot open '", path,
                                    "' for write"));
  }
  out.write(kMagic, sizeof(kMagic));
  WriteRaw<uint32_t>(out, kVersion);
  WriteRaw<int32_t>(out, config_.sample_rate);
  WriteRaw<int32_t>(out, config_.mfcc.frame_length);
  WriteRaw<int32_t>(out, config_.mfcc.hop_length);
  WriteRaw<int32_t>(out, config_.mfcc.fft_size);
  WriteRaw<int32_t>(out, config_.mfcc.num_mel_bins);
  WriteRaw<int32_t>(out, config_.mfcc.num_coefficients);
  WriteRaw<double>(out, config_.mfcc.low_freq_hz);
  WriteRaw<double>(out, config_.mfcc.high_freq_hz);
  WriteRaw<double>(out, config_.mfcc.log_floor);
  WriteRaw<int32_t>(out, static_cast<int32_t>(config_.tdnn.size()));
  for (const TdnnLayer& l : config_.tdnn) {
    WriteRaw<int32_t>(out, static_cast<int32_t>(l.context.size()));
    for (int o : l.context) WriteRaw<int32_t>(out, o);
    WriteRaw<int32_t>(out, l.output_dim);
  }
  WriteRaw<int32_t>(out, static_cast<int32_t>(config_.fc_dims.size()));
  for (int d : config_.fc_dims) WriteRaw<int32_t>(out, d);
  WriteRaw<int32_t>(out, config_.num_speakers);
  WriteRaw<double>(out, config_.bn_eps);
  WriteRaw<double>(out, config_.bn_momentum);
  WriteRaw<double>(out, config_.pool_eps);
  WriteRaw<uint32_t>(out, static_cast<uint32_t>(labels_.size()));
  for (const std::string& l : labels_) WriteString(out, l);
  WriteRaw<uint32_t>(out, static_cast<uint32_t>(blobs_.size()));
  for (const ParamBlob& b : blobs_) {
    WriteString(out, b.name);
    WriteRaw<uint8_t>(out, b.trainable ? 1 : 0);
    WriteRaw<uint32_t>(out, static_cast<uint32_t>(b.shape.size()));
    for (int d : b.shape) WriteRaw<int32_t>(out, d);
    for (double v : b.data) WriteRaw<float>(out, static_cast<float>(v));
  }
  if (!out) throw std::runtime_error(StrCat("checkpoint: write failed for '", path, "'"));
}

Model Model::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(StrCat("checkpoint: cannot open '", path, "'"));
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ValidationError(
        StrCat("checkpoint: '", path, "' is not a model checkpoint"));
  }
  uint32_t version = ReadRaw<uint32_t>(in);
  if (version != kVersion) {
    throw ValidationError(StrCat("checkpoint: '", path,
                                 "' has unsupported version ", version));
  }
  Model m;
  m.config_.sample_rate = ReadRaw<int32_t>(in);
  m.config_.mfcc.frame_length = ReadRaw<int32_t>(in);
  m.config_.mfcc.hop_length = ReadRaw<int32_t>(in);
  m.config_.mfcc.fft_size = ReadRaw<int32_t>(in);
  m.config_.mfcc.num_mel_bins = ReadRaw<int32_t>(in);
  m.config_.mfcc.num_coefficients = ReadRaw<int32_t>(in);
  m.config_.mfcc.low_freq_hz = ReadRaw<double>(in);
  m.config_.mfcc.high_freq_hz = ReadRaw<double>(in);
  m.config_.mfcc.log_floor = ReadRaw<double>(in);
  int32_t num_tdnn = ReadRaw<int32_t>(in);
  if (num_tdnn < 1 || num_tdnn > 64) {
    throw ValidationError("checkpoint: invalid TDNN layer count");
  }
  m.config_.tdnn.resize(num_tdnn);
  for (TdnnLayer& l : m.config_.tdnn) {
    int32_t nctx = ReadRaw<int32_t>(in);
    if (nctx < 1 || nctx > 64) {
      throw ValidationError("checkpoint: invalid context size");
    }
    l.context.resize(nctx);
    for (int& o : l.context) o = ReadRaw<int32_t>(in);
    l.output_dim = ReadRaw<int32_t>(in);
  }
  int32_t num_fc = ReadRaw<int32_t>(in);
  if (num_fc < 0 || num_fc > 64) {
    throw ValidationError("checkpoint: invalid FC layer count");
  }
  m.config_.fc_dims.resize(num_fc);
  for (int& d : m.config_.fc_dims) d = ReadRaw<int32_t>(in);
  m.config_.num_speakers = ReadRaw<int32_t>(in);
  m.config_.bn_eps = ReadRaw<double>(in);
  m.config_.bn_momentum = ReadRaw<double>(in);
  m.config_.pool_eps = ReadRaw<double>(in);
  uint32_t num_labels = ReadRaw<uint32_t>(in);
  m.labels_.resize(num_labels);
  for (std::string& l : m.labels_) l = ReadString(in);
  uint32_t num_blobs = ReadRaw<uint32_t>(in);
  m.blobs_.resize(num_blobs);
  for (ParamBlob& b : m.blobs_) {
    b.name = ReadString(in);
    b.trainable = ReadRaw<uint8_t>(in) != 0;
    uint32_t ndim = ReadRaw<uint32_t>(in);
    if (ndim < 1 || ndim > 4) {
      throw ValidationError("checkpoint: invalid blob rank");
    }
    b.shape.resize(ndim);
    int64_t size = 1;
    for (int& d : b.shape) {
      d = ReadRaw<int32_t>(in);
      if (d < 1) throw ValidationError("checkpoint: invalid blob dimension");
      size *= d;
    }
    b.data.resize(size);
    b.grad.assign(size, 0.0);
    for (double& v : b.data) v = static_cast<double>(ReadRaw<float>(in));
  }
  m.BuildDerived();
  return m;
}

}  // namespace psyadv

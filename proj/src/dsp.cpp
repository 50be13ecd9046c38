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

#include "psyadv/dsp.h"

#include <cmath>

#include "psyadv/fft.h"
#include "psyadv/log.h"

namespace psyadv {

std::vector<double> MakeAnalysisWindow(int window_length) {
  std::vector<double> w(window_length);
  const double scale = std::sqrt(8.0 / 3.0);
  for (int n = 0; n < window_length; ++n) {
    double hann = 0.5 - 0.5 * std::cos(2.0 * M_PI * n / window_length);
    w[n] = scale * hann;
  }
  return w;
}

int StftFrameCount(int64_t num_samples, const StftConfig& config) {
  if (num_samples < config.window_length) return 0;
  return static_cast<int>((num_samples - config.window_length) /
                              config.hop_length +
                          1);
}

Spectrogram Stft(const Waveform& wave, const StftConfig& config) {
  int frames = StftFrameCount(wave.num_samples(), config);
  if (frames <= 0) {
    throw ValidationError(StrCat("stft: signal of ", wave.num_samples(),
                                 " samples is shorter than one window (",
                                 config.window_length, ")"));
  }
  const int n = config.window_length;
  Spectrogram spec;
  spec.frames = frames;
  spec.bins = n / 2 + 1;
  spec.re.resize(static_cast<size_t>(frames) * spec.bins);
  spec.im.resize(static_cast<size_t>(frames) * spec.bins);

  std::vector<double> window = MakeAnalysisWindow(n);
  FftPlan plan(n);
  std::vector<double> frame(n);
  std::vector<double> packed(2 * (n / 2 + 1));
  for (int t = 0; t < frames; ++t) {
    const double* x = wave.samples.data() +
                      static_cast<int64_t>(t) * config.hop_length;
    for (int i = 0; i < n; ++i) frame[i] = x[i] * window[i];
    plan.RealForward(frame.data(), packed.data());
    for (int k = 0; k < spec.bins; ++k) {
      spec.re[static_cast<size_t>(t) * spec.bins + k] = packed[2 * k];
      spec.im[static_cast<size_t>(t) * spec.bins + k] = packed[2 * k + 1];
    }
  }
  return spec;
}

PsdMatrix Psd(const Spectrogram& spec, const StftConfig& config) {
  PsdMatrix psd;
  psd.frames = spec.frames;
  psd.bins = spec.bins;
  psd.db.resize(spec.re.size());
  const double n = static_cast<double>(config.window_length);
  for (size_t i = 0; i < spec.re.size(); ++i) {
    double re = spec.re[i] / n;
    double im = spec.im[i] / n;
    double power = re * re + im * im;
    psd.db[i] = power > 0.0 ? 10.0 * std::log10(power) : kSilenceDb;
  }
  return psd;
}

PsdMatrix NormalizeSpl(const PsdMatrix& psd) {
  double max_db = kSilenceDb;
  for (double v : psd.db) {
    if (v != kSilenceDb && v > max_db) max_db = v;
  }
  if (max_db == kSilenceDb) {
    throw std::runtime_error(
        "normalize_spl: all bins are silent, no 96 dB anchor exists");
  }
  PsdMatrix out = psd;
  out.normalized = true;
  out.normalization_offset_db = kSplReferenceDb - max_db;
  for (double& v : out.db) {
    if (v != kSilenceDb) v += out.normalization_offset_db;
  }
  return out;
}

}  // namespace psyadv

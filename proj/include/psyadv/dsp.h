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

#ifndef PSYADV_DSP_H_
#define PSYADV_DSP_H_

#include <vector>

#include "psyadv/audio_io.h"

namespace psyadv {

// Placeholder dB value for bins with exactly zero magnitude, where the log
// PSD is undefined.  Kept finite so matrices stay NaN/inf free.
inline constexpr double kSilenceDb = -1e9;

// Reference sound pressure level the loudest PSD bin is mapped to.
inline constexpr double kSplReferenceDb = 96.0;

struct StftConfig {
  int window_length = 2048;
  int hop_length = 512;
};

// Periodic Hann scaled by sqrt(8/3) so the window has unit average power
// (sum of squares equals the window length).
std::vector<double> MakeAnalysisWindow(int window_length);

// Number of full analysis frames; trailing partial frames are dropped.
int StftFrameCount(int64_t num_samples, const StftConfig& config);

struct Spectrogram {
  int frames = 0;
  int bins = 0;  // window_length / 2 + 1
  std::vector<double> re, im;

  double Re(int t, int k) const { return re[static_cast<size_t>(t) * bins + k]; }
  double Im(int t, int k) const { return im[static_cast<size_t>(t) * bins + k]; }
};

// Windowed STFT of the waveform.  Raises ValidationError when the signal is
// shorter than one window.
Spectrogram Stft(const Waveform& wave, const StftConfig& config);

struct PsdMatrix {
  int frames = 0;
  int bins = 0;
  std::vector<double> db;
  bool normalized = false;
  // The additive constant applied by NormalizeSpl (96 - max dB).  Zero until
  // normalization.
  double normalization_offset_db = 0.0;

  double At(int t, int k) const { return db[static_cast<size_t>(t) * bins + k]; }
  double& At(int t, int k) { return db[static_cast<size_t>(t) * bins + k]; }
};

// Log power spectral density, 10*log10(|s/N|^2) per bin, with kSilenceDb for
// zero-magnitude bins.
PsdMatrix Psd(const Spectrogram& spec, const StftConfig& config);

// Shifts the PSD so its global maximum sits at 96 dB SPL (one constant per
// matrix).  Raises std::runtime_error if every bin is silent.
PsdMatrix NormalizeSpl(const PsdMatrix& psd);

}  // namespace psyadv

#endif  // PSYADV_DSP_H_

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
//
// Frequency-domain masking model: absolute threshold of hearing, Bark scale,
// tonal masker extraction and the per-frame global masking threshold that
// bounds an imperceptible perturbation's power spectral density.

#ifndef PSYADV_PSYCHO_H_
#define PSYADV_PSYCHO_H_

#include <vector>

#include "psyadv/dsp.h"

namespace psyadv {

// Finite stand-in for "no masking possible here" used inside threshold
// matrices (bins outside the 20 Hz..8 kHz hearing band).  Matrices stay
// finite everywhere; only the scalar helpers below return infinities.
inline constexpr double kUnmaskableDb = 1e9;

// Bark critical-band rate for a frequency in Hz.
double BarkScale(double freq_hz);

// Absolute threshold of hearing in dB SPL.  Returns +infinity outside
// [20 Hz, 8 kHz], where the model treats bins as unmaskable.
double AthDb(double freq_hz);

// Per-bin frequency/Bark/ATH lookup for one STFT layout.  ath_db holds
// kUnmaskableDb where AthDb is infinite.
struct BinGrid {
  int bins = 0;
  std::vector<double> freq_hz;
  std::vector<double> bark;
  std::vector<double> ath_db;

  static BinGrid Make(int bins, int sample_rate, int window_length);
};

struct Masker {
  int bin = 0;
  double bark = 0.0;
  double spl_db = 0.0;  // smoothed sound pressure level
};

struct PsychoConfig {
  // Two maskers closer than this are merged, keeping the louder (ties keep
  // the lower bin).
  double nms_window_bark = 0.5;
  // Default pipeline order is suppression then smoothing; setting this runs
  // the three-bin smoothing first and suppresses on smoothed levels.
  bool smooth_before_suppression = false;
};

// Extracts tonal maskers from one frame of a 96 dB normalized PSD:
// local maxima at or above ATH, de-duplicated within nms_window_bark, with
// levels smoothed over bins k-1..k+1 by power addition.
std::vector<Masker> FindMaskers(const PsdMatrix& normalized_psd, int frame,
                                const BinGrid& grid,
                                const PsychoConfig& config = PsychoConfig());

// Single-masker threshold at a maskee position, combining the Bark-dependent
// offset with the two-slope spreading function.  Returns -infinity when the
// maskee is outside the masker's [-3, 8) Bark reach.
double IndividualThresholdDb(const Masker& masker, double maskee_bark);

struct MaskingThreshold {
  int frames = 0;
  int bins = 0;
  std::vector<double> db;

  double At(int t, int k) const { return db[static_cast<size_t>(t) * bins + k]; }
  double& At(int t, int k) { return db[static_cast<size_t>(t) * bins + k]; }
};

// Per-frame global masking threshold: power sum of ATH and all individual
// masker thresholds (unmaskable bins hold kUnmaskableDb).  Requires a
// normalized PSD.
MaskingThreshold GlobalThreshold(const PsdMatrix& normalized_psd,
                                 const BinGrid& grid,
                                 const PsychoConfig& config = PsychoConfig());

}  // namespace psyadv

#endif  // PSYADV_PSYCHO_H_

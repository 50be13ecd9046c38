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
// Independent reference for the masking threshold pipeline, used only by
// tests.  Everything is evaluated directly from the defining formulas with a
// naive O(N^2) DFT and no shared code with the library, so agreement between
// the two is meaningful.

#ifndef PSYADV_TESTS_COMMON_PSYCHO_REFERENCE_H_
#define PSYADV_TESTS_COMMON_PSYCHO_REFERENCE_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace psyref {

inline constexpr double kSilence = -1e9;
inline constexpr double kUnmaskable = 1e9;

struct Matrix {
  int frames = 0;
  int bins = 0;
  std::vector<double> v;

  double At(int t, int k) const {
    return v[static_cast<size_t>(t) * bins + k];
  }
  double& At(int t, int k) { return v[static_cast<size_t>(t) * bins + k]; }
};

inline double Bark(double f) {
  double r = f / 7500.0;
  return 13.0 * std::atan(0.00076 * f) + 3.5 * std::atan(r * r);
}

inline double Ath(double f) {
  double khz = f / 1000.0;
  return 3.64 * std::pow(khz, -0.8) -
         6.5 * std::exp(-0.6 * (khz - 3.3) * (khz - 3.3)) +
         1e-3 * khz * khz * khz * khz;
}

inline double PowerOf(double db) {
  return db == kSilence ? 0.0 : std::pow(10.0, db / 10.0);
}

// Normalized log power spectral density via a naive DFT of each
// sqrt(8/3)-scaled periodic-Hann frame.  The loudest bin is shifted to
// 96 dB; `offset_out`, when non-null, receives the shift.
inline Matrix NormalizedPsdReference(const std::vector<double>& x,
                                     int window_length, int hop,
                                     double* offset_out = nullptr) {
  const int n = window_length;
  const int bins = n / 2 + 1;
  const int frames =
      static_cast<int>(x.size()) < n
          ? 0
          : static_cast<int>((static_cast<int64_t>(x.size()) - n) / hop + 1);

  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = std::sqrt(8.0 / 3.0) * (0.5 - 0.5 * std::cos(2.0 * M_PI * i / n));
  }

  Matrix psd;
  psd.frames = frames;
  psd.bins = bins;
  psd.v.resize(static_cast<size_t>(frames) * bins);
  for (int t = 0; t < frames; ++t) {
    for (int k = 0; k < bins; ++k) {
      double re = 0.0, im = 0.0;
      for (int i = 0; i < n; ++i) {
        double arg = 2.0 * M_PI * k * i / n;
        double s = x[static_cast<size_t>(t) * hop + i] * w[i];
        re += s * std::cos(arg);
        im -= s * std::sin(arg);
      }
      double power = (re / n) * (re / n) + (im / n) * (im / n);
      psd.At(t, k) = power > 0.0 ? 10.0 * std::log10(power) : kSilence;
    }
  }

  double max_db = kSilence;
  for (double d : psd.v) {
    if (d != kSilence) max_db = std::max(max_db, d);
  }
  double offset = 96.0 - max_db;
  for (double& d : psd.v) {
    if (d != kSilence) d += offset;
  }
  if (offset_out != nullptr) *offset_out = offset;
  return psd;
}

// Global masking threshold computed from scratch: tonal masker selection
// (local maxima at or above the hearing threshold, strongest survivor per
// nms_window_bark neighborhood, three-bin power smoothing), two-slope
// spreading with the Bark-dependent offset, and a power sum with the
// absolute threshold.
inline Matrix GlobalThresholdReference(const std::vector<double>& x,
                                       int sample_rate, int window_length,
                                       int hop, double nms_window_bark) {
  Matrix psd = NormalizedPsdReference(x, window_length, hop);
  const int bins = psd.bins;

  std::vector<double> freq(bins), bark(bins);
  for (int k = 0; k < bins; ++k) {
    freq[k] = static_cast<double>(k) * sample_rate / window_length;
    bark[k] = Bark(freq[k]);
  }
  auto audible = [&](int k) { return freq[k] >= 20.0 && freq[k] <= 8000.0; };

  Matrix tg;
  tg.frames = psd.frames;
  tg.bins = bins;
  tg.v.resize(psd.v.size());
  for (int t = 0; t < psd.frames; ++t) {
    std::vector<int> cands;
    for (int k = 0; k < bins; ++k) {
      if (!audible(k)) continue;
      double v = psd.At(t, k);
      if (v == kSilence) continue;
      if (k > 0 && psd.At(t, k - 1) > v) continue;
      if (k + 1 < bins && psd.At(t, k + 1) > v) continue;
      if (v < Ath(freq[k])) continue;
      cands.push_back(k);
    }

    std::vector<int> kept;
    for (int k : cands) {
      if (!kept.empty() && bark[k] - bark[kept.back()] < nms_window_bark) {
        if (psd.At(t, k) > psd.At(t, kept.back())) kept.back() = k;
      } else {
        kept.push_back(k);
      }
    }

    std::vector<double> masker_bark, masker_level;
    for (int k : kept) {
      double sum = 0.0;
      for (int j = std::max(0, k - 1); j <= std::min(bins - 1, k + 1); ++j) {
        sum += PowerOf(psd.At(t, j));
      }
      masker_bark.push_back(bark[k]);
      masker_level.push_back(sum > 0.0 ? 10.0 * std::log10(sum) : kSilence);
    }

    for (int k = 0; k < bins; ++k) {
      if (!audible(k)) {
        tg.At(t, k) = kUnmaskable;
        continue;
      }
      double sum = std::pow(10.0, Ath(freq[k]) / 10.0);
      for (size_t m = 0; m < masker_bark.size(); ++m) {
        double dz = bark[k] - masker_bark[m];
        if (dz < -3.0 || dz >= 8.0) continue;
        double p = masker_level[m];
        double sf;
        if (dz < -1.0) {
          sf = 17.0 * dz - 0.4 * p + 11.0;
        } else if (dz < 0.0) {
          sf = (0.4 * p + 6.0) * dz;
        } else if (dz < 1.0) {
          sf = -17.0 * dz;
        } else {
          sf = (0.15 * p - 17.0) * dz - 0.15 * p;
        }
        double ti = p + (-6.025 - 0.275 * masker_bark[m]) + sf;
        sum += std::pow(10.0, ti / 10.0);
      }
      tg.At(t, k) = 10.0 * std::log10(sum);
    }
  }
  return tg;
}

}  // namespace psyref

#endif  // PSYADV_TESTS_COMMON_PSYCHO_REFERENCE_H_

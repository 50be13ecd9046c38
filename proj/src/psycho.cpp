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

#include "psyadv/psycho.h"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "psyadv/log.h"

namespace psyadv {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double PowerFromDb(double db) {
  if (db == kSilenceDb) return 0.0;
  return std::pow(10.0, 0.1 * db);
}

// Power sum of a bin with its in-range neighbors, back in dB.
double SmoothedLevelDb(const PsdMatrix& psd, int frame, int bin) {
  double sum = 0.0;
  for (int j = bin - 1; j <= bin + 1; ++j) {
    if (j < 0 || j >= psd.bins) continue;
    sum += PowerFromDb(psd.At(frame, j));
  }
  return sum > 0.0 ? 10.0 * std::log10(sum) : kSilenceDb;
}

struct Candidate {
  int bin;
  double level_db;  // level used for suppression ordering
};

// Keeps at most one candidate per nms_window_bark neighborhood.  Candidates
// arrive in ascending bin order, so only the most recent survivor can be
// within reach of the next candidate.
std::vector<Candidate> SuppressNeighbors(const std::vector<Candidate>& cands,
                                         const BinGrid& grid,
                                         double window_bark) {
  std::vector<Candidate> kept;
  for (const Candidate& c : cands) {
    if (!kept.empty() &&
        grid.bark[c.bin] - grid.bark[kept.back().bin] < window_bark) {
      if (c.level_db > kept.back().level_db) kept.back() = c;
    } else {
      kept.push_back(c);
    }
  }
  return kept;
}

}  // namespace

double BarkScale(double freq_hz) {
  double r = freq_hz / 7500.0;
  return 13.0 * std::atan(0.00076 * freq_hz) + 3.5 * std::atan(r * r);
}

double AthDb(double freq_hz) {
  if (freq_hz < 20.0 || freq_hz > 8000.0) return kInf;
  double khz = freq_hz / 1000.0;
  return 3.64 * std::pow(khz, -0.8) -
         6.5 * std::exp(-0.6 * (khz - 3.3) * (khz - 3.3)) +
         1e-3 * khz * khz * khz * khz;
}

BinGrid BinGrid::Make(int bins, int sample_rate, int window_length) {
  BinGrid grid;
  grid.bins = bins;
  grid.freq_hz.resize(bins);
  grid.bark.resize(bins);
  grid.ath_db.resize(bins);
  for (int k = 0; k < bins; ++k) {
    double f = static_cast<double>(k) * sample_rate / window_length;
    grid.freq_hz[k] = f;
    grid.bark[k] = BarkScale(f);
    double ath = AthDb(f);
    grid.ath_db[k] = std::isinf(ath) ? kUnmaskableDb : ath;
  }
  return grid;
}

std::vector<Masker> FindMaskers(const PsdMatrix& normalized_psd, int frame,
                                const BinGrid& grid,
                                const PsychoConfig& config) {
  if (!normalized_psd.normalized) {
    throw std::invalid_argument("find_maskers: PSD must be SPL-normalized");
  }
  if (normalized_psd.bins != grid.bins) {
    throw std::invalid_argument("find_maskers: grid/PSD bin count mismatch");
  }
  if (frame < 0 || frame >= normalized_psd.frames) {
    throw std::invalid_argument(StrCat("find_maskers: frame ", frame,
                                       " out of range [0, ",
                                       normalized_psd.frames, ")"));
  }

  const PsdMatrix& p = normalized_psd;
  std::vector<Candidate> cands;
  for (int k = 0; k < p.bins; ++k) {
    if (grid.ath_db[k] == kUnmaskableDb) continue;
    double v = p.At(frame, k);
    if (v == kSilenceDb) continue;
    if (k > 0 && p.At(frame, k - 1) > v) continue;
    if (k + 1 < p.bins && p.At(frame, k + 1) > v) continue;
    if (v < grid.ath_db[k]) continue;
    cands.push_back({k, p.At(frame, k)});
  }

  std::vector<Masker> maskers;
  if (config.smooth_before_suppression) {
    for (Candidate& c : cands) c.level_db = SmoothedLevelDb(p, frame, c.bin);
    std::vector<Candidate> kept =
        SuppressNeighbors(cands, grid, config.nms_window_bark);
    for (const Candidate& c : kept) {
      maskers.push_back({c.bin, grid.bark[c.bin], c.level_db});
    }
  } else {
    std::vector<Candidate> kept =
        SuppressNeighbors(cands, grid, config.nms_window_bark);
    for (const Candidate& c : kept) {
      maskers.push_back({c.bin, grid.bark[c.bin],
                         SmoothedLevelDb(p, frame, c.bin)});
    }
  }
  return maskers;
}

double IndividualThresholdDb(const Masker& masker, double maskee_bark) {
  double db = maskee_bark - masker.bark;
  if (db < -3.0 || db >= 8.0) return -kInf;
  double p = masker.spl_db;
  double sf;
  if (db < -1.0) {
    sf = 17.0 * db - 0.4 * p + 11.0;
  } else if (db < 0.0) {
    sf = (0.4 * p + 6.0) * db;
  } else if (db < 1.0) {
    sf = -17.0 * db;
  } else {
    sf = (0.15 * p - 17.0) * db - 0.15 * p;
  }
  double offset = -6.025 - 0.275 * masker.bark;
  return p + offset + sf;
}

MaskingThreshold GlobalThreshold(const PsdMatrix& normalized_psd,
                                 const BinGrid& grid,
                                 const PsychoConfig& config) {
  if (!normalized_psd.normalized) {
    throw std::invalid_argument("global_threshold: PSD must be SPL-normalized");
  }
  MaskingThreshold tg;
  tg.frames = normalized_psd.frames;
  tg.bins = normalized_psd.bins;
  tg.db.resize(static_cast<size_t>(tg.frames) * tg.bins);
  for (int t = 0; t < tg.frames; ++t) {
    std::vector<Masker> maskers = FindMaskers(normalized_psd, t, grid, config);
    for (int k = 0; k < tg.bins; ++k) {
      if (grid.ath_db[k] == kUnmaskableDb) {
        tg.At(t, k) = kUnmaskableDb;
        continue;
      }
      double sum = std::pow(10.0, 0.1 * grid.ath_db[k]);
      for (const Masker& m : maskers) {
        double ti = IndividualThresholdDb(m, grid.bark[k]);
        if (!std::isinf(ti)) sum += std::pow(10.0, 0.1 * ti);
      }
      tg.At(t, k) = 10.0 * std::log10(sum);
    }
  }
  return tg;
}

}  // namespace psyadv

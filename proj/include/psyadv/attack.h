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
// Two-stage targeted attack.  Stage 1 finds an adversarial perturbation
// under a shrinking l-infinity budget with sign-gradient steps; stage 2
// trades cross entropy against the psychoacoustic hinge loss, steering the
// perturbation's PSD under the original signal's masking threshold.

#ifndef PSYADV_ATTACK_H_
#define PSYADV_ATTACK_H_

#include <span>
#include <vector>

#include "psyadv/model.h"
#include "psyadv/psycho.h"

namespace psyadv {

struct Stage1Config {
  double lr = 100.0;
  int steps = 3000;
  double eps0 = 2000.0;       // initial budget, integer PCM units
  double eps_decay = 0.8;     // applied after every successful iterate
};

struct Stage2Config {
  double lr = 1.0;
  int steps = 1000;
  double alpha0 = 0.05;       // initial weight of the threshold loss
  double alpha_up = 1.2;      // applied after a successful iterate
  double alpha_down = 0.8;    // applied after a failed iterate
  bool use_adam = true;       // plain gradient descent when false
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

// Everything stage 2 needs about the original signal: its masking threshold
// and the SPL normalization constant that maps perturbation PSDs onto the
// same dB scale.
struct ThresholdContext {
  StftConfig stft;
  PsychoConfig psycho;
  int sample_rate = 0;
  int64_t num_samples = 0;
  int frames = 0;
  int bins = 0;
  double offset_db = 0.0;  // 96 - max PSD of the original signal
  std::vector<double> window;
  FftPlan plan{2};
  BinGrid grid;
  MaskingThreshold threshold;

  // Runs the psychoacoustic pipeline on the original signal.  A fully silent
  // signal yields the ATH-only threshold with a zero offset.
  static ThresholdContext FromOriginal(const Waveform& x,
                                       const StftConfig& stft,
                                       const PsychoConfig& psycho);
};

// Mean hinge loss max(0, psd(delta) - threshold) over all frames and bins,
// as a tape node.  delta must have ctx.num_samples samples.
Tensor BuildThresholdLoss(Tape& tape, Tensor delta,
                          const ThresholdContext& ctx);

// Convenience scalar evaluation of the same loss.
double ThresholdLossValue(const ThresholdContext& ctx,
                          std::span<const double> delta);

struct IterationRecord {
  int iteration = 0;
  double cross_entropy = 0.0;
  double threshold_loss = 0.0;  // zero in stage 1, which does not use it
  double bound = 0.0;           // epsilon in stage 1, alpha in stage 2
  double max_abs_delta = 0.0;
  bool success = false;         // argmax equals the target at this iterate
};

struct StageResult {
  std::vector<double> delta;
  bool success = false;
  int iterations = 0;
  std::vector<IterationRecord> trace;
};

// Sign-gradient descent on cross entropy under a shrinking l-inf budget.
// Returns the last successful iterate, or the final one if none succeeded.
StageResult RunStage1(const Model& model, std::span<const double> x,
                      int target, const Stage1Config& config);

// Combined loss CE + alpha * threshold hinge, adapting alpha up on success
// and down on failure.  Returns the successful iterate with the smallest
// threshold loss, or the final iterate if none succeeded.
StageResult RunStage2(const Model& model, std::span<const double> x,
                      std::span<const double> delta0, int target,
                      const ThresholdContext& ctx, const Stage2Config& config);

struct AttackConfig {
  Stage1Config stage1;
  Stage2Config stage2;
  StftConfig stft;
  PsychoConfig psycho;
};

struct StageMetrics {
  bool success = false;
  int iterations = 0;
  double snr_db = 0.0;
  double exceed_fraction = 0.0;   // share of bins above threshold
  double exceedance_db = 0.0;     // mean hinge margin over all bins
};

struct AttackOutcome {
  int pre_attack_predicted = 0;
  StageResult stage1;
  StageResult stage2;
  StageMetrics stage1_metrics;
  StageMetrics stage2_metrics;
  std::vector<double> adversarial;  // x + stage 2 delta
};

// Runs both stages against one utterance and fills in per-stage metrics.
AttackOutcome AttackUtterance(const Model& model, const Waveform& x,
                              int target, const AttackConfig& config);

}  // namespace psyadv

#endif  // PSYADV_ATTACK_H_

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

#include "psyadv/attack.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "psyadv/kernels.h"
#include "psyadv/log.h"
#include "psyadv/metrics.h"

namespace psyadv {
namespace {

// Floor for |spectrum|^2 inside the differentiable PSD; keeps the log finite
// for silent frames while staying far below any audible level.
constexpr double kPowerFloor = 1e-60;

double MaxAbs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

ThresholdContext ThresholdContext::FromOriginal(const Waveform& x,
                                                const StftConfig& stft,
                                                const PsychoConfig& psycho) {
  ThresholdContext ctx;
  ctx.stft = stft;
  ctx.psycho = psycho;
  ctx.sample_rate = x.sample_rate;
  ctx.num_samples = x.num_samples();
  ctx.window = MakeAnalysisWindow(stft.window_length);
  ctx.plan = FftPlan(stft.window_length);

  Spectrogram spec = Stft(x, stft);
  ctx.frames = spec.frames;
  ctx.bins = spec.bins;
  ctx.grid = BinGrid::Make(spec.bins, x.sample_rate, stft.window_length);

  PsdMatrix psd = Psd(spec, stft);
  bool any_signal = false;
  for (double v : psd.db) {
    if (v != kSilenceDb) {
      any_signal = true;
      break;
    }
  }
  if (any_signal) {
    PsdMatrix normalized = NormalizeSpl(psd);
    ctx.offset_db = normalized.normalization_offset_db;
    ctx.threshold = GlobalThreshold(normalized, ctx.grid, psycho);
  } else {
    // Fully silent input: nothing can mask, so only the hearing threshold
    // constrains the perturbation and no 96 dB anchor exists.
    psd.normalized = true;
    ctx.offset_db = 0.0;
    ctx.threshold = GlobalThreshold(psd, ctx.grid, psycho);
  }
  return ctx;
}

Tensor BuildThresholdLoss(Tape& tape, Tensor delta,
                          const ThresholdContext& ctx) {
  if (delta.size() != ctx.num_samples) {
    throw std::invalid_argument(
        StrCat("threshold_loss: delta has ", delta.size(),
               " samples but the context was built for ", ctx.num_samples));
  }
  Tensor frames = tape.Frames(delta, ctx.stft.window_length,
                              ctx.stft.hop_length, ctx.stft.window_length);
  Tensor windowed = tape.MulRow(frames, ctx.window);
  Tensor power = tape.SpectralPower(windowed, &ctx.plan);
  // PSD in the original signal's normalized SPL scale:
  // 10*log10(|s|^2 / N^2) + offset.
  double add_db =
      ctx.offset_db - 20.0 * std::log10(static_cast<double>(ctx.stft.window_length));
  Tensor psd = tape.PsdDb(power, add_db, kPowerFloor);
  Tensor margins = tape.SubConst(psd, ctx.threshold.db.data());
  return tape.Mean(tape.Relu(margins));
}

double ThresholdLossValue(const ThresholdContext& ctx,
                          std::span<const double> delta) {
  Tape tape;
  Tensor d = tape.Leaf(delta.data(), {static_cast<int>(delta.size())});
  return BuildThresholdLoss(tape, d, ctx).scalar();
}

StageResult RunStage1(const Model& model, std::span<const double> x,
                      int target, const Stage1Config& config) {
  StageResult result;
  const int64_t n = static_cast<int64_t>(x.size());
  std::vector<double> delta(n, 0.0);
  std::vector<double> u(n);
  std::vector<double> best;
  double eps = config.eps0;
  result.trace.reserve(config.steps);

  for (int it = 0; it < config.steps; ++it) {
    for (int64_t i = 0; i < n; ++i) u[i] = x[i] + delta[i];
    Model::InputGradient grad = model.CeGradient(u, target);

    IterationRecord rec;
    rec.iteration = it;
    rec.cross_entropy = grad.cross_entropy;
    rec.bound = eps;
    rec.max_abs_delta = MaxAbs(delta);
    rec.success = grad.predicted == target;
    result.trace.push_back(rec);

    if (rec.success) {
      best = delta;
      result.success = true;
      eps *= config.eps_decay;
    }
    kernels::SignStepClip(delta.data(), grad.grad.data(), config.lr, eps, n);
  }
  result.iterations = config.steps;
  result.delta = result.success ? std::move(best) : std::move(delta);
  return result;
}

StageResult RunStage2(const Model& model, std::span<const double> x,
                      std::span<const double> delta0, int target,
                      const ThresholdContext& ctx,
                      const Stage2Config& config) {
  if (delta0.size() != x.size()) {
    throw std::invalid_argument("stage2: delta0 length mismatch");
  }
  StageResult result;
  const int64_t n = static_cast<int64_t>(x.size());
  std::vector<double> delta(delta0.begin(), delta0.end());
  std::vector<double> dgrad(n, 0.0);
  std::vector<double> m1, m2;
  if (config.use_adam) {
    m1.assign(n, 0.0);
    m2.assign(n, 0.0);
  }
  std::vector<double> best;
  double best_loss = std::numeric_limits<double>::infinity();
  double alpha = config.alpha0;
  result.trace.reserve(config.steps);
  Model* mutable_model = const_cast<Model*>(&model);

  for (int it = 0; it < config.steps; ++it) {
    std::fill(dgrad.begin(), dgrad.end(), 0.0);
    Tape tape;
    Tensor d = tape.Leaf(delta.data(), {static_cast<int>(n)}, dgrad.data());
    Tensor xt = tape.Leaf(x.data(), {static_cast<int>(n)});
    Tensor adv = tape.Add(xt, d);
    Tensor logits = mutable_model->BuildWaveLogits(tape, adv, false);
    Tensor ce = tape.CrossEntropyLogits(logits, target);
    Tensor lth = BuildThresholdLoss(tape, d, ctx);
    Tensor combined = tape.Add(ce, tape.Scale(lth, alpha));
    tape.Backward(combined);

    IterationRecord rec;
    rec.iteration = it;
    rec.cross_entropy = ce.scalar();
    rec.threshold_loss = lth.scalar();
    rec.bound = alpha;
    rec.max_abs_delta = MaxAbs(delta);
    rec.success = Argmax(logits.values()) == target;
    result.trace.push_back(rec);

    if (rec.success) {
      if (rec.threshold_loss < best_loss) {
        best_loss = rec.threshold_loss;
        best = delta;
        result.success = true;
      }
      alpha *= config.alpha_up;
    } else {
      alpha *= config.alpha_down;
    }

    if (config.use_adam) {
      double step = static_cast<double>(it) + 1.0;
      double bc1 = 1.0 - std::pow(config.adam_beta1, step);
      double bc2 = 1.0 - std::pow(config.adam_beta2, step);
      kernels::AdamStep(delta.data(), dgrad.data(), m1.data(), m2.data(), n,
                        config.lr, config.adam_beta1, config.adam_beta2,
                        config.adam_eps, bc1, bc2);
    } else {
      kernels::Axpy(-config.lr, dgrad.data(), delta.data(), n);
    }
  }
  result.iterations = config.steps;
  result.delta = result.success ? std::move(best) : std::move(delta);
  return result;
}

AttackOutcome AttackUtterance(const Model& model, const Waveform& x,
                              int target, const AttackConfig& config) {
  if (target < 0 || target >= model.config().num_speakers) {
    throw std::invalid_argument("attack: target index out of range");
  }
  AttackOutcome outcome;
  std::vector<double> probs = model.Forward(x.samples);
  outcome.pre_attack_predicted = Argmax(probs);

  ThresholdContext ctx =
      ThresholdContext::FromOriginal(x, config.stft, config.psycho);

  outcome.stage1 = RunStage1(model, x.samples, target, config.stage1);
  outcome.stage2 = RunStage2(model, x.samples, outcome.stage1.delta, target,
                             ctx, config.stage2);

  auto fill_metrics = [&](const StageResult& stage) {
    StageMetrics m;
    m.success = stage.success;
    m.iterations = stage.iterations;
    m.snr_db = SnrDb(x.samples, stage.delta);
    ExceedanceStats ex = Exceedance(ctx, stage.delta);
    m.exceed_fraction = ex.fraction;
    m.exceedance_db = ex.mean_db;
    return m;
  };
  outcome.stage1_metrics = fill_metrics(outcome.stage1);
  outcome.stage2_metrics = fill_metrics(outcome.stage2);

  outcome.adversarial.resize(x.samples.size());
  for (size_t i = 0; i < x.samples.size(); ++i) {
    outcome.adversarial[i] = x.samples[i] + outcome.stage2.delta[i];
  }
  return outcome;
}

}  // namespace psyadv

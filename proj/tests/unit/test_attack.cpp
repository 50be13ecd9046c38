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
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "psyadv/metrics.h"
#include "psyadv/rng.h"
#include "psyadv/synth.h"
#include "psyadv/train.h"

namespace psyadv {
namespace {

SynthConfig ToyCorpusConfig() {
  SynthConfig cfg;
  cfg.num_speakers = 2;
  cfg.utterances_per_speaker = 4;
  cfg.duration_seconds = 0.3;
  cfg.seed = 5;
  return cfg;
}

// Small two-speaker model trained just enough to separate the toy voices.
Model TrainedToyModel() {
  SynthConfig scfg = ToyCorpusConfig();
  std::vector<TrainItem> items;
  for (int s = 0; s < scfg.num_speakers; ++s) {
    for (int u = 0; u < scfg.utterances_per_speaker; ++u) {
      TrainItem item;
      item.samples = SynthSpeech(scfg, s, u).samples;
      item.label = s;
      items.push_back(std::move(item));
    }
  }
  ModelConfig mcfg = ModelConfig::Make(2, 8, 16);
  Model model = Model::Init(mcfg, {"m0", "f0"}, 7);
  TrainConfig tcfg;
  tcfg.epochs = 4;
  tcfg.batch_size = 4;
  tcfg.seed = 7;
  tcfg.log_progress = false;
  TrainModel(model, items, tcfg);
  return model;
}

Waveform ToyUtterance(int speaker, int utterance = 0) {
  return SynthSpeech(ToyCorpusConfig(), speaker, utterance);
}

TEST_CASE("threshold context captures the stft geometry") {
  Waveform x = ToyUtterance(0);
  StftConfig stft;
  ThresholdContext ctx = ThresholdContext::FromOriginal(x, stft, PsychoConfig());
  CHECK(ctx.num_samples == x.num_samples());
  CHECK(ctx.frames == StftFrameCount(x.num_samples(), stft));
  CHECK(ctx.bins == 1025);
  CHECK(std::isfinite(ctx.offset_db));
  CHECK(ctx.offset_db != 0.0);
  for (int k = 0; k < ctx.bins; ++k) {
    if (ctx.grid.ath_db[k] == kUnmaskableDb) {
      CHECK(ctx.threshold.At(0, k) == kUnmaskableDb);
    } else {
      CHECK(ctx.threshold.At(0, k) >= ctx.grid.ath_db[k] - 1e-9);
    }
  }
}

TEST_CASE("silent input degrades to the hearing threshold") {
  Waveform x;
  x.samples.assign(4096, 0.0);
  ThresholdContext ctx =
      ThresholdContext::FromOriginal(x, StftConfig(), PsychoConfig());
  CHECK(ctx.offset_db == 0.0);
  for (int k = 0; k < ctx.bins; ++k) {
    if (ctx.grid.ath_db[k] != kUnmaskableDb) {
      CHECK(ctx.threshold.At(0, k) ==
            doctest::Approx(ctx.grid.ath_db[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("threshold loss is zero for a zero perturbation") {
  Waveform x = ToyUtterance(0);
  ThresholdContext ctx =
      ThresholdContext::FromOriginal(x, StftConfig(), PsychoConfig());
  std::vector<double> zeros(x.samples.size(), 0.0);
  CHECK(ThresholdLossValue(ctx, zeros) == 0.0);
}

TEST_CASE("threshold loss shifts by 20 dB when the perturbation is 10x") {
  Waveform x = ToyUtterance(1);
  ThresholdContext ctx =
      ThresholdContext::FromOriginal(x, StftConfig(), PsychoConfig());

  // Extremely loud white noise puts every audible cell far above threshold,
  // so scaling by 10 adds exactly 20 dB to each hinge margin.  Unmaskable
  // bins never contribute, which the mean over all cells reflects.
  Rng rng(21);
  std::vector<double> loud(x.samples.size());
  for (double& v : loud) v = 1e8 * rng.Normal();
  std::vector<double> louder = loud;
  for (double& v : louder) v *= 10.0;

  double l1 = ThresholdLossValue(ctx, loud);
  double l2 = ThresholdLossValue(ctx, louder);
  CHECK(l1 > 0.0);
  double audible_share = 1022.0 / 1025.0;
  CHECK(l2 - l1 == doctest::Approx(20.0 * audible_share).epsilon(1e-9));

  ExceedanceStats stats = Exceedance(ctx, loud);
  CHECK(stats.mean_db == doctest::Approx(l1).epsilon(1e-9));
  CHECK(stats.fraction == doctest::Approx(audible_share).epsilon(1e-9));
}

TEST_CASE("threshold loss validates the perturbation length") {
  Waveform x = ToyUtterance(0);
  ThresholdContext ctx =
      ThresholdContext::FromOriginal(x, StftConfig(), PsychoConfig());
  std::vector<double> wrong(100, 0.0);
  CHECK_THROWS_AS(ThresholdLossValue(ctx, wrong), std::invalid_argument);
}

TEST_CASE("stage 1 keeps the perturbation inside the shrinking budget") {
  Model model = TrainedToyModel();
  Waveform x = ToyUtterance(0, 1);
  const int predicted = Argmax(model.Forward(x.samples));
  const int other = 1 - predicted;

  Stage1Config cfg;
  cfg.steps = 25;
  cfg.lr = 60.0;
  cfg.eps0 = 800.0;

  StageResult res = RunStage1(model, x.samples, other, cfg);
  REQUIRE(static_cast<int>(res.trace.size()) == cfg.steps);
  CHECK(res.iterations == cfg.steps);

  double eps = cfg.eps0;
  int last_success = -1;
  for (int it = 0; it < cfg.steps; ++it) {
    const IterationRecord& rec = res.trace[it];
    CHECK(rec.iteration == it);
    CHECK(rec.bound == doctest::Approx(eps).epsilon(1e-12));
    CHECK(rec.max_abs_delta <= rec.bound + 1e-9);
    CHECK(rec.threshold_loss == 0.0);
    if (rec.success) {
      last_success = it;
      eps *= cfg.eps_decay;
    }
    if (it > 0) CHECK(res.trace[it].bound <= res.trace[it - 1].bound);
  }

  if (res.success) {
    REQUIRE(last_success >= 0);
    double max_abs = 0.0;
    for (double v : res.delta) max_abs = std::max(max_abs, std::abs(v));
    CHECK(max_abs ==
          doctest::Approx(res.trace[last_success].max_abs_delta).epsilon(1e-12));
  }

  // Attacking the model's own prediction succeeds immediately.
  StageResult easy = RunStage1(model, x.samples, predicted, cfg);
  CHECK(easy.success);
  CHECK(easy.trace[0].success);
}

TEST_CASE("stage 2 replays the alpha adaptation rule") {
  Model model = TrainedToyModel();
  Waveform x = ToyUtterance(1, 2);
  const int target = 0;

  ThresholdContext ctx =
      ThresholdContext::FromOriginal(x, StftConfig(), PsychoConfig());

  Stage1Config s1;
  s1.steps = 25;
  s1.lr = 60.0;
  s1.eps0 = 800.0;
  StageResult stage1 = RunStage1(model, x.samples, target, s1);

  Stage2Config s2;
  s2.steps = 30;
  s2.lr = 2.0;
  StageResult res = RunStage2(model, x.samples, stage1.delta, target, ctx, s2);
  REQUIRE(static_cast<int>(res.trace.size()) == s2.steps);

  double alpha = s2.alpha0;
  double best_loss = std::numeric_limits<double>::infinity();
  for (int it = 0; it < s2.steps; ++it) {
    const IterationRecord& rec = res.trace[it];
    CHECK(rec.bound == doctest::Approx(alpha).epsilon(1e-12));
    alpha *= rec.success ? s2.alpha_up : s2.alpha_down;
    if (rec.success) best_loss = std::min(best_loss, rec.threshold_loss);
  }

  if (res.success) {
    CHECK(ThresholdLossValue(ctx, res.delta) ==
          doctest::Approx(best_loss).epsilon(1e-9));
  }

  std::vector<double> wrong(10, 0.0);
  CHECK_THROWS_AS(RunStage2(model, x.samples, wrong, target, ctx, s2),
                  std::invalid_argument);
}

TEST_CASE("full attack populates metrics and the adversarial waveform") {
  Model model = TrainedToyModel();
  Waveform x = ToyUtterance(0, 3);

  AttackConfig cfg;
  cfg.stage1.steps = 20;
  cfg.stage1.lr = 60.0;
  cfg.stage1.eps0 = 800.0;
  cfg.stage2.steps = 20;

  AttackOutcome outcome = AttackUtterance(model, x, 1, cfg);
  CHECK(outcome.pre_attack_predicted >= 0);
  REQUIRE(outcome.adversarial.size() == x.samples.size());
  for (size_t i = 0; i < x.samples.size(); ++i) {
    CHECK(outcome.adversarial[i] ==
          doctest::Approx(x.samples[i] + outcome.stage2.delta[i]));
  }
  CHECK(outcome.stage1_metrics.iterations == 20);
  CHECK(outcome.stage2_metrics.iterations == 20);
  CHECK(outcome.stage1_metrics.success == outcome.stage1.success);
  CHECK(std::isfinite(outcome.stage2_metrics.exceedance_db));

  CHECK_THROWS_AS(AttackUtterance(model, x, 5, cfg), std::invalid_argument);
  CHECK_THROWS_AS(AttackUtterance(model, x, -1, cfg), std::invalid_argument);
}

}  // namespace
}  // namespace psyadv

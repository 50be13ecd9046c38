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

#ifndef PSYADV_TRAIN_H_
#define PSYADV_TRAIN_H_

#include <cstdint>
#include <vector>

#include "psyadv/model.h"

namespace psyadv {

struct TrainItem {
  std::vector<double> samples;
  int label = 0;
};

struct TrainConfig {
  int epochs = 8;
  int batch_size = 8;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  uint64_t seed = 1;
  bool log_progress = true;
};

struct EpochStats {
  int epoch = 0;
  double mean_ce = 0.0;
  // Argmax accuracy of the training-mode forward passes in this epoch.
  double batch_accuracy = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> epochs;
};

// Minibatch Adam training of the softmax cross entropy.  Utterances in a
// batch run as separate graph branches whose pooled embeddings are stacked
// before the FC stack, so the FC batch norms see batch_size rows.  Diverging
// to non-finite loss raises std::runtime_error naming the step.
TrainResult TrainModel(Model& model, const std::vector<TrainItem>& items,
                       const TrainConfig& config);

// Inference-mode argmax accuracy over a labeled set.
double EvaluateAccuracy(const Model& model, const std::vector<TrainItem>& items);

}  // namespace psyadv

#endif  // PSYADV_TRAIN_H_

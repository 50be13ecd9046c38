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

#include "psyadv/train.h"

#include <cmath>
#include <numeric>

#include "psyadv/kernels.h"
#include "psyadv/log.h"
#include "psyadv/rng.h"

namespace psyadv {

TrainResult TrainModel(Model& model, const std::vector<TrainItem>& items,
                       const TrainConfig& config) {
  if (items.empty()) throw std::invalid_argument("train: no training items");
  for (const TrainItem& item : items) {
    if (item.label < 0 || item.label >= model.config().num_speakers) {
      throw std::invalid_argument("train: item label out of range");
    }
  }
  if (config.batch_size < 2) {
    throw std::invalid_argument("train: batch size must be >= 2");
  }

  // Adam moments, parallel to the trainable blobs.
  std::vector<std::vector<double>> moment1(model.blobs().size());
  std::vector<std::vector<double>> moment2(model.blobs().size());
  for (size_t i = 0; i < model.blobs().size(); ++i) {
    if (!model.blobs()[i].trainable) continue;
    moment1[i].assign(model.blobs()[i].data.size(), 0.0);
    moment2[i].assign(model.blobs()[i].data.size(), 0.0);
  }

  Rng rng(config.seed);
  std::vector<int> order(items.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  int64_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.Shuffle(&order);
    double ce_sum = 0.0;
    int64_t ce_count = 0;
    int64_t correct = 0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(config.batch_size)) {
      size_t end = std::min(order.size(),
                            start + static_cast<size_t>(config.batch_size));
      // A training forward needs at least two pooled rows for the FC batch
      // norms; fold a short trailing batch into a full-size one by wrapping.
      std::vector<int> batch(order.begin() + start, order.begin() + end);
      for (size_t w = 0; batch.size() < 2; ++w) batch.push_back(order[w]);

      for (ParamBlob& b : model.blobs()) {
        if (b.trainable) std::fill(b.grad.begin(), b.grad.end(), 0.0);
      }

      Tape tape;
      std::vector<Tensor> mfccs;
      mfccs.reserve(batch.size());
      for (int idx : batch) {
        Tensor wave = tape.Leaf(
            items[idx].samples.data(),
            {static_cast<int>(items[idx].samples.size())});
        mfccs.push_back(model.BuildMfcc(tape, wave));
      }
      Tensor rows = model.BuildEmbeddings(tape, mfccs, true);
      Tensor logits = model.BuildLogits(tape, rows, true);
      std::vector<Tensor> losses;
      losses.reserve(batch.size());
      for (size_t r = 0; r < batch.size(); ++r) {
        Tensor row = tape.Row(logits, static_cast<int>(r));
        losses.push_back(tape.CrossEntropyLogits(row, items[batch[r]].label));
        if (Argmax(row.values()) == items[batch[r]].label) ++correct;
      }
      Tensor stacked = tape.ConcatRows(losses);
      Tensor loss = tape.Mean(stacked);

      double loss_value = loss.scalar();
      if (!std::isfinite(loss_value)) {
        throw std::runtime_error(
            StrCat("train: loss diverged to non-finite at step ", step));
      }
      ce_sum += loss_value * static_cast<double>(batch.size());
      ce_count += static_cast<int64_t>(batch.size());

      tape.Backward(loss);

      ++step;
      double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      for (size_t i = 0; i < model.blobs().size(); ++i) {
        ParamBlob& b = model.blobs()[i];
        if (!b.trainable) continue;
        kernels::AdamStep(b.data.data(), b.grad.data(), moment1[i].data(),
                          moment2[i].data(), b.size(), config.lr, config.beta1,
                          config.beta2, config.adam_eps, bc1, bc2);
      }
    }
    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.mean_ce = ce_sum / static_cast<double>(ce_count);
    stats.batch_accuracy =
        static_cast<double>(correct) / static_cast<double>(ce_count);
    result.epochs.push_back(stats);
    if (config.log_progress) {
      LogInfo("train: epoch ", stats.epoch, "/", config.epochs, " mean_ce=",
              stats.mean_ce, " batch_acc=", stats.batch_accuracy);
    }
  }
  return result;
}

double EvaluateAccuracy(const Model& model,
                        const std::vector<TrainItem>& items) {
  if (items.empty()) throw std::invalid_argument("evaluate: no items");
  int64_t correct = 0;
  for (const TrainItem& item : items) {
    std::vector<double> probs = model.Forward(item.samples);
    if (Argmax(probs) == item.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(items.size());
}

}  // namespace psyadv

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
// Differentiable speaker classifier: an MFCC frontend feeding a TDNN
// (x-vector style) with statistics pooling and a softmax head.  The whole
// forward pass is built on the tape so gradients reach the raw waveform.

#ifndef PSYADV_MODEL_H_
#define PSYADV_MODEL_H_

#include <span>
#include <string>
#include <vector>

#include "psyadv/fft.h"
#include "psyadv/tape.h"

namespace psyadv {

struct MfccConfig {
  int frame_length = 400;  // 25 ms at 16 kHz
  int hop_length = 160;    // 10 ms
  int fft_size = 512;
  int num_mel_bins = 30;
  int num_coefficients = 30;
  double low_freq_hz = 20.0;
  double high_freq_hz = 8000.0;
  double log_floor = 1e-10;
};

struct TdnnLayer {
  std::vector<int> context;  // temporal offsets spliced into the layer input
  int output_dim = 512;
};

struct ModelConfig {
  int sample_rate = 16000;
  MfccConfig mfcc;
  std::vector<TdnnLayer> tdnn;
  std::vector<int> fc_dims;
  int num_speakers = 0;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;
  double pool_eps = 1e-9;

  // Five TDNN layers with contexts {-2..2}, {-2,0,2}, {-3,0,3}, {0}, {0} and
  // output dims (hidden, hidden, hidden, hidden, pooling), followed by two
  // hidden-wide FC layers.  Defaults reproduce the full-size architecture
  // whose stacked contexts cover 15 frames.
  static ModelConfig Make(int num_speakers, int hidden = 512,
                          int pooling = 1500);

  // Total temporal receptive field of the TDNN stack, in frames.
  int ReceptiveField() const;
};

struct ParamBlob {
  std::string name;
  std::vector<int> shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool trainable = true;

  int64_t size() const { return static_cast<int64_t>(data.size()); }
};

class Model {
 public:
  Model() : mfcc_plan_(2) {}

  static Model Init(const ModelConfig& config, std::vector<std::string> labels,
                    uint64_t seed);

  void Save(const std::string& path) const;
  static Model Load(const std::string& path);

  const ModelConfig& config() const { return config_; }
  const std::vector<std::string>& labels() const { return labels_; }
  // Index of a label, or -1 when absent.
  int LabelIndex(const std::string& label) const;

  std::vector<ParamBlob>& blobs() { return blobs_; }
  const std::vector<ParamBlob>& blobs() const { return blobs_; }
  ParamBlob& Blob(const std::string& name);
  const ParamBlob& Blob(const std::string& name) const;

  // Count of trainable parameter values.
  int64_t NumParameters() const;

  // Graph builders.  `wave` is a 1-D tensor of raw PCM samples.
  Tensor BuildMfcc(Tape& tape, Tensor wave) const;
  // MFCC matrices (one per utterance) -> pooled statistics rows
  // [B, 2 * pooling_dim].  The TDNN batch norms see the concatenated frames
  // of the whole batch, so training statistics match inference semantics.
  Tensor BuildEmbeddings(Tape& tape, std::span<const Tensor> mfccs,
                         bool training);
  // Single-utterance convenience: pooled statistics vector [2 * pooling_dim].
  Tensor BuildEmbedding(Tape& tape, Tensor mfcc, bool training);
  // Pooled rows [B, 2 * pooling_dim] -> logits [B, num_speakers].
  Tensor BuildLogits(Tape& tape, Tensor pooled_rows, bool training);
  // Convenience: waveform to logit vector for one utterance.
  Tensor BuildWaveLogits(Tape& tape, Tensor wave, bool training);
  // Convenience: waveform to probability vector for one utterance.
  Tensor BuildProbs(Tape& tape, Tensor wave, bool training);

  // Inference-mode class probabilities.
  std::vector<double> Forward(std::span<const double> wave) const;

  struct InputGradient {
    std::vector<double> grad;    // d(cross entropy) / d(waveform)
    std::vector<double> probs;
    double cross_entropy = 0.0;
    int predicted = 0;
  };
  // Cross entropy against `target` and its gradient with respect to the
  // waveform, inference mode.
  InputGradient CeGradient(std::span<const double> wave, int target) const;

 private:
  void BuildDerived();
  // linear -> ReLU -> BatchNorm; the output head skips the last two.
  Tensor ApplyLayer(Tape& tape, Tensor rows, const std::string& prefix,
                    bool training, bool relu_bn);

  ModelConfig config_;
  std::vector<std::string> labels_;
  std::vector<ParamBlob> blobs_;

  // Derived MFCC tables.
  std::vector<double> window_;       // frame_length Hann taps
  std::vector<double> mel_weights_;  // [num_mel_bins, fft_size/2 + 1]
  std::vector<double> dct_;          // [num_coefficients, num_mel_bins]
  FftPlan mfcc_plan_;
};

int Argmax(std::span<const double> v);

}  // namespace psyadv

#endif  // PSYADV_MODEL_H_

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

#ifndef PSYADV_RESULTS_H_
#define PSYADV_RESULTS_H_

#include <optional>
#include <string>
#include <vector>

#include "psyadv/attack.h"

namespace psyadv {

// Everything recorded about one attacked utterance except the waveform
// itself (the adversarial audio goes to a .adv.wav next to the result).
struct UtteranceResult {
  std::string path;  // audio path as listed in the manifest
  std::string true_label;
  std::string target_label;
  std::string predicted_label;  // pre-attack prediction
  int sample_rate = 0;
  int64_t num_samples = 0;
  StageMetrics stage1;
  StageMetrics stage2;
  std::vector<IterationRecord> stage1_trace;
  std::vector<IterationRecord> stage2_trace;
  std::optional<double> pesq;  // reserved for an external scorer
  std::string status = "ok";   // "ok" or an error description
};

void WriteResultJson(const std::string& path, const UtteranceResult& result);
UtteranceResult ReadResultJson(const std::string& path);

// Two rows per utterance (stage 1 and stage 2), manifest order, fixed
// six-decimal float formatting:
//   path,target,stage,success,snr_db,exceedance,iterations,status
void WriteSummaryCsv(const std::string& path,
                     const std::vector<UtteranceResult>& results);

}  // namespace psyadv

#endif  // PSYADV_RESULTS_H_

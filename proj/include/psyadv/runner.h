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

#ifndef PSYADV_RUNNER_H_
#define PSYADV_RUNNER_H_

#include <string>
#include <vector>

#include "psyadv/config.h"
#include "psyadv/results.h"

namespace psyadv {

struct AttackRunOptions {
  std::string manifest_path;
  std::string checkpoint_path;
  std::string out_dir;
  // Skip utterances whose result file already parses; their stored results
  // still enter the summary.
  bool resume = true;
};

// Attacks every manifest entry with a small worker pool.  Per-utterance
// failures are recorded in the result's status instead of aborting the run.
// Outputs per utterance: <name>.result.json and <name>.adv.wav; plus
// summary.csv (manifest order) and config.json in out_dir.
std::vector<UtteranceResult> RunAttackBatch(const RunConfig& config,
                                            const AttackRunOptions& options);

}  // namespace psyadv

#endif  // PSYADV_RUNNER_H_

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

#ifndef PSYADV_METRICS_H_
#define PSYADV_METRICS_H_

#include <span>
#include <string>
#include <vector>

#include "psyadv/attack.h"
#include "psyadv/results.h"

namespace psyadv {

// 10*log10(P_x / P_delta).  +infinity for a zero perturbation; -infinity
// never occurs for a non-silent x.
double SnrDb(std::span<const double> x, std::span<const double> delta);

struct ExceedanceStats {
  double fraction = 0.0;  // share of (frame, bin) cells above threshold
  double mean_db = 0.0;   // mean hinge margin over all cells
};

// How much the perturbation's PSD pokes above the masking threshold.
// mean_db equals ThresholdLossValue for the same delta.
ExceedanceStats Exceedance(const ThresholdContext& ctx,
                           std::span<const double> delta);

// Attack mode id, e.g. true "m3" targeting "f1" -> "m2f'".  The group prefix
// is the label's leading non-digit run; "none" stays as is.
std::string AttackMode(const std::string& true_label,
                       const std::string& target_label);

struct ModeSummary {
  std::string mode;
  int stage = 0;
  int count = 0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_snr_db = 0.0;        // over successful entries, 0 if none
  double mean_exceedance_db = 0.0; // over all entries
};

std::vector<ModeSummary> SummarizeByMode(
    const std::vector<UtteranceResult>& results);

// Reads every *.result.json in a directory, sorted by filename.
std::vector<UtteranceResult> LoadResultsDir(const std::string& dir);

// Writes summary_by_mode.csv, run_summary.json and scatter.csv.
void WriteEvaluation(const std::string& out_dir,
                     const std::vector<UtteranceResult>& results);

}  // namespace psyadv

#endif  // PSYADV_METRICS_H_

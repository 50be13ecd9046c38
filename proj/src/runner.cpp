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

#include "psyadv/runner.h"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "psyadv/attack.h"
#include "psyadv/log.h"
#include "psyadv/model.h"

namespace psyadv {
namespace {

namespace fs = std::filesystem;

std::string ResultPath(const std::string& out_dir, const ManifestEntry& e) {
  return (fs::path(out_dir) /
          (fs::path(e.path).filename().string() + ".result.json"))
      .string();
}

std::string AdvPath(const std::string& out_dir, const ManifestEntry& e) {
  return (fs::path(out_dir) /
          (fs::path(e.path).filename().string() + ".adv.wav"))
      .string();
}

UtteranceResult ProcessEntry(const Model& model, const RunConfig& config,
                             const AttackRunOptions& options,
                             const ManifestEntry& entry) {
  UtteranceResult r;
  r.path = entry.path;
  r.true_label = entry.true_label;
  r.target_label = entry.target_label;
  try {
    Waveform wave = ReadWav(entry.path);
    AttackConfig acfg;
    acfg.stage1 = config.stage1;
    acfg.stage2 = config.stage2;
    acfg.stft = config.stft;
    acfg.psycho = config.psycho;
    int target = model.LabelIndex(entry.target_label);
    AttackOutcome outcome = AttackUtterance(model, wave, target, acfg);

    r.predicted_label = model.labels()[outcome.pre_attack_predicted];
    r.sample_rate = wave.sample_rate;
    r.num_samples = wave.num_samples();
    r.stage1 = outcome.stage1_metrics;
    r.stage2 = outcome.stage2_metrics;
    r.stage1_trace = std::move(outcome.stage1.trace);
    r.stage2_trace = std::move(outcome.stage2.trace);

    Waveform adv;
    adv.sample_rate = wave.sample_rate;
    adv.samples = std::move(outcome.adversarial);
    WriteWav(AdvPath(options.out_dir, entry), adv);
  } catch (const std::exception& e) {
    r.status = e.what();
  }
  WriteResultJson(ResultPath(options.out_dir, entry), r);
  return r;
}

}  // namespace

std::vector<UtteranceResult> RunAttackBatch(const RunConfig& config,
                                            const AttackRunOptions& options) {
  Model model = Model::Load(options.checkpoint_path);
  std::vector<ManifestEntry> entries = ReadManifest(options.manifest_path);

  std::set<std::string> names;
  for (const ManifestEntry& e : entries) {
    if (model.LabelIndex(e.target_label) < 0) {
      throw ValidationError(StrCat("attack: target label '", e.target_label,
                                   "' is not in the model's label set"));
    }
    if (e.true_label != kNoLabel && model.LabelIndex(e.true_label) < 0) {
      throw ValidationError(StrCat("attack: true label '", e.true_label,
                                   "' is not in the model's label set"));
    }
    std::string name = fs::path(e.path).filename().string();
    if (!names.insert(name).second) {
      throw ValidationError(StrCat(
          "attack: duplicate audio file name '", name,
          "' in manifest; result files would collide"));
    }
  }

  fs::create_directories(options.out_dir);
  {
    std::ofstream snap(fs::path(options.out_dir) / "config.json");
    snap << RunConfigToJson(config);
  }

  std::vector<UtteranceResult> results(entries.size());
  std::vector<char> done(entries.size(), 0);
  int resumed = 0;
  if (options.resume) {
    for (size_t i = 0; i < entries.size(); ++i) {
      std::string rp = ResultPath(options.out_dir, entries[i]);
      if (!fs::exists(rp)) continue;
      try {
        results[i] = ReadResultJson(rp);
        done[i] = 1;
        ++resumed;
      } catch (const std::exception&) {
        // Unreadable result files are recomputed.
      }
    }
  }
  if (resumed > 0) {
    LogInfo("attack: resuming, ", resumed, " of ", entries.size(),
            " utterances already done");
  }

  std::atomic<size_t> next{0};
  std::atomic<int> completed{resumed};
  auto worker = [&]() {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= entries.size()) break;
      if (done[i]) continue;
      results[i] = ProcessEntry(model, config, options, entries[i]);
      int c = completed.fetch_add(1) + 1;
      LogInfo("attack: [", c, "/", entries.size(), "] ",
              fs::path(entries[i].path).filename().string(), " s1=",
              results[i].stage1.success ? "ok" : "no", " s2=",
              results[i].stage2.success ? "ok" : "no",
              results[i].status == "ok" ? "" : StrCat(" (", results[i].status, ")"));
    }
  };
  int num_workers =
      std::max(1, std::min(config.workers, static_cast<int>(entries.size())));
  std::vector<std::thread> pool;
  pool.reserve(num_workers);
  for (int w = 0; w < num_workers; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  WriteSummaryCsv((fs::path(options.out_dir) / "summary.csv").string(),
                  results);
  return results;
}

}  // namespace psyadv

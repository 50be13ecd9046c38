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

#include "psyadv/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>

#include "json.hpp"
#include "psyadv/log.h"

namespace psyadv {
namespace {

std::string LabelPrefix(const std::string& label) {
  if (label == kNoLabel) return label;
  size_t n = 0;
  while (n < label.size() && !std::isdigit(static_cast<unsigned char>(label[n])))
    ++n;
  return n == 0 ? label : label.substr(0, n);
}

std::string FormatFixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

double SnrDb(std::span<const double> x, std::span<const double> delta) {
  if (x.size() != delta.size()) {
    throw std::invalid_argument("snr: length mismatch");
  }
  double px = 0.0, pd = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    px += x[i] * x[i];
    pd += delta[i] * delta[i];
  }
  if (pd == 0.0) return std::numeric_limits<double>::infinity();
  if (px == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(px / pd);
}

ExceedanceStats Exceedance(const ThresholdContext& ctx,
                           std::span<const double> delta) {
  ExceedanceStats stats;
  double loss = 0.0;
  int64_t over = 0;

  Waveform d;
  d.sample_rate = ctx.sample_rate;
  d.samples.assign(delta.begin(), delta.end());
  Spectrogram spec = Stft(d, ctx.stft);
  PsdMatrix psd = Psd(spec, ctx.stft);
  int64_t cells = static_cast<int64_t>(psd.db.size());
  for (int t = 0; t < psd.frames; ++t) {
    for (int k = 0; k < psd.bins; ++k) {
      double v = psd.At(t, k);
      if (v == kSilenceDb) continue;  // zero power cannot exceed
      double margin = v + ctx.offset_db - ctx.threshold.At(t, k);
      if (margin > 0.0) {
        ++over;
        loss += margin;
      }
    }
  }
  stats.fraction = cells > 0 ? static_cast<double>(over) / cells : 0.0;
  stats.mean_db = cells > 0 ? loss / static_cast<double>(cells) : 0.0;
  return stats;
}

std::string AttackMode(const std::string& true_label,
                       const std::string& target_label) {
  return StrCat(LabelPrefix(true_label), "2", LabelPrefix(target_label), "'");
}

std::vector<ModeSummary> SummarizeByMode(
    const std::vector<UtteranceResult>& results) {
  std::map<std::pair<std::string, int>, ModeSummary> groups;
  for (const UtteranceResult& r : results) {
    if (r.status != "ok") continue;
    std::string mode = AttackMode(r.true_label, r.target_label);
    for (int stage = 1; stage <= 2; ++stage) {
      const StageMetrics& m = stage == 1 ? r.stage1 : r.stage2;
      ModeSummary& g = groups[{mode, stage}];
      g.mode = mode;
      g.stage = stage;
      ++g.count;
      if (m.success) {
        ++g.successes;
        if (std::isfinite(m.snr_db)) g.mean_snr_db += m.snr_db;
      }
      g.mean_exceedance_db += m.exceedance_db;
    }
  }
  std::vector<ModeSummary> out;
  for (auto& [key, g] : groups) {
    g.success_rate = g.count > 0
                         ? static_cast<double>(g.successes) / g.count
                         : 0.0;
    g.mean_snr_db = g.successes > 0 ? g.mean_snr_db / g.successes : 0.0;
    g.mean_exceedance_db = g.count > 0 ? g.mean_exceedance_db / g.count : 0.0;
    out.push_back(g);
  }
  return out;
}

std::vector<UtteranceResult> LoadResultsDir(const std::string& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ValidationError(StrCat("evaluate: '", dir, "' is not a directory"));
  }
  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::string name = entry.path().filename().string();
    if (name.size() > 12 &&
        name.substr(name.size() - 12) == ".result.json") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw ValidationError(
        StrCat("evaluate: no *.result.json files in '", dir, "'"));
  }
  std::vector<UtteranceResult> results;
  results.reserve(files.size());
  for (const std::string& f : files) results.push_back(ReadResultJson(f));
  return results;
}

void WriteEvaluation(const std::string& out_dir,
                     const std::vector<UtteranceResult>& results) {
  std::filesystem::create_directories(out_dir);
  std::vector<ModeSummary> modes = SummarizeByMode(results);

  {
    std::ofstream csv(std::filesystem::path(out_dir) / "summary_by_mode.csv");
    csv << "stage,mode,count,successes,success_rate,mean_snr_db,"
           "mean_exceedance_db\n";
    for (const ModeSummary& g : modes) {
      csv << g.stage << "," << g.mode << "," << g.count << "," << g.successes
          << "," << FormatFixed(g.success_rate) << ","
          << FormatFixed(g.mean_snr_db) << ","
          << FormatFixed(g.mean_exceedance_db) << "\n";
    }
  }
  {
    nlohmann::json j;
    j["num_results"] = results.size();
    int ok = 0;
    for (const auto& r : results) {
      if (r.status == "ok") ++ok;
    }
    j["num_ok"] = ok;
    for (int stage = 1; stage <= 2; ++stage) {
      int count = 0, successes = 0;
      double exceed = 0.0, snr = 0.0;
      for (const UtteranceResult& r : results) {
        if (r.status != "ok") continue;
        const StageMetrics& m = stage == 1 ? r.stage1 : r.stage2;
        ++count;
        if (m.success) {
          ++successes;
          if (std::isfinite(m.snr_db)) snr += m.snr_db;
        }
        exceed += m.exceedance_db;
      }
      nlohmann::json s;
      s["count"] = count;
      s["successes"] = successes;
      s["success_rate"] = count > 0 ? static_cast<double>(successes) / count : 0.0;
      s["mean_snr_db"] = successes > 0 ? snr / successes : 0.0;
      s["mean_exceedance_db"] = count > 0 ? exceed / count : 0.0;
      j[StrCat("stage", stage)] = s;
    }
    nlohmann::json jm = nlohmann::json::array();
    for (const ModeSummary& g : modes) {
      nlohmann::json e;
      e["mode"] = g.mode;
      e["stage"] = g.stage;
      e["count"] = g.count;
      e["successes"] = g.successes;
      e["success_rate"] = g.success_rate;
      e["mean_snr_db"] = g.mean_snr_db;
      e["mean_exceedance_db"] = g.mean_exceedance_db;
      jm.push_back(e);
    }
    j["modes"] = jm;
    std::ofstream out(std::filesystem::path(out_dir) / "run_summary.json");
    out << j.dump(2) << "\n";
  }
  {
    std::ofstream csv(std::filesystem::path(out_dir) / "scatter.csv");
    csv << "path,stage,success,snr_db,exceedance_db\n";
    for (const UtteranceResult& r : results) {
      if (r.status != "ok") continue;
      for (int stage = 1; stage <= 2; ++stage) {
        const StageMetrics& m = stage == 1 ? r.stage1 : r.stage2;
        csv << r.path << "," << stage << "," << (m.success ? 1 : 0) << ","
            << FormatFixed(m.snr_db) << "," << FormatFixed(m.exceedance_db)
            << "\n";
      }
    }
  }
}

}  // namespace psyadv

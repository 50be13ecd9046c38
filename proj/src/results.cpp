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

#include "psyadv/results.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "psyadv/log.h"

namespace psyadv {
namespace {

using nlohmann::json;

json StageToJson(const StageMetrics& m, const std::vector<IterationRecord>& trace) {
  json j;
  j["success"] = m.success;
  j["iterations"] = m.iterations;
  j["snr_db"] = std::isfinite(m.snr_db) ? json(m.snr_db) : json(nullptr);
  j["exceed_fraction"] = m.exceed_fraction;
  j["exceedance_db"] = m.exceedance_db;
  json t = json::array();
  for (const IterationRecord& r : trace) {
    t.push_back({{"iteration", r.iteration},
                 {"cross_entropy", r.cross_entropy},
                 {"threshold_loss", r.threshold_loss},
                 {"bound", r.bound},
                 {"max_abs_delta", r.max_abs_delta},
                 {"success", r.success}});
  }
  j["trace"] = std::move(t);
  return j;
}

void StageFromJson(const json& j, StageMetrics* m,
                   std::vector<IterationRecord>* trace) {
  m->success = j.at("success").get<bool>();
  m->iterations = j.at("iterations").get<int>();
  m->snr_db = j.at("snr_db").is_null()
                  ? std::numeric_limits<double>::infinity()
                  : j.at("snr_db").get<double>();
  m->exceed_fraction = j.at("exceed_fraction").get<double>();
  m->exceedance_db = j.at("exceedance_db").get<double>();
  trace->clear();
  for (const json& e : j.at("trace")) {
    IterationRecord r;
    r.iteration = e.at("iteration").get<int>();
    r.cross_entropy = e.at("cross_entropy").get<double>();
    r.threshold_loss = e.at("threshold_loss").get<double>();
    r.bound = e.at("bound").get<double>();
    r.max_abs_delta = e.at("max_abs_delta").get<double>();
    r.success = e.at("success").get<bool>();
    trace->push_back(r);
  }
}

std::string FormatFixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void WriteResultJson(const std::string& path, const UtteranceResult& result) {
  json j;
  j["path"] = result.path;
  j["true_label"] = result.true_label;
  j["target_label"] = result.target_label;
  j["predicted_label"] = result.predicted_label;
  j["sample_rate"] = result.sample_rate;
  j["num_samples"] = result.num_samples;
  j["status"] = result.status;
  j["pesq"] = result.pesq.has_value() ? json(*result.pesq) : json(nullptr);
  j["stage1"] = StageToJson(result.stage1, result.stage1_trace);
  j["stage2"] = StageToJson(result.stage2, result.stage2_trace);
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error(StrCat("results: cannot open '", path, "' for write"));
  }
  out << j.dump(2) << "\n";
  if (!out) {
    throw std::runtime_error(StrCat("results: write failed for '", path, "'"));
  }
}

UtteranceResult ReadResultJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(StrCat("results: cannot open '", path, "'"));
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError(StrCat("results: '", path, "' is not valid JSON: ",
                                 e.what()));
  }
  UtteranceResult r;
  try {
    r.path = j.at("path").get<std::string>();
    r.true_label = j.at("true_label").get<std::string>();
    r.target_label = j.at("target_label").get<std::string>();
    r.predicted_label = j.at("predicted_label").get<std::string>();
    r.sample_rate = j.at("sample_rate").get<int>();
    r.num_samples = j.at("num_samples").get<int64_t>();
    r.status = j.at("status").get<std::string>();
    if (!j.at("pesq").is_null()) r.pesq = j.at("pesq").get<double>();
    StageFromJson(j.at("stage1"), &r.stage1, &r.stage1_trace);
    StageFromJson(j.at("stage2"), &r.stage2, &r.stage2_trace);
  } catch (const json::exception& e) {
    throw ValidationError(StrCat("results: '", path, "' has missing or bad fields: ",
                                 e.what()));
  }
  return r;
}

void WriteSummaryCsv(const std::string& path,
                     const std::vector<UtteranceResult>& results) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error(StrCat("results: cannot open '", path, "' for write"));
  }
  out << "path,target,stage,success,snr_db,exceedance,iterations,status\n";
  for (const UtteranceResult& r : results) {
    for (int stage = 1; stage <= 2; ++stage) {
      const StageMetrics& m = stage == 1 ? r.stage1 : r.stage2;
      out << r.path << "," << r.target_label << "," << stage << ","
          << (m.success ? 1 : 0) << "," << FormatFixed(m.snr_db) << ","
          << FormatFixed(m.exceedance_db) << "," << m.iterations << ","
          << r.status << "\n";
    }
  }
  if (!out) {
    throw std::runtime_error(StrCat("results: write failed for '", path, "'"));
  }
}

}  // namespace psyadv

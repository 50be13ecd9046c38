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

#include <cmath>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "psyadv/log.h"
#include "test_util.h"

namespace psyadv {
namespace {

namespace fs = std::filesystem;

TEST_CASE("snr follows the power ratio in decibels") {
  std::vector<double> x(128, 4.0);
  std::vector<double> tenth(128, 0.4);
  CHECK(SnrDb(x, tenth) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(SnrDb(x, x) == doctest::Approx(0.0));

  std::vector<double> twice(128, 8.0);
  CHECK(SnrDb(x, twice) == doctest::Approx(-6.020599913279624).epsilon(1e-12));

  std::vector<double> zero(128, 0.0);
  CHECK(SnrDb(x, zero) == std::numeric_limits<double>::infinity());
  CHECK(SnrDb(zero, x) == -std::numeric_limits<double>::infinity());

  std::vector<double> shorter(64, 1.0);
  CHECK_THROWS_AS(SnrDb(x, shorter), std::invalid_argument);
}

TEST_CASE("attack mode ids strip trailing digits and keep none") {
  CHECK(AttackMode("m3", "f1") == "m2f'");
  CHECK(AttackMode("f0", "m4") == "f2m'");
  CHECK(AttackMode("none", "m0") == "none2m'");
  CHECK(AttackMode("spk7", "spk9") == "spk2spk'");
}

UtteranceResult MakeResult(const std::string& path, const std::string& truth,
                           const std::string& target, bool s1_ok, double s1_snr,
                           double s1_exc, bool s2_ok, double s2_snr,
                           double s2_exc) {
  UtteranceResult r;
  r.path = path;
  r.true_label = truth;
  r.target_label = target;
  r.predicted_label = truth;
  r.sample_rate = 16000;
  r.num_samples = 16000;
  r.stage1.success = s1_ok;
  r.stage1.snr_db = s1_snr;
  r.stage1.exceedance_db = s1_exc;
  r.stage1.iterations = 7;
  r.stage2.success = s2_ok;
  r.stage2.snr_db = s2_snr;
  r.stage2.exceedance_db = s2_exc;
  r.stage2.iterations = 9;
  return r;
}

TEST_CASE("mode summaries aggregate per mode and stage") {
  std::vector<UtteranceResult> results;
  results.push_back(MakeResult("a.wav", "m0", "f1", true, 10.0, 5.0,
                               true, 20.0, 1.0));
  results.push_back(MakeResult("b.wav", "m1", "f0", false, 3.0, 7.0,
                               true, 30.0, 2.0));
  results.push_back(MakeResult("c.wav", "m2", "f2", true, 99.0, 9.0,
                               true, 99.0, 9.0));
  results.back().status = "error: unreadable";
  results.push_back(MakeResult("d.wav", "f0", "m1", true, 8.0, 4.0,
                               false, 1.0, 6.0));

  std::vector<ModeSummary> modes = SummarizeByMode(results);
  REQUIRE(modes.size() == 4);

  CHECK(modes[0].mode == "f2m'");
  CHECK(modes[0].stage == 1);
  CHECK(modes[0].count == 1);
  CHECK(modes[0].successes == 1);
  CHECK(modes[0].success_rate == 1.0);
  CHECK(modes[0].mean_snr_db == doctest::Approx(8.0));
  CHECK(modes[0].mean_exceedance_db == doctest::Approx(4.0));

  CHECK(modes[1].mode == "f2m'");
  CHECK(modes[1].stage == 2);
  CHECK(modes[1].successes == 0);
  CHECK(modes[1].success_rate == 0.0);
  CHECK(modes[1].mean_snr_db == 0.0);
  CHECK(modes[1].mean_exceedance_db == doctest::Approx(6.0));

  CHECK(modes[2].mode == "m2f'");
  CHECK(modes[2].stage == 1);
  CHECK(modes[2].count == 2);
  CHECK(modes[2].successes == 1);
  CHECK(modes[2].success_rate == doctest::Approx(0.5));
  CHECK(modes[2].mean_snr_db == doctest::Approx(10.0));
  CHECK(modes[2].mean_exceedance_db == doctest::Approx(6.0));

  CHECK(modes[3].mode == "m2f'");
  CHECK(modes[3].stage == 2);
  CHECK(modes[3].count == 2);
  CHECK(modes[3].successes == 2);
  CHECK(modes[3].success_rate == doctest::Approx(1.0));
  CHECK(modes[3].mean_snr_db == doctest::Approx(25.0));
  CHECK(modes[3].mean_exceedance_db == doctest::Approx(1.5));
}

TEST_CASE("result json round trips including null snr and pesq") {
  std::string dir = psyadv_test::MakeTempDir("metrics_json");
  UtteranceResult r = MakeResult("u.wav", "m0", "f1", true, 12.5, 0.25,
                                 false, 3.0, -1.5);
  r.predicted_label = "m1";
  r.stage1.snr_db = std::numeric_limits<double>::infinity();
  r.stage1.exceed_fraction = 0.125;
  r.pesq.reset();
  IterationRecord rec;
  rec.iteration = 3;
  rec.cross_entropy = 0.5;
  rec.threshold_loss = 2.5;
  rec.bound = 0.05;
  rec.max_abs_delta = 17.0;
  rec.success = true;
  r.stage2_trace.push_back(rec);

  std::string path = dir + "/u.result.json";
  WriteResultJson(path, r);
  UtteranceResult back = ReadResultJson(path);

  CHECK(back.path == "u.wav");
  CHECK(back.true_label == "m0");
  CHECK(back.target_label == "f1");
  CHECK(back.predicted_label == "m1");
  CHECK(back.sample_rate == 16000);
  CHECK(back.num_samples == 16000);
  CHECK(back.status == "ok");
  CHECK(!back.pesq.has_value());
  CHECK(back.stage1.success);
  CHECK(back.stage1.snr_db == std::numeric_limits<double>::infinity());
  CHECK(back.stage1.exceed_fraction == 0.125);
  CHECK(back.stage2.snr_db == 3.0);
  CHECK(back.stage2.exceedance_db == -1.5);
  REQUIRE(back.stage2_trace.size() == 1);
  CHECK(back.stage2_trace[0].iteration == 3);
  CHECK(back.stage2_trace[0].cross_entropy == 0.5);
  CHECK(back.stage2_trace[0].threshold_loss == 2.5);
  CHECK(back.stage2_trace[0].bound == 0.05);
  CHECK(back.stage2_trace[0].max_abs_delta == 17.0);
  CHECK(back.stage2_trace[0].success);

  r.pesq = 3.75;
  WriteResultJson(path, r);
  CHECK(ReadResultJson(path).pesq == 3.75);

  psyadv_test::WriteFileBytes(path, "{not json");
  CHECK_THROWS_AS(ReadResultJson(path), ValidationError);
  CHECK_THROWS_AS(ReadResultJson(dir + "/missing.result.json"),
                  ValidationError);
}

TEST_CASE("results directory loads sorted and validates its input") {
  std::string dir = psyadv_test::MakeTempDir("metrics_dir");
  CHECK_THROWS_AS(LoadResultsDir(dir + "/nope"), ValidationError);
  CHECK_THROWS_AS(LoadResultsDir(dir), ValidationError);

  psyadv_test::WriteFileBytes(dir + "/decoy.json", "not even json");
  CHECK_THROWS_AS(LoadResultsDir(dir), ValidationError);

  WriteResultJson(dir + "/b.result.json",
                  MakeResult("b.wav", "m1", "f0", true, 1, 1, true, 1, 1));
  WriteResultJson(dir + "/a.result.json",
                  MakeResult("a.wav", "m0", "f1", true, 1, 1, true, 1, 1));

  std::vector<UtteranceResult> results = LoadResultsDir(dir);
  REQUIRE(results.size() == 2);
  CHECK(results[0].path == "a.wav");
  CHECK(results[1].path == "b.wav");
}

TEST_CASE("summary csv uses fixed formatting and two rows per utterance") {
  std::string dir = psyadv_test::MakeTempDir("metrics_csv");
  std::vector<UtteranceResult> results;
  results.push_back(MakeResult("u.wav", "m0", "f1", true, 12.5, 0.25,
                               false, 3.0, -1.5));
  std::string path = dir + "/summary.csv";
  WriteSummaryCsv(path, results);

  std::string expected =
      "path,target,stage,success,snr_db,exceedance,iterations,status\n"
      "u.wav,f1,1,1,12.500000,0.250000,7,ok\n"
      "u.wav,f1,2,0,3.000000,-1.500000,9,ok\n";
  CHECK(psyadv_test::ReadFileBytes(path) == expected);
}

TEST_CASE("evaluation writes the three report files") {
  std::string dir = psyadv_test::MakeTempDir("metrics_eval");
  std::vector<UtteranceResult> results;
  results.push_back(MakeResult("a.wav", "m0", "f1", true, 10.0, 5.0,
                               true, 20.0, 1.0));
  WriteEvaluation(dir, results);
  CHECK(fs::exists(fs::path(dir) / "summary_by_mode.csv"));
  CHECK(fs::exists(fs::path(dir) / "run_summary.json"));
  CHECK(fs::exists(fs::path(dir) / "scatter.csv"));

  std::string csv =
      psyadv_test::ReadFileBytes((fs::path(dir) / "summary_by_mode.csv").string());
  CHECK(csv.rfind("stage,mode,count,successes,success_rate,mean_snr_db,"
                  "mean_exceedance_db\n", 0) == 0);
}

}  // namespace
}  // namespace psyadv

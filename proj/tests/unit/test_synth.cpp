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

#include "psyadv/synth.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "psyadv/log.h"
#include "test_util.h"

namespace psyadv {
namespace {

namespace fs = std::filesystem;

double PeakAbs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

TEST_CASE("speaker labels split into the two pitch families") {
  CHECK(SpeakerLabel(0, 10) == "m0");
  CHECK(SpeakerLabel(4, 10) == "m4");
  CHECK(SpeakerLabel(5, 10) == "f0");
  CHECK(SpeakerLabel(9, 10) == "f4");
  CHECK(SpeakerLabel(0, 2) == "m0");
  CHECK(SpeakerLabel(1, 2) == "f0");
  CHECK(SpeakerLabel(1, 3) == "m1");
  CHECK(SpeakerLabel(2, 3) == "f0");
}

TEST_CASE("synth output is deterministic and bounded") {
  SynthConfig cfg;
  cfg.num_speakers = 2;
  cfg.duration_seconds = 0.25;
  cfg.seed = 11;

  Waveform a = SynthSpeech(cfg, 0, 3);
  Waveform b = SynthSpeech(cfg, 0, 3);
  CHECK(a.samples == b.samples);
  CHECK(a.sample_rate == cfg.sample_rate);
  CHECK(a.num_samples() ==
        static_cast<int64_t>(cfg.duration_seconds * cfg.sample_rate));

  Waveform other = SynthSpeech(cfg, 0, 4);
  CHECK(a.samples != other.samples);
  Waveform voice = SynthSpeech(cfg, 1, 3);
  CHECK(a.samples != voice.samples);

  CHECK(PeakAbs(a.samples) > 0.0);
  CHECK(PeakAbs(a.samples) <= 32767.0);

  Waveform m1 = SynthMusic(cfg, 0);
  Waveform m2 = SynthMusic(cfg, 0);
  CHECK(m1.samples == m2.samples);
  CHECK(m1.samples != SynthMusic(cfg, 1).samples);
  CHECK(PeakAbs(m1.samples) > 0.0);
  CHECK(PeakAbs(m1.samples) <= 32767.0);

  SynthConfig reseeded = cfg;
  reseeded.seed = 12;
  CHECK(SynthSpeech(reseeded, 0, 3).samples != a.samples);
}

TEST_CASE("corpus generation lays out wavs and the training list") {
  std::string dir = psyadv_test::MakeTempDir("synth_corpus");
  SynthConfig cfg;
  cfg.num_speakers = 2;
  cfg.utterances_per_speaker = 3;
  cfg.num_music_clips = 2;
  cfg.duration_seconds = 0.25;
  cfg.seed = 9;

  CorpusPaths paths = GenerateCorpus(dir, cfg);
  REQUIRE(paths.speech_paths.size() == 6);
  REQUIRE(paths.speech_labels.size() == 6);
  REQUIRE(paths.music_paths.size() == 2);
  CHECK(paths.train_manifest == (fs::path(dir) / "train.csv").string());

  int m_count = 0, f_count = 0;
  for (size_t i = 0; i < paths.speech_paths.size(); ++i) {
    CHECK(fs::exists(paths.speech_paths[i]));
    Waveform w = ReadWav(paths.speech_paths[i]);
    CHECK(w.num_samples() == 4000);
    if (paths.speech_labels[i] == "m0") ++m_count;
    if (paths.speech_labels[i] == "f0") ++f_count;
  }
  CHECK(m_count == 3);
  CHECK(f_count == 3);
  for (const std::string& p : paths.music_paths) CHECK(fs::exists(p));

  std::vector<std::pair<std::string, std::string>> items =
      ReadTrainList(paths.train_manifest);
  REQUIRE(items.size() == 6);
  for (const auto& [path, label] : items) {
    CHECK(fs::exists(path));
    CHECK((label == "m0" || label == "f0"));
  }

  std::ifstream raw(paths.train_manifest);
  std::string header, first_entry;
  std::getline(raw, header);
  std::getline(raw, first_entry);
  CHECK(first_entry.substr(0, 7) == "speech/");

  std::string copy = dir + "/copy.csv";
  WriteTrainList(copy, items);
  CHECK(ReadTrainList(copy) == items);

  CHECK_THROWS_AS(ReadTrainList(dir + "/absent.csv"), ValidationError);
}

}  // namespace
}  // namespace psyadv

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
// Deterministic synthetic corpus: harmonic "voices" with per-speaker pitch
// and formant envelopes for training/attack material, plus plucked-note
// music clips as non-speech input.

#ifndef PSYADV_SYNTH_H_
#define PSYADV_SYNTH_H_

#include <cstdint>
#include <string>
#include <vector>

#include "psyadv/audio_io.h"

namespace psyadv {

struct SynthConfig {
  int num_speakers = 10;
  int utterances_per_speaker = 50;
  int num_music_clips = 20;
  double duration_seconds = 1.0;
  int sample_rate = kSampleRate;
  uint64_t seed = 1;
};

// Speaker labels are "m0".."m4" (low-pitch family) then "f0".."f4"
// (high-pitch family), extended with the same pattern for larger counts.
std::string SpeakerLabel(int speaker, int num_speakers);

Waveform SynthSpeech(const SynthConfig& config, int speaker, int utterance);
Waveform SynthMusic(const SynthConfig& config, int clip);

struct CorpusPaths {
  std::string train_manifest;  // CSV with path,label rows (training layout)
  std::vector<std::string> speech_paths;
  std::vector<std::string> speech_labels;
  std::vector<std::string> music_paths;
};

// Writes WAVs under out_dir/speech and out_dir/music plus a training list
// out_dir/train.csv with lines "path,label".
CorpusPaths GenerateCorpus(const std::string& out_dir,
                           const SynthConfig& config);

// Reads a training list written by GenerateCorpus.  Relative audio paths
// resolve against the list's directory.
std::vector<std::pair<std::string, std::string>> ReadTrainList(
    const std::string& path);
void WriteTrainList(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& items);

}  // namespace psyadv

#endif  // PSYADV_SYNTH_H_

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

#ifndef PSYADV_AUDIO_IO_H_
#define PSYADV_AUDIO_IO_H_

#include <string>
#include <vector>

namespace psyadv {

inline constexpr int kSampleRate = 16000;

// Samples keep the raw 16-bit PCM scale ([-32768, 32767]) as doubles, so
// perturbation budgets are expressed in integer PCM units.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  int64_t num_samples() const { return static_cast<int64_t>(samples.size()); }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Reads a RIFF/WAVE file.  Only mono 16-bit PCM at 16 kHz is accepted;
// anything else raises ValidationError naming the offending property.
Waveform ReadWav(const std::string& path);

// Writes mono 16-bit PCM.  Samples are rounded half away from zero and
// saturated to the int16 range.
void WriteWav(const std::string& path, const Waveform& wave);

inline constexpr char kNoLabel[] = "none";

struct ManifestEntry {
  std::string path;         // resolved against the manifest directory
  std::string true_label;   // kNoLabel for unlabeled (non-speech) entries
  std::string target_label;
};

// Parses an attack manifest: a CSV with header "path,true_label,target_label".
// Relative audio paths resolve against the manifest's directory.  Validation
// failures (missing header, wrong column count, target equal to true label,
// empty manifest) raise ValidationError.
std::vector<ManifestEntry> ReadManifest(const std::string& path);

void WriteManifest(const std::string& path,
                   const std::vector<ManifestEntry>& entries);

}  // namespace psyadv

#endif  // PSYADV_AUDIO_IO_H_

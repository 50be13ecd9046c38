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

#include <cmath>
#include <filesystem>
#include <fstream>

#include "psyadv/log.h"
#include "psyadv/rng.h"

namespace psyadv {
namespace {

struct Voice {
  double f0;
  double formants[3];
  double bandwidths[3];
  double noise_level;
};

// Fixed, well-separated per-speaker parameters; utterances jitter around
// them.  Index < half: low-pitch family, else high-pitch.
Voice MakeVoice(int speaker, int num_speakers) {
  int half = (num_speakers + 1) / 2;
  bool low = speaker < half;
  int k = low ? speaker : speaker - half;
  Voice v;
  v.f0 = (low ? 90.0 : 170.0) * std::pow(1.10, k);
  v.formants[0] = 330.0 + 52.0 * speaker;
  v.formants[1] = 1000.0 + 140.0 * ((3 * speaker) % 10);
  v.formants[2] = 2300.0 + 110.0 * ((7 * speaker) % 10);
  v.bandwidths[0] = 90.0;
  v.bandwidths[1] = 130.0;
  v.bandwidths[2] = 170.0;
  v.noise_level = 0.015 + 0.003 * (speaker % 5);
  return v;
}

double FormantGain(const Voice& v, double freq) {
  double gain = 0.08;  // floor so high harmonics are not fully absent
  for (int i = 0; i < 3; ++i) {
    double d = (freq - v.formants[i]) / v.bandwidths[i];
    gain += std::exp(-d * d) * (1.0 - 0.22 * i);
  }
  // Gentle spectral tilt above 500 Hz.
  if (freq > 500.0) gain *= std::pow(500.0 / freq, 0.4);
  return gain;
}

void ApplyFades(std::vector<double>* x, int sample_rate) {
  int fade = sample_rate * 3 / 100;  // 30 ms
  int n = static_cast<int>(x->size());
  fade = std::min(fade, n / 2);
  for (int i = 0; i < fade; ++i) {
    double g = 0.5 - 0.5 * std::cos(M_PI * i / fade);
    (*x)[i] *= g;
    (*x)[n - 1 - i] *= g;
  }
}

void NormalizePeak(std::vector<double>* x, double peak) {
  double maxabs = 0.0;
  for (double v : *x) maxabs = std::max(maxabs, std::abs(v));
  if (maxabs == 0.0) return;
  double g = peak / maxabs;
  for (double& v : *x) v *= g;
}

}  // namespace

std::string SpeakerLabel(int speaker, int num_speakers) {
  int half = (num_speakers + 1) / 2;
  return speaker < half ? StrCat("m", speaker) : StrCat("f", speaker - half);
}

Waveform SynthSpeech(const SynthConfig& config, int speaker, int utterance) {
  Voice voice = MakeVoice(speaker, config.num_speakers);
  Rng rng(Rng::Mix(config.seed, 1000003ULL * speaker + utterance));

  double f0 = voice.f0 * (1.0 + rng.Uniform(-0.04, 0.04));
  Voice v = voice;
  for (double& f : v.formants) f *= 1.0 + rng.Uniform(-0.05, 0.05);

  int n = static_cast<int>(config.duration_seconds * config.sample_rate);
  int sr = config.sample_rate;
  std::vector<double> x(n, 0.0);

  double vibrato_phase = rng.Uniform(0.0, 2.0 * M_PI);
  double am_phase = rng.Uniform(0.0, 2.0 * M_PI);
  double am_rate = rng.Uniform(2.0, 3.5);

  int num_harmonics = static_cast<int>(7200.0 / f0);
  std::vector<double> amp(num_harmonics + 1, 0.0);
  std::vector<double> phase(num_harmonics + 1, 0.0);
  for (int h = 1; h <= num_harmonics; ++h) {
    amp[h] = FormantGain(v, h * f0) / std::sqrt(static_cast<double>(h));
    phase[h] = rng.Uniform(0.0, 2.0 * M_PI);
  }

  for (int i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / sr;
    double vib = 1.0 + 0.02 * std::sin(2.0 * M_PI * 5.0 * t + vibrato_phase);
    double base = f0 * vib;
    double inc = 2.0 * M_PI * base / sr;
    double s = 0.0;
    for (int h = 1; h <= num_harmonics; ++h) {
      phase[h] += h * inc;
      s += amp[h] * std::sin(phase[h]);
    }
    double am = 0.85 + 0.15 * std::sin(2.0 * M_PI * am_rate * t + am_phase);
    x[i] = s * am;
  }

  // Band-limited noise floor (one-pole lowpass on white noise).
  double lp = 0.0;
  double a = std::exp(-2.0 * M_PI * 3000.0 / sr);
  double peak = 0.0;
  for (double vxx : x) peak = std::max(peak, std::abs(vxx));
  for (int i = 0; i < n; ++i) {
    lp = a * lp + (1.0 - a) * rng.Normal();
    x[i] += voice.noise_level * peak * lp;
  }

  ApplyFades(&x, sr);
  NormalizePeak(&x, 32767.0 * rng.Uniform(0.38, 0.55));

  Waveform w;
  w.sample_rate = sr;
  w.samples = std::move(x);
  return w;
}

Waveform SynthMusic(const SynthConfig& config, int clip) {
  Rng rng(Rng::Mix(config.seed ^ 0x6d757369ULL, clip));
  int n = static_cast<int>(config.duration_seconds * config.sample_rate);
  int sr = config.sample_rate;
  std::vector<double> x(n, 0.0);

  // Pentatonic steps over a random root, played as equal-length notes with
  // plucked (exponentially decaying) harmonics.
  static const int kScale[5] = {0, 2, 4, 7, 9};
  double root = 220.0 * std::pow(2.0, rng.UniformInt(0, 12) / 12.0);
  int num_notes = 4 + rng.UniformInt(0, 4);
  int note_len = n / num_notes;
  for (int note = 0; note < num_notes; ++note) {
    int semis = kScale[rng.UniformInt(0, 4)] + 12 * rng.UniformInt(0, 1);
    double freq = root * std::pow(2.0, semis / 12.0);
    double detune = 1.0 + rng.Uniform(-0.002, 0.002);
    int start = note * note_len;
    int len = note == num_notes - 1 ? n - start : note_len;
    for (int h = 1; h <= 8; ++h) {
      double f = freq * h * detune;
      if (f > 7500.0) break;
      double amp = 1.0 / h;
      double ph = rng.Uniform(0.0, 2.0 * M_PI);
      double inc = 2.0 * M_PI * f / sr;
      for (int i = 0; i < len; ++i) {
        double t = static_cast<double>(i) / sr;
        x[start + i] += amp * std::exp(-t / 0.35) * std::sin(ph + inc * i);
      }
    }
  }
  double lp = 0.0;
  double a = std::exp(-2.0 * M_PI * 2000.0 / sr);
  for (int i = 0; i < n; ++i) {
    lp = a * lp + (1.0 - a) * rng.Normal();
    x[i] += 0.004 * lp;
  }

  ApplyFades(&x, sr);
  NormalizePeak(&x, 32767.0 * rng.Uniform(0.40, 0.52));

  Waveform w;
  w.sample_rate = sr;
  w.samples = std::move(x);
  return w;
}

CorpusPaths GenerateCorpus(const std::string& out_dir,
                           const SynthConfig& config) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "speech");
  fs::create_directories(fs::path(out_dir) / "music");

  CorpusPaths paths;
  std::vector<std::pair<std::string, std::string>> train;
  for (int s = 0; s < config.num_speakers; ++s) {
    std::string label = SpeakerLabel(s, config.num_speakers);
    for (int u = 0; u < config.utterances_per_speaker; ++u) {
      Waveform wave = SynthSpeech(config, s, u);
      std::string file =
          (fs::path(out_dir) / "speech" / StrCat(label, "_u", u, ".wav"))
              .string();
      WriteWav(file, wave);
      paths.speech_paths.push_back(file);
      paths.speech_labels.push_back(label);
      train.emplace_back(fs::path(file).lexically_relative(out_dir).string(),
                         label);
    }
  }
  for (int c = 0; c < config.num_music_clips; ++c) {
    Waveform wave = SynthMusic(config, c);
    std::string file =
        (fs::path(out_dir) / "music" / StrCat("clip", c, ".wav")).string();
    WriteWav(file, wave);
    paths.music_paths.push_back(file);
  }
  paths.train_manifest = (fs::path(out_dir) / "train.csv").string();
  WriteTrainList(paths.train_manifest, train);
  return paths;
}

std::vector<std::pair<std::string, std::string>> ReadTrainList(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(StrCat("train list: cannot open '", path, "'"));
  std::filesystem::path dir = std::filesystem::path(path).parent_path();
  std::vector<std::pair<std::string, std::string>> items;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line == "path,label") continue;
    }
    size_t comma = line.rfind(',');
    if (comma == std::string::npos) {
      throw ValidationError(
          StrCat("train list: malformed line '", line, "' in '", path, "'"));
    }
    std::filesystem::path p(line.substr(0, comma));
    std::string resolved = p.is_absolute() ? p.string() : (dir / p).string();
    items.emplace_back(resolved, line.substr(comma + 1));
  }
  if (items.empty()) {
    throw ValidationError(StrCat("train list: '", path, "' has no entries"));
  }
  return items;
}

void WriteTrainList(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& items) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error(
        StrCat("train list: cannot open '", path, "' for write"));
  }
  out << "path,label\n";
  for (const auto& [p, label] : items) out << p << "," << label << "\n";
}

}  // namespace psyadv

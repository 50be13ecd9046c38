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

#include "psyadv/audio_io.h"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "psyadv/log.h"

namespace psyadv {
namespace {

uint32_t ReadU32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t ReadU16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void PutU32(std::string* s, uint32_t v) {
  s->push_back(static_cast<char>(v & 0xff));
  s->push_back(static_cast<char>((v >> 8) & 0xff));
  s->push_back(static_cast<char>((v >> 16) & 0xff));
  s->push_back(static_cast<char>((v >> 24) & 0xff));
}

void PutU16(std::string* s, uint16_t v) {
  s->push_back(static_cast<char>(v & 0xff));
  s->push_back(static_cast<char>((v >> 8) & 0xff));
}

std::string Trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Waveform ReadWav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(StrCat("read_wav: cannot open '", path, "'"));
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw ValidationError(
        StrCat("read_wav: '", path, "' is not a RIFF/WAVE file"));
  }

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  size_t data_off = 0, data_len = 0;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const uint8_t* hdr = bytes.data() + pos;
    uint32_t chunk_len = ReadU32(hdr + 4);
    size_t body = pos + 8;
    if (body + chunk_len > bytes.size()) {
      throw ValidationError(
          StrCat("read_wav: '", path, "' has a truncated chunk"));
    }
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_len < 16)
        throw ValidationError(StrCat("read_wav: '", path, "' fmt chunk too short"));
      format = ReadU16(bytes.data() + body);
      channels = ReadU16(bytes.data() + body + 2);
      rate = ReadU32(bytes.data() + body + 4);
      bits = ReadU16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data_off = body;
      data_len = chunk_len;
    }
    pos = body + chunk_len + (chunk_len & 1);
  }

  if (!have_fmt)
    throw ValidationError(StrCat("read_wav: '", path, "' is missing fmt chunk"));
  if (format != 1)
    throw ValidationError(StrCat("read_wav: '", path,
                                 "' has format tag ", format,
                                 ", only PCM (1) is supported"));
  if (channels != 1)
    throw ValidationError(StrCat("read_wav: '", path, "' has ", channels,
                                 " channels, only mono is supported"));
  if (bits != 16)
    throw ValidationError(StrCat("read_wav: '", path, "' has ", bits,
                                 " bits per sample, only 16 is supported"));
  if (rate != kSampleRate)
    throw ValidationError(StrCat("read_wav: '", path, "' has sample rate ",
                                 rate, ", expected ", kSampleRate));
  if (data_off == 0)
    throw ValidationError(StrCat("read_wav: '", path, "' is missing data chunk"));

  Waveform wave;
  wave.sample_rate = static_cast<int>(rate);
  size_t count = data_len / 2;
  wave.samples.resize(count);
  const uint8_t* d = bytes.data() + data_off;
  for (size_t i = 0; i < count; ++i) {
    int16_t v = static_cast<int16_t>(d[2 * i] | (d[2 * i + 1] << 8));
    wave.samples[i] = static_cast<double>(v);
  }
  return wave;
}

void WriteWav(const std::string& path, const Waveform& wave) {
  std::string out;
  uint32_t data_len = static_cast<uint32_t>(wave.samples.size() * 2);
  out.reserve(44 + data_len);
  out.append("RIFF");
  PutU32(&out, 36 + data_len);
  out.append("WAVE");
  out.append("fmt ");
  PutU32(&out, 16);
  PutU16(&out, 1);  // PCM
  PutU16(&out, 1);  // mono
  PutU32(&out, static_cast<uint32_t>(wave.sample_rate));
  PutU32(&out, static_cast<uint32_t>(wave.sample_rate * 2));  // byte rate
  PutU16(&out, 2);   // block align
  PutU16(&out, 16);  // bits
  out.append("data");
  PutU32(&out, data_len);
  for (double s : wave.samples) {
    double r = std::round(s);  // rounds half away from zero
    if (r > 32767.0) r = 32767.0;
    if (r < -32768.0) r = -32768.0;
    PutU16(&out, static_cast<uint16_t>(static_cast<int16_t>(r)));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(StrCat("write_wav: cannot open '", path, "'"));
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error(StrCat("write_wav: write failed for '", path, "'"));
}

std::vector<ManifestEntry> ReadManifest(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ValidationError(StrCat("manifest: cannot open '", path, "'"));
  std::filesystem::path dir = std::filesystem::path(path).parent_path();

  std::string line;
  if (!std::getline(in, line))
    throw ValidationError(StrCat("manifest: '", path, "' is empty"));
  if (Trim(line) != "path,true_label,target_label") {
    throw ValidationError(
        StrCat("manifest: '", path,
               "' must start with header 'path,true_label,target_label'"));
  }

  std::vector<ManifestEntry> entries;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = Trim(line);
    if (t.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(t);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(Trim(col));
    if (t.back() == ',') cols.push_back("");
    if (cols.size() != 3) {
      throw ValidationError(StrCat("manifest: '", path, "' line ", line_no,
                                   " has ", cols.size(),
                                   " columns, expected 3"));
    }
    ManifestEntry e;
    std::filesystem::path p(cols[0]);
    e.path = p.is_absolute() ? p.string() : (dir / p).string();
    e.true_label = cols[1];
    e.target_label = cols[2];
    if (e.target_label.empty() || e.true_label.empty() || cols[0].empty()) {
      throw ValidationError(
          StrCat("manifest: '", path, "' line ", line_no, " has empty fields"));
    }
    if (e.target_label == kNoLabel) {
      throw ValidationError(StrCat("manifest: '", path, "' line ", line_no,
                                   " target_label must name a speaker"));
    }
    if (e.true_label != kNoLabel && e.true_label == e.target_label) {
      throw ValidationError(StrCat("manifest: '", path, "' line ", line_no,
                                   " target_label equals true_label"));
    }
    entries.push_back(std::move(e));
  }
  if (entries.empty())
    throw ValidationError(StrCat("manifest: '", path, "' has no entries"));
  return entries;
}

void WriteManifest(const std::string& path,
                   const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error(StrCat("manifest: cannot open '", path, "' for write"));
  out << "path,true_label,target_label\n";
  for (const auto& e : entries) {
    out << e.path << "," << e.true_label << "," << e.target_label << "\n";
  }
}

}  // namespace psyadv

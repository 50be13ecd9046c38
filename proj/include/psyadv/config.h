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

#ifndef PSYADV_CONFIG_H_
#define PSYADV_CONFIG_H_

#include <cstdint>
#include <string>

#include "psyadv/attack.h"
#include "psyadv/train.h"

namespace psyadv {

// Run-wide settings, merged from defaults, then an optional JSON config
// file, then command-line flags (flags win).
struct RunConfig {
  uint64_t seed = 1;
  int workers = 1;

  int model_hidden = 512;
  int model_pooling = 1500;

  TrainConfig train;
  StftConfig stft;
  PsychoConfig psycho;
  Stage1Config stage1;
  Stage2Config stage2;
};

// Parses a JSON config file over the defaults.  Unknown keys raise
// ValidationError, as do malformed values.
RunConfig LoadRunConfig(const std::string& path);

// Basic sanity checks (positive step counts, budgets, factors in range).
void ValidateRunConfig(const RunConfig& config);

// Serializes the effective configuration (snapshot written next to results).
std::string RunConfigToJson(const RunConfig& config);

}  // namespace psyadv

#endif  // PSYADV_CONFIG_H_

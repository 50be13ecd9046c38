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

#include "psyadv/config.h"

#include <fstream>
#include <set>

#include "json.hpp"
#include "psyadv/log.h"

namespace psyadv {
namespace {

using nlohmann::json;

void CheckKeys(const json& j, const std::set<std::string>& allowed,
               const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ValidationError(
          StrCat("config: unknown key '", it.key(), "' in ", where));
    }
  }
}

template <typename T>
void Get(const json& j, const char* key, T* out) {
  if (!j.contains(key)) return;
  try {
    *out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(StrCat("config: bad value for '", key, "'"));
  }
}

}  // namespace

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(StrCat("config: cannot open '", path, "'"));
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError(StrCat("config: '", path, "' is not valid JSON: ",
                                 e.what()));
  }
  if (!j.is_object()) {
    throw ValidationError(StrCat("config: '", path, "' must be a JSON object"));
  }
  CheckKeys(j, {"seed", "workers", "model", "train", "stft", "psycho",
                "stage1", "stage2"},
            "top level");

  RunConfig c;
  Get(j, "seed", &c.seed);
  Get(j, "workers", &c.workers);
  if (j.contains("model")) {
    const json& m = j.at("model");
    CheckKeys(m, {"hidden", "pooling"}, "model");
    Get(m, "hidden", &c.model_hidden);
    Get(m, "pooling", &c.model_pooling);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    CheckKeys(t, {"epochs", "batch_size", "lr"}, "train");
    Get(t, "epochs", &c.train.epochs);
    Get(t, "batch_size", &c.train.batch_size);
    Get(t, "lr", &c.train.lr);
  }
  if (j.contains("stft")) {
    const json& s = j.at("stft");
    CheckKeys(s, {"window_length", "hop_length"}, "stft");
    Get(s, "window_length", &c.stft.window_length);
    Get(s, "hop_length", &c.stft.hop_length);
  }
  if (j.contains("psycho")) {
    const json& p = j.at("psycho");
    CheckKeys(p, {"nms_window_bark", "smooth_before_suppression"}, "psycho");
    Get(p, "nms_window_bark", &c.psycho.nms_window_bark);
    Get(p, "smooth_before_suppression", &c.psycho.smooth_before_suppression);
  }
  if (j.contains("stage1")) {
    const json& s = j.at("stage1");
    CheckKeys(s, {"lr", "steps", "eps0", "eps_decay"}, "stage1");
    Get(s, "lr", &c.stage1.lr);
    Get(s, "steps", &c.stage1.steps);
    Get(s, "eps0", &c.stage1.eps0);
    Get(s, "eps_decay", &c.stage1.eps_decay);
  }
  if (j.contains("stage2")) {
    const json& s = j.at("stage2");
    CheckKeys(s,
              {"lr", "steps", "alpha0", "alpha_up", "alpha_down", "use_adam"},
              "stage2");
    Get(s, "lr", &c.stage2.lr);
    Get(s, "steps", &c.stage2.steps);
    Get(s, "alpha0", &c.stage2.alpha0);
    Get(s, "alpha_up", &c.stage2.alpha_up);
    Get(s, "alpha_down", &c.stage2.alpha_down);
    Get(s, "use_adam", &c.stage2.use_adam);
  }
  ValidateRunConfig(c);
  return c;
}

void ValidateRunConfig(const RunConfig& c) {
  if (c.workers < 1) throw ValidationError("config: workers must be >= 1");
  if (c.model_hidden < 1 || c.model_pooling < 1) {
    throw ValidationError("config: model dims must be positive");
  }
  if (c.train.epochs < 0 || c.train.batch_size < 2 || c.train.lr <= 0) {
    throw ValidationError("config: bad train section");
  }
  if (c.stft.window_length < 2 ||
      (c.stft.window_length & (c.stft.window_length - 1)) != 0) {
    throw ValidationError("config: stft window_length must be a power of two");
  }
  if (c.stft.hop_length < 1 || c.stft.hop_length > c.stft.window_length) {
    throw ValidationError("config: bad stft hop_length");
  }
  if (c.psycho.nms_window_bark <= 0) {
    throw ValidationError("config: nms_window_bark must be positive");
  }
  if (c.stage1.steps < 1 || c.stage1.lr <= 0 || c.stage1.eps0 <= 0 ||
      c.stage1.eps_decay <= 0 || c.stage1.eps_decay > 1) {
    throw ValidationError("config: bad stage1 section");
  }
  if (c.stage2.steps < 1 || c.stage2.lr <= 0 || c.stage2.alpha0 <= 0 ||
      c.stage2.alpha_up < 1 || c.stage2.alpha_down <= 0 ||
      c.stage2.alpha_down > 1) {
    throw ValidationError("config: bad stage2 section");
  }
}

std::string RunConfigToJson(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["model"] = {{"hidden", c.model_hidden}, {"pooling", c.model_pooling}};
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"lr", c.train.lr}};
  j["stft"] = {{"window_length", c.stft.window_length},
               {"hop_length", c.stft.hop_length}};
  j["psycho"] = {{"nms_window_bark", c.psycho.nms_window_bark},
                 {"smooth_before_suppression",
                  c.psycho.smooth_before_suppression}};
  j["stage1"] = {{"lr", c.stage1.lr},
                 {"steps", c.stage1.steps},
                 {"eps0", c.stage1.eps0},
                 {"eps_decay", c.stage1.eps_decay}};
  j["stage2"] = {{"lr", c.stage2.lr},
                 {"steps", c.stage2.steps},
                 {"alpha0", c.stage2.alpha0},
                 {"alpha_up", c.stage2.alpha_up},
                 {"alpha_down", c.stage2.alpha_down},
                 {"use_adam", c.stage2.use_adam}};
  return j.dump(2) + "\n";
}

}  // namespace psyadv

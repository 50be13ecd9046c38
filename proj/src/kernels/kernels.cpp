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

#include "psyadv/kernels.h"

#include <cstdlib>
#include <cstring>

namespace psyadv {
namespace kernels {

namespace {

const Backend& Resolve() {
  const char* env = std::getenv("PSYADV_KERNELS");
  if (env != nullptr) {
    if (std::strcmp(env, "scalar") == 0) return Scalar();
    if (std::strcmp(env, "avx2") == 0 && Avx2() != nullptr) return *Avx2();
  }
  if (const Backend* b = Avx2()) return *b;
  return Scalar();
}

}  // namespace

const Backend& Active() {
  static const Backend& backend = Resolve();
  return backend;
}

}  // namespace kernels
}  // namespace psyadv

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

#ifndef PSYADV_CLI_H_
#define PSYADV_CLI_H_

namespace psyadv {

// Entry point behind the psyadv executable.  Subcommands: synth, train,
// attack, threshold, evaluate.  Returns 0 on success, 1 on runtime errors,
// 2 on usage or validation errors.
int CliMain(int argc, const char* const* argv);

}  // namespace psyadv

#endif  // PSYADV_CLI_H_

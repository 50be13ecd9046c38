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

#ifndef PSYADV_LOG_H_
#define PSYADV_LOG_H_

#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>

namespace psyadv {

// Error raised for malformed user input (bad flags, missing files, malformed
// manifests).  The CLI maps it to exit code 2; all other exceptions map to 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

template <typename... Args>
std::string StrCat(Args&&... args) {
  std::ostringstream ss;
  (ss << ... << args);
  return ss.str();
}

enum class LogLevel { kInfo, kWarning, kError };

// Serialized stderr logging.  Worker threads log progress lines; the mutex
// keeps them intact.
void LogLine(LogLevel level, const std::string& message);

template <typename... Args>
void LogInfo(Args&&... args) {
  LogLine(LogLevel::kInfo, StrCat(std::forward<Args>(args)...));
}

template <typename... Args>
void LogWarn(Args&&... args) {
  LogLine(LogLevel::kWarning, StrCat(std::forward<Args>(args)...));
}

}  // namespace psyadv

#endif  // PSYADV_LOG_H_
